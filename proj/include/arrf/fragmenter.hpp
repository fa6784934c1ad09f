#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>

#include "arrf/wire.hpp"

namespace arrf {

// Smallest supported response budget: header + question + one empty RRFRAG
// must always fit with room to spare.
inline constexpr std::size_t kMinMaxSize = 128;

inline constexpr std::size_t kDefaultCacheCapacity = 4096;

// Responder-side store of canonical record bytes keyed by RRID. Bounded,
// LRU-evicted, safe to share between request-handling threads.
class ResponderCache {
public:
    explicit ResponderCache(std::size_t capacity = kDefaultCacheCapacity);

    // Returns the RRID for these canonical bytes, inserting if needed.
    // An existing entry with identical bytes on the probe chain is reused so
    // an RRID never changes while the entry lives.
    std::uint16_t intern(const Bytes& canonical);

    // Snapshot of the stored bytes; refreshes LRU order.
    std::optional<std::shared_ptr<const Bytes>> get(std::uint16_t rrid);

    bool contains(std::uint16_t rrid) const;
    std::size_t size() const;
    std::size_t capacity() const { return capacity_; }

private:
    struct Entry {
        std::uint16_t rrid;
        std::shared_ptr<const Bytes> bytes;
    };

    mutable std::mutex mutex_;
    std::size_t capacity_;
    std::list<Entry> lru_;  // front = most recent
    std::unordered_map<std::uint16_t, std::list<Entry>::iterator> index_;
};

// Uncompressed NAME|TYPE|CLASS|TTL|RDLENGTH|RDATA serialization. This byte
// array is what CURIDX and RRSIZE index.
Bytes canonicalize_rr(const ResourceRecord& rr);

// Splits an oversized response into a first "map" response, interning the
// canonical bytes of every fragmented record into `cache`. Messages that fit
// are returned unchanged. Record selection converts the largest inline
// record to an RRFRAG until the skeleton fits, then distributes the
// remaining byte budget as first-chunk fragdata proportionally, largest
// first. OPT records are never fragmented. TC is set whenever the result
// carries at least one RRFRAG. Throws CannotFit when even the bare skeleton
// exceeds max_size.
DnsMessage fragment_response(const DnsMessage& msg, std::size_t max_size, ResponderCache& cache);

// Serves a fragment query from the cache: each descriptor in the query's
// additional section yields an RRFRAG in the answers section with fragdata =
// canonical[curidx, curidx + min(requested-2, rrsize-curidx)), truncated
// further if the response would exceed max_size (never silently dropped:
// unsent bytes stay requestable). Unknown RRID or curidx >= rrsize yields a
// FORMERR response. TC is set when any emitted fragment is partial.
DnsMessage handle_fragment_query(const DnsMessage& query, std::size_t max_size,
                                 ResponderCache& cache);

}  // namespace arrf
