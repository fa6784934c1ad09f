#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "arrf/wire.hpp"

namespace arrf {

enum class Strategy { kSequential, kParallel };

inline constexpr std::size_t kDefaultReassemblyBudget = 131072;
inline constexpr int kDefaultRetryTimeoutMs = 800;  // BIND9's retry default
inline constexpr int kDefaultMaxRetries = 2;

// Fixed framing of a fragment response: header + root/RRFRAG question. Each
// chunk adds 13 bytes of record framing on top of its fragdata.
inline constexpr std::size_t kFragmentResponseSkeleton = kHeaderSize + 5;
// Reserved slack between a planned response and max_size.
inline constexpr std::size_t kResponseHeadroom = 64;

struct ReassemblyOptions {
    std::size_t max_size = 1232;
    Strategy strategy = Strategy::kParallel;
    std::size_t budget = kDefaultReassemblyBudget;
    std::uint16_t rrfrag_type = kDefaultRrfragType;
};

struct FragmentRequestBatch {
    std::vector<DnsMessage> queries;

    bool empty() const { return queries.empty(); }
    std::size_t size() const { return queries.size(); }
};

// Per-transaction reassembly state: the map skeleton plus one fill buffer
// per RRID. Owned by a single logical transaction; not thread-safe.
class ReassemblyState {
public:
    bool complete() const;

    // Splices the reconstructed records into their original section slots
    // and clears TC. Only valid when complete().
    DnsMessage reassemble() const;

    // Plans queries covering all missing ranges. Sequential mode returns
    // just the first; parallel mode returns the whole set. The planned
    // queries are recorded as outstanding.
    FragmentRequestBatch plan_batch();

    // Queries sent but not yet answered (for retry on timeout).
    std::vector<DnsMessage> outstanding_queries() const;

    std::uint16_t transaction_id() const { return skeleton_.header.id; }
    const DnsMessage& skeleton() const { return skeleton_; }
    std::size_t fragment_queries_sent() const { return queries_sent_; }

private:
    friend class Reassembler;

    struct Buffer {
        std::uint16_t rrsize = 0;
        Bytes data;
        // Filled byte ranges, disjoint, sorted: offset -> end.
        std::map<std::uint32_t, std::uint32_t> filled;
    };

    struct PendingQuery {
        DnsMessage query;
        // (rrid, offset, length) chunks requested by this query.
        std::vector<std::tuple<std::uint16_t, std::uint32_t, std::uint32_t>> chunks;
    };

    ReassemblyOptions opts_;
    DnsMessage skeleton_;
    std::map<std::uint16_t, Buffer> buffers_;
    std::map<std::uint16_t, PendingQuery> outstanding_;
    std::uint16_t next_query_id_ = 0;
    std::size_t queries_sent_ = 0;

    std::vector<std::pair<std::uint32_t, std::uint32_t>> missing_ranges(const Buffer& b) const;
    bool fill(Buffer& b, std::uint32_t offset, std::span<const std::uint8_t> bytes,
              bool& mismatch);
};

struct Pending {
    std::unique_ptr<ReassemblyState> state;
    FragmentRequestBatch batch;
};

// Either the response itself (no RRFRAGs present) or a pending reassembly.
using InspectOutcome = std::variant<DnsMessage, Pending>;

struct AbsorbOutcome {
    enum class Status {
        kComplete,         // message holds the reconstruction
        kPending,          // batch holds follow-up queries (possibly none)
        kResponseIgnored,  // unexpected id / mismatching overlap; keep waiting
    };
    Status status;
    std::optional<DnsMessage> message;
    FragmentRequestBatch batch;
    std::string note;  // why a response was ignored
};

class Reassembler {
public:
    // Examines a response: passthrough when it carries no RRFRAG, otherwise
    // builds state, stores already-delivered bytes, and plans the first
    // batch. Throws BudgetExceeded when the map advertises more than
    // opts.budget bytes and MalformedRrFrag on inconsistent fragments.
    static InspectOutcome inspect_response(const DnsMessage& resp, const ReassemblyOptions& opts);

    // Absorbs one fragment response. Responses with unknown transaction ids
    // or conflicting overlap bytes are ignored (discard, keep waiting).
    // Throws FormErrReceived when the responder signals an error rcode;
    // the state is then dead and the caller falls back.
    static AbsorbOutcome absorb_fragment_response(ReassemblyState& state, const DnsMessage& resp);
};

}  // namespace arrf
