#include "arrf/fragmenter.hpp"

#include <algorithm>
#include <stdexcept>

#include "arrf/rrfrag.hpp"

namespace arrf {

ResponderCache::ResponderCache(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

std::uint16_t ResponderCache::intern(const Bytes& canonical) {
    std::lock_guard lock(mutex_);
    std::uint16_t rrid = fnv16(canonical);
    for (unsigned probes = 0; probes < 65536; ++probes, ++rrid) {
        auto it = index_.find(rrid);
        if (it == index_.end()) {
            lru_.push_front(Entry{rrid, std::make_shared<const Bytes>(canonical)});
            index_[rrid] = lru_.begin();
            if (lru_.size() > capacity_) {
                index_.erase(lru_.back().rrid);
                lru_.pop_back();
            }
            return rrid;
        }
        if (*it->second->bytes == canonical) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return rrid;
        }
    }
    throw std::runtime_error("rrid space exhausted");
}

std::optional<std::shared_ptr<const Bytes>> ResponderCache::get(std::uint16_t rrid) {
    std::lock_guard lock(mutex_);
    auto it = index_.find(rrid);
    if (it == index_.end()) return std::nullopt;
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->bytes;
}

bool ResponderCache::contains(std::uint16_t rrid) const {
    std::lock_guard lock(mutex_);
    return index_.count(rrid) != 0;
}

std::size_t ResponderCache::size() const {
    std::lock_guard lock(mutex_);
    return lru_.size();
}

Bytes canonicalize_rr(const ResourceRecord& rr) {
    Bytes out;
    out.reserve(rr.encoded_size());
    detail::put_name(out, rr.name);
    detail::put_u16(out, rr.rrtype);
    detail::put_u16(out, rr.rrclass);
    detail::put_u32(out, rr.ttl);
    detail::put_u16(out, static_cast<std::uint16_t>(rr.rdata.size()));
    out.insert(out.end(), rr.rdata.begin(), rr.rdata.end());
    return out;
}

namespace {

struct Candidate {
    std::vector<SectionEntry>* section;
    std::size_t index;
    int section_order;
    Bytes canonical;
};

}  // namespace

DnsMessage fragment_response(const DnsMessage& msg, std::size_t max_size, ResponderCache& cache) {
    if (max_size < kMinMaxSize) throw std::invalid_argument("max_size below 128");
    if (!msg.header.qr()) throw std::invalid_argument("fragment_response expects a response");

    std::size_t size = encoded_size(msg);
    if (size <= max_size) return msg;

    DnsMessage first = msg;

    // Every plain record big enough that swapping it for a 13-byte RRFRAG
    // shrinks the message. OPT stays inline always.
    std::vector<Candidate> candidates;
    int order = 0;
    for (auto* section : {&first.answers, &first.authority, &first.additional}) {
        for (std::size_t i = 0; i < section->size(); ++i) {
            const auto* rr = std::get_if<ResourceRecord>(&(*section)[i]);
            if (!rr) continue;
            Bytes canonical = canonicalize_rr(*rr);
            // RRSIZE is 16-bit; a record whose canonical form cannot be
            // indexed stays inline. Too-small records gain nothing either.
            if (canonical.size() <= 13 || canonical.size() > 0xFFFF) continue;
            candidates.push_back(Candidate{section, i, order, std::move(canonical)});
        }
        ++order;
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.canonical.size() != b.canonical.size())
            return a.canonical.size() > b.canonical.size();
        if (a.section_order != b.section_order) return a.section_order < b.section_order;
        return a.index < b.index;
    });

    std::size_t converted = 0;
    while (size > max_size && converted < candidates.size()) {
        size -= candidates[converted].canonical.size() - 13;
        ++converted;
    }
    if (size > max_size)
        throw CannotFit("skeleton exceeds max_size with all records fragmented");

    // Spread the leftover budget as first-chunk fragdata, largest record
    // first, proportional to record size.
    std::size_t budget = max_size - size;
    std::size_t total = 0;
    for (std::size_t i = 0; i < converted; ++i) total += candidates[i].canonical.size();
    std::vector<std::size_t> share(converted, 0);
    std::size_t given = 0;
    for (std::size_t i = 0; i < converted; ++i) {
        share[i] = std::min(budget * candidates[i].canonical.size() / total,
                            candidates[i].canonical.size());
        given += share[i];
    }
    for (std::size_t i = 0; i < converted && given < budget; ++i) {
        std::size_t add = std::min(budget - given, candidates[i].canonical.size() - share[i]);
        share[i] += add;
        given += add;
    }

    for (std::size_t i = 0; i < converted; ++i) {
        auto& cand = candidates[i];
        const std::uint16_t rrid = cache.intern(cand.canonical);
        Bytes prefix(cand.canonical.begin(), cand.canonical.begin() + share[i]);
        (*cand.section)[cand.index] = RrFrag::chunk(
            rrid, 0, static_cast<std::uint16_t>(cand.canonical.size()), std::move(prefix));
    }

    first.header.set_tc(true);
    return first;
}

DnsMessage handle_fragment_query(const DnsMessage& query, std::size_t max_size,
                                 ResponderCache& cache) {
    if (query.header.qr()) throw std::invalid_argument("expected a query");

    DnsMessage resp;
    resp.header.id = query.header.id;
    resp.header.set_qr(true);
    resp.questions = query.questions;

    struct Wanted {
        const RrFrag* descriptor;
        std::shared_ptr<const Bytes> canonical;
    };
    std::vector<Wanted> wanted;
    for (const auto& entry : query.additional) {
        const auto* frag = std::get_if<RrFrag>(&entry);
        if (!frag) continue;
        auto bytes = cache.get(frag->rrid);
        if (!bytes || frag->curidx >= (*bytes)->size()) {
            resp.header.set_rcode(kRcodeFormErr);
            return resp;
        }
        wanted.push_back(Wanted{frag, *bytes});
    }
    if (wanted.empty()) throw std::invalid_argument("query carries no RRFRAG descriptor");

    std::size_t used = kHeaderSize;
    for (const auto& q : resp.questions) used += q.encoded_size();

    bool truncated = false;
    for (const auto& w : wanted) {
        if (used + 13 > max_size) {
            truncated = true;
            break;
        }
        const std::size_t rrsize = w.canonical->size();
        const std::size_t requested = w.descriptor->fragsize - 2u;
        std::size_t take = std::min(requested, rrsize - w.descriptor->curidx);
        take = std::min(take, max_size - used - 13);
        Bytes data(w.canonical->begin() + w.descriptor->curidx,
                   w.canonical->begin() + w.descriptor->curidx + take);
        resp.answers.push_back(RrFrag::chunk(w.descriptor->rrid, w.descriptor->curidx,
                                             static_cast<std::uint16_t>(rrsize),
                                             std::move(data)));
        used += 13 + take;
        if (w.descriptor->curidx + take < rrsize) truncated = true;
    }
    resp.header.set_tc(truncated);
    return resp;
}

}  // namespace arrf
