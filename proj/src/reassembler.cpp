#include "arrf/reassembler.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace arrf {

namespace {

// Canonical record bytes are always uncompressed, so a flat walk suffices.
ResourceRecord parse_canonical_rr(const Bytes& buf) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (pos + n > buf.size()) throw MalformedMessage("canonical record underrun");
    };
    ResourceRecord rr;
    for (;;) {
        need(1);
        std::uint8_t len = buf[pos++];
        if (len == 0) break;
        if (len & 0xC0) throw MalformedMessage("compressed name in canonical record");
        need(len);
        rr.name.append_label(
            std::string_view(reinterpret_cast<const char*>(buf.data() + pos), len));
        pos += len;
    }
    need(10);
    auto u16 = [&] {
        std::uint16_t v = static_cast<std::uint16_t>(buf[pos] << 8 | buf[pos + 1]);
        pos += 2;
        return v;
    };
    rr.rrtype = u16();
    rr.rrclass = u16();
    rr.ttl = static_cast<std::uint32_t>(buf[pos]) << 24 |
             static_cast<std::uint32_t>(buf[pos + 1]) << 16 |
             static_cast<std::uint32_t>(buf[pos + 2]) << 8 |
             static_cast<std::uint32_t>(buf[pos + 3]);
    pos += 4;
    std::uint16_t rdlen = u16();
    if (pos + rdlen != buf.size())
        throw MalformedMessage("canonical record length does not match RDLENGTH");
    rr.rdata.assign(buf.begin() + pos, buf.end());
    return rr;
}

}  // namespace

bool ReassemblyState::complete() const {
    for (const auto& [rrid, buf] : buffers_) {
        if (buf.filled.size() != 1) return false;
        const auto& [start, end] = *buf.filled.begin();
        if (start != 0 || end != buf.rrsize) return false;
    }
    return true;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> ReassemblyState::missing_ranges(
    const Buffer& b) const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    std::uint32_t cursor = 0;
    for (const auto& [start, end] : b.filled) {
        if (start > cursor) out.emplace_back(cursor, start);
        cursor = std::max(cursor, end);
    }
    if (cursor < b.rrsize) out.emplace_back(cursor, b.rrsize);
    return out;
}

bool ReassemblyState::fill(Buffer& b, std::uint32_t offset, std::span<const std::uint8_t> bytes,
                           bool& mismatch) {
    mismatch = false;
    if (bytes.empty()) return true;
    const std::uint32_t end = offset + static_cast<std::uint32_t>(bytes.size());

    // Overlapping spans must agree byte for byte.
    for (const auto& [s, e] : b.filled) {
        const std::uint32_t lo = std::max(s, offset);
        const std::uint32_t hi = std::min(e, end);
        if (lo >= hi) continue;
        if (std::memcmp(b.data.data() + lo, bytes.data() + (lo - offset), hi - lo) != 0) {
            mismatch = true;
            return false;
        }
    }

    std::copy(bytes.begin(), bytes.end(), b.data.begin() + offset);

    // Merge [offset, end) into the filled set.
    auto it = b.filled.lower_bound(offset);
    if (it != b.filled.begin()) {
        auto prev = std::prev(it);
        if (prev->second >= offset) it = prev;
    }
    std::uint32_t new_start = offset, new_end = end;
    while (it != b.filled.end() && it->first <= new_end) {
        new_start = std::min(new_start, it->first);
        new_end = std::max(new_end, it->second);
        it = b.filled.erase(it);
    }
    b.filled[new_start] = new_end;
    return true;
}

DnsMessage ReassemblyState::reassemble() const {
    if (!complete()) throw std::logic_error("reassemble called on incomplete state");
    DnsMessage out = skeleton_;
    for (auto* section : {&out.answers, &out.authority, &out.additional}) {
        for (auto& entry : *section) {
            const auto* frag = std::get_if<RrFrag>(&entry);
            if (!frag) continue;
            entry = parse_canonical_rr(buffers_.at(frag->rrid).data);
        }
    }
    out.header.set_tc(false);
    return out;
}

FragmentRequestBatch ReassemblyState::plan_batch() {
    if (!outstanding_.empty())
        throw std::logic_error("plan_batch with queries still outstanding");

    FragmentRequestBatch batch;
    const std::size_t per_query =
        opts_.max_size - kFragmentResponseSkeleton - kResponseHeadroom;

    auto range_it = buffers_.begin();
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges;
    std::uint16_t range_rrid = 0;

    struct Chunk {
        std::uint16_t rrid;
        std::uint32_t offset;
        std::uint32_t length;
        std::uint16_t rrsize;
    };
    std::vector<Chunk> chunks;
    std::size_t budget = per_query;

    auto flush_query = [&] {
        if (chunks.empty()) return;
        DnsMessage q;
        while (outstanding_.count(next_query_id_)) ++next_query_id_;
        q.header.id = next_query_id_++;
        Question question;
        question.qname = DnsName::root();
        question.qtype = opts_.rrfrag_type;
        question.qclass = kClassIn;
        q.questions.push_back(std::move(question));
        PendingQuery pending;
        for (const auto& c : chunks)
            q.additional.push_back(RrFrag::request(c.rrid, c.offset, c.rrsize,
                                                   static_cast<std::uint16_t>(c.length + 2)));
        OptRecord opt;
        opt.udp_payload_size =
            static_cast<std::uint16_t>(std::min<std::size_t>(opts_.max_size, 0xFFFF));
        q.additional.push_back(opt);
        pending.query = q;
        for (const auto& c : chunks) pending.chunks.emplace_back(c.rrid, c.offset, c.length);
        outstanding_[q.header.id] = std::move(pending);
        batch.queries.push_back(std::move(q));
        ++queries_sent_;
        chunks.clear();
        budget = per_query;
    };

    for (;;) {
        if (ranges.empty()) {
            if (range_it == buffers_.end()) break;
            ranges = missing_ranges(range_it->second);
            range_rrid = range_it->first;
            ++range_it;
            continue;
        }
        auto& [start, end] = ranges.front();
        if (budget < 13 + 1) {
            flush_query();
            if (opts_.strategy == Strategy::kSequential && !batch.queries.empty()) return batch;
            continue;
        }
        const std::uint32_t take =
            std::min<std::uint32_t>(end - start, static_cast<std::uint32_t>(budget - 13));
        const std::uint16_t rrsize =
            static_cast<std::uint16_t>(buffers_.at(range_rrid).rrsize);
        chunks.push_back(Chunk{range_rrid, start, take, rrsize});
        budget -= 13 + take;
        start += take;
        if (start >= end) ranges.erase(ranges.begin());
    }
    flush_query();
    return batch;
}

std::vector<DnsMessage> ReassemblyState::outstanding_queries() const {
    std::vector<DnsMessage> out;
    out.reserve(outstanding_.size());
    for (const auto& [id, pending] : outstanding_) out.push_back(pending.query);
    return out;
}

InspectOutcome Reassembler::inspect_response(const DnsMessage& resp,
                                             const ReassemblyOptions& opts) {
    if (!contains_rrfrag(resp)) return resp;

    auto state = std::make_unique<ReassemblyState>();
    state->opts_ = opts;
    state->skeleton_ = resp;
    state->next_query_id_ = static_cast<std::uint16_t>(resp.header.id + 1);

    std::size_t advertised = 0;
    for (const auto* section : {&resp.answers, &resp.authority, &resp.additional}) {
        for (const auto& entry : *section) {
            const auto* frag = std::get_if<RrFrag>(&entry);
            if (!frag) continue;
            if (frag->curidx + frag->fragdata.size() > frag->rrsize)
                throw MalformedRrFrag("fragment exceeds advertised rrsize");
            auto [it, inserted] = state->buffers_.try_emplace(frag->rrid);
            if (inserted) {
                advertised += frag->rrsize;
                if (advertised > opts.budget)
                    throw BudgetExceeded("map advertises more than the reassembly budget");
                it->second.rrsize = frag->rrsize;
                it->second.data.assign(frag->rrsize, 0);
            } else if (it->second.rrsize != frag->rrsize) {
                throw MalformedRrFrag("conflicting rrsize for one RRID");
            }
            bool mismatch = false;
            if (!state->fill(it->second, frag->curidx, frag->fragdata, mismatch))
                throw MalformedRrFrag("conflicting fragment bytes in map");
        }
    }

    if (state->complete()) return state->reassemble();

    FragmentRequestBatch batch = state->plan_batch();
    return Pending{std::move(state), std::move(batch)};
}

AbsorbOutcome Reassembler::absorb_fragment_response(ReassemblyState& state,
                                                    const DnsMessage& resp) {
    AbsorbOutcome out{AbsorbOutcome::Status::kResponseIgnored, std::nullopt, {}, {}};

    auto pending_it = state.outstanding_.find(resp.header.id);
    if (pending_it == state.outstanding_.end()) {
        out.note = "unexpected transaction id";
        return out;
    }
    if (resp.header.rcode() != kRcodeNoError)
        throw FormErrReceived("responder signaled rcode " + std::to_string(resp.header.rcode()));

    // Validate overlaps before touching any buffer: a disagreeing response
    // is dropped whole.
    for (const auto& entry : resp.answers) {
        const auto* frag = std::get_if<RrFrag>(&entry);
        if (!frag) continue;
        auto buf_it = state.buffers_.find(frag->rrid);
        if (buf_it == state.buffers_.end()) continue;  // unexpected rrid: skip
        const auto& buf = buf_it->second;
        if (frag->curidx + frag->fragdata.size() > buf.rrsize) continue;  // malformed: skip
        for (const auto& [s, e] : buf.filled) {
            const std::uint32_t lo = std::max<std::uint32_t>(s, frag->curidx);
            const std::uint32_t hi = std::min<std::uint32_t>(
                e, frag->curidx + static_cast<std::uint32_t>(frag->fragdata.size()));
            if (lo >= hi) continue;
            if (std::memcmp(buf.data.data() + lo, frag->fragdata.data() + (lo - frag->curidx),
                            hi - lo) != 0) {
                out.note = "overlap mismatch";
                return out;
            }
        }
    }

    for (const auto& entry : resp.answers) {
        const auto* frag = std::get_if<RrFrag>(&entry);
        if (!frag) continue;
        auto buf_it = state.buffers_.find(frag->rrid);
        if (buf_it == state.buffers_.end()) continue;
        if (frag->curidx + frag->fragdata.size() > buf_it->second.rrsize) continue;
        bool mismatch = false;
        if (!state.fill(buf_it->second, frag->curidx, frag->fragdata, mismatch)) {
            out.note = "conflicting fragments within one response";
            return out;
        }
    }

    state.outstanding_.erase(pending_it);

    if (state.complete()) {
        out.status = AbsorbOutcome::Status::kComplete;
        out.message = state.reassemble();
        return out;
    }

    out.status = AbsorbOutcome::Status::kPending;
    if (state.opts_.strategy == Strategy::kSequential || state.outstanding_.empty())
        out.batch = state.plan_batch();
    return out;
}

}  // namespace arrf
