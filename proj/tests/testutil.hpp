#pragma once

#include <random>
#include <string>
#include <vector>

#include "arrf/fragmenter.hpp"
#include "arrf/reassembler.hpp"
#include "arrf/wire.hpp"

namespace arrf::testutil {

struct Rng {
    std::mt19937 eng;

    explicit Rng(std::uint32_t seed) : eng(seed) {}

    std::size_t range(std::size_t lo, std::size_t hi) {  // inclusive
        return std::uniform_int_distribution<std::size_t>(lo, hi)(eng);
    }
    bool chance(double p) { return std::uniform_real_distribution<>(0, 1)(eng) < p; }
    Bytes bytes(std::size_t n) {
        Bytes out(n);
        for (auto& b : out) b = static_cast<std::uint8_t>(eng());
        return out;
    }
    DnsName name() {
        static const char* words[] = {"a", "ns", "www", "zone", "sig", "test", "example", "net"};
        DnsName out;
        std::size_t labels = range(1, 3);
        for (std::size_t i = 0; i < labels; ++i) out.append_label(words[range(0, 7)]);
        return out;
    }
};

// A randomized DNS response: 1 question, 0-5 records per section plus an
// optional OPT, rdata sized so the whole message lands near target_size.
inline DnsMessage random_response(Rng& rng, std::size_t target_size) {
    DnsMessage msg;
    msg.header.id = static_cast<std::uint16_t>(rng.range(0, 0xFFFF));
    msg.header.set_qr(true);

    Question q;
    q.qname = rng.name();
    q.qtype = kTypeA;
    msg.questions.push_back(q);

    std::vector<std::vector<SectionEntry>*> sections{&msg.answers, &msg.authority,
                                                     &msg.additional};
    // 0-8 records per section, but capped at 15 overall so the bare skeleton
    // (header + question + 15 RRFRAGs + OPT) stays under the 256-byte floor.
    std::size_t counts[3] = {rng.range(0, 8), rng.range(0, 8), rng.range(0, 8)};
    std::size_t total_records = counts[0] + counts[1] + counts[2];
    for (std::size_t s = 0; total_records > 15; s = (s + 1) % 3) {
        if (counts[s] > 0) {
            --counts[s];
            --total_records;
        }
    }
    if (total_records == 0) {
        counts[0] = 1;
        total_records = 1;
    }

    const bool with_opt = rng.chance(0.7);
    std::size_t fixed = encoded_size(msg) + (with_opt ? 11 : 0);
    std::size_t record_budget = target_size > fixed ? target_size - fixed : 0;

    std::vector<std::size_t> rdata_sizes(total_records, 0);
    // Uneven split so some records dwarf others, as signatures do.
    std::size_t remaining = record_budget;
    for (std::size_t i = 0; i < total_records; ++i) {
        std::size_t share = i + 1 == total_records ? remaining
                                                   : rng.range(0, remaining / (total_records - i));
        rdata_sizes[i] = std::min<std::size_t>(share, 60000);
        remaining -= rdata_sizes[i];
    }

    std::size_t k = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t i = 0; i < counts[s]; ++i, ++k) {
            ResourceRecord rr;
            rr.name = rng.name();
            rr.rrtype = static_cast<std::uint16_t>(rng.range(1, 300));
            if (rr.rrtype == kTypeOpt) rr.rrtype = kTypeRrsig;
            rr.ttl = static_cast<std::uint32_t>(rng.range(0, 86400));
            std::size_t overhead = rr.name.encoded_size() + 10;
            std::size_t sz = rdata_sizes[k] > overhead ? rdata_sizes[k] - overhead : 0;
            rr.rdata = rng.bytes(std::min<std::size_t>(sz, 65535));
            sections[s]->push_back(std::move(rr));
        }
    }
    if (with_opt) {
        OptRecord opt;
        opt.udp_payload_size = 4096;
        msg.additional.push_back(opt);
    }
    return msg;
}

struct ProtocolStats {
    std::size_t exchanges = 0;         // initial exchange + fragment queries
    std::size_t batches = 0;           // fragment batches sent
    std::size_t max_datagram = 0;      // largest DNS payload on the wire
    std::size_t max_query_payload = 0; // largest fragment-query payload
};

// Full requester/responder cycle over real bytes. Returns the message the
// requester ends up with (the input itself when no fragmentation happened).
inline DnsMessage run_protocol(const DnsMessage& original, std::size_t max_udp,
                               Strategy strategy, ResponderCache& cache,
                               ProtocolStats* stats = nullptr,
                               std::uint16_t rrfrag_type = kDefaultRrfragType,
                               std::size_t budget = kDefaultReassemblyBudget) {
    ProtocolStats local;
    ProtocolStats& st = stats ? *stats : local;

    DnsMessage first = fragment_response(original, max_udp, cache);
    Bytes first_wire = serialize_message(first, rrfrag_type);
    st.exchanges = 1;
    st.max_datagram = std::max(st.max_datagram, first_wire.size());

    DnsMessage seen = parse_message(first_wire, rrfrag_type);
    ReassemblyOptions opts;
    opts.max_size = max_udp;
    opts.strategy = strategy;
    opts.budget = budget;
    opts.rrfrag_type = rrfrag_type;

    auto outcome = Reassembler::inspect_response(seen, opts);
    if (auto* done = std::get_if<DnsMessage>(&outcome)) return *done;

    auto& pending = std::get<Pending>(outcome);
    FragmentRequestBatch batch = std::move(pending.batch);
    ReassemblyState& state = *pending.state;
    while (true) {
        if (batch.empty()) throw std::logic_error("protocol stalled");
        ++st.batches;
        std::vector<Bytes> replies;
        for (const auto& q : batch.queries) {
            Bytes q_wire = serialize_message(q, rrfrag_type);
            st.max_query_payload = std::max(st.max_query_payload, q_wire.size());
            DnsMessage resp = handle_fragment_query(parse_message(q_wire, rrfrag_type),
                                                    max_udp, cache);
            Bytes r_wire = serialize_message(resp, rrfrag_type);
            st.max_datagram = std::max(st.max_datagram, std::max(q_wire.size(), r_wire.size()));
            ++st.exchanges;
            replies.push_back(std::move(r_wire));
        }
        FragmentRequestBatch next;
        for (const auto& r : replies) {
            auto absorbed =
                Reassembler::absorb_fragment_response(state, parse_message(r, rrfrag_type));
            if (absorbed.status == AbsorbOutcome::Status::kComplete) return *absorbed.message;
            for (auto& nq : absorbed.batch.queries) next.queries.push_back(std::move(nq));
        }
        batch = std::move(next);
    }
}

// Independent exchange-count oracle: replays the packing and planning
// arithmetic from first principles (its own canonical assembly, its own
// FNV fold) without touching the fragmenter or reassembler.
inline std::size_t oracle_exchanges(const DnsMessage& msg, std::size_t max_udp) {
    std::size_t size = 12;
    for (const auto& q : msg.questions) size += q.qname.encoded_size() + 4;

    struct Rec {
        Bytes canonical;
        int order;
    };
    std::vector<Rec> records;
    int order = 0;
    for (const auto* section : {&msg.answers, &msg.authority, &msg.additional}) {
        for (const auto& e : *section) {
            if (const auto* rr = std::get_if<ResourceRecord>(&e)) {
                Bytes canonical;
                for (const auto& label : rr->name.labels()) {
                    canonical.push_back(static_cast<std::uint8_t>(label.size()));
                    canonical.insert(canonical.end(), label.begin(), label.end());
                }
                canonical.push_back(0);
                auto push16 = [&](std::uint16_t v) {
                    canonical.push_back(static_cast<std::uint8_t>(v >> 8));
                    canonical.push_back(static_cast<std::uint8_t>(v));
                };
                push16(rr->rrtype);
                push16(rr->rrclass);
                canonical.push_back(static_cast<std::uint8_t>(rr->ttl >> 24));
                canonical.push_back(static_cast<std::uint8_t>(rr->ttl >> 16));
                canonical.push_back(static_cast<std::uint8_t>(rr->ttl >> 8));
                canonical.push_back(static_cast<std::uint8_t>(rr->ttl));
                push16(static_cast<std::uint16_t>(rr->rdata.size()));
                canonical.insert(canonical.end(), rr->rdata.begin(), rr->rdata.end());
                size += canonical.size();
                if (canonical.size() > 13 && canonical.size() <= 0xFFFF)
                    records.push_back(Rec{std::move(canonical), order});
            } else if (const auto* opt = std::get_if<OptRecord>(&e)) {
                size += 11 + opt->rdata.size();
            }
        }
        ++order;
    }
    if (size <= max_udp) return 1;

    std::stable_sort(records.begin(), records.end(), [](const Rec& a, const Rec& b) {
        if (a.canonical.size() != b.canonical.size())
            return a.canonical.size() > b.canonical.size();
        return a.order < b.order;
    });
    std::size_t converted = 0;
    while (size > max_udp && converted < records.size()) {
        size -= records[converted].canonical.size() - 13;
        ++converted;
    }
    if (size > max_udp) throw std::runtime_error("oracle: cannot fit");

    // First-chunk budget, proportional largest-first with remainder pass.
    std::size_t budget = max_udp - size;
    std::size_t total = 0;
    for (std::size_t i = 0; i < converted; ++i) total += records[i].canonical.size();
    std::vector<std::size_t> share(converted, 0);
    std::size_t given = 0;
    for (std::size_t i = 0; i < converted; ++i) {
        share[i] = std::min(budget * records[i].canonical.size() / total,
                            records[i].canonical.size());
        given += share[i];
    }
    for (std::size_t i = 0; i < converted && given < budget; ++i) {
        std::size_t add = std::min(budget - given, records[i].canonical.size() - share[i]);
        share[i] += add;
        given += add;
    }

    // RRID assignment: FNV-1a 16-bit fold plus linear probe, in conversion
    // order; identical bytes share one id and thus one buffer.
    auto fold = [](const Bytes& b) {
        std::uint32_t h = 0x811c9dc5u;
        for (std::uint8_t byte : b) {
            h ^= byte;
            h *= 16777619u;
        }
        return static_cast<std::uint16_t>((h >> 16) ^ (h & 0xFFFFu));
    };
    std::map<std::uint16_t, const Bytes*> assigned;
    std::map<std::uint16_t, std::size_t> delivered;  // rrid -> best first chunk
    for (std::size_t i = 0; i < converted; ++i) {
        std::uint16_t rrid = fold(records[i].canonical);
        for (;;) {
            auto it = assigned.find(rrid);
            if (it == assigned.end()) {
                assigned[rrid] = &records[i].canonical;
                break;
            }
            if (*it->second == records[i].canonical) break;
            ++rrid;
        }
        auto [it, fresh] = delivered.try_emplace(rrid, share[i]);
        if (!fresh) it->second = std::max(it->second, share[i]);
    }

    // Query planning: ascending rrid, sum(13 + chunk) per query bounded by
    // max_udp minus the response skeleton (17) and headroom (64).
    const std::size_t per_query = max_udp - 17 - 64;
    std::size_t exchanges = 1;
    std::size_t room = 0;
    for (const auto& [rrid, got] : delivered) {
        std::size_t rem = assigned.at(rrid)->size() - got;
        while (rem > 0) {
            if (room < 14) {
                ++exchanges;
                room = per_query;
            }
            std::size_t take = std::min(rem, room - 13);
            rem -= take;
            room -= 13 + take;
        }
    }
    return exchanges;
}

}  // namespace arrf::testutil
