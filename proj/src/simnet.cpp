#include "arrf/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "arrf/fragmenter.hpp"

namespace arrf::sim {

std::string mechanism_name(Mechanism m) {
    switch (m) {
        case Mechanism::kStandardDns: return "standard_dns";
        case Mechanism::kUdpOnly: return "udp_only";
        case Mechanism::kArrfSequential: return "arrf_sequential";
        case Mechanism::kArrfParallel: return "arrf_parallel";
    }
    return "?";
}

std::optional<Mechanism> mechanism_from_name(const std::string& name) {
    if (name == "standard_dns") return Mechanism::kStandardDns;
    if (name == "udp_only") return Mechanism::kUdpOnly;
    if (name == "arrf_sequential") return Mechanism::kArrfSequential;
    if (name == "arrf_parallel") return Mechanism::kArrfParallel;
    return std::nullopt;
}

std::optional<ZoneProfile> profile_by_name(const std::string& name) {
    ZoneProfile p;
    p.name = name;
    if (name == "falcon512") {
        p.rrsig_size = 690;
        p.dnskey_size = 897;
    } else if (name == "dilithium2") {
        p.rrsig_size = 2420;
        p.dnskey_size = 1312;
    } else if (name == "sphincs128s") {
        p.rrsig_size = 7856;
        p.dnskey_size = 32;
    } else if (name == "rsa2048") {
        p.rrsig_size = 256;
        p.dnskey_size = 270;
    } else if (name == "ecdsa256") {
        p.rrsig_size = 64;
        p.dnskey_size = 64;
    } else {
        return std::nullopt;
    }
    return p;
}

namespace {

Bytes pattern_bytes(std::size_t n, std::uint8_t seed) {
    Bytes out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<std::uint8_t>(seed + i * 31 + (i >> 8) * 7);
    return out;
}

Bytes encode_name(const std::string& dotted) {
    Bytes out;
    detail::put_name(out, DnsName::from_string(dotted));
    return out;
}

// One direction of a full-duplex link: store-and-forward with serialization
// delay, so back-to-back datagrams queue behind each other.
struct Link {
    double latency_ms;
    std::optional<double> bytes_per_ms;
    double busy_until = 0;

    double deliver(double send_time, std::size_t wire_bytes) {
        double start = std::max(send_time, busy_until);
        double tx = bytes_per_ms ? static_cast<double>(wire_bytes) / *bytes_per_ms : 0.0;
        busy_until = start + tx;
        return busy_until + latency_ms;
    }
};

constexpr std::size_t kTcpMss = 1460;

}  // namespace

DnsMessage build_worst_case_response(const ZoneProfile& profile, std::uint16_t id) {
    if (profile.rrsig_size == 0 || profile.a_rdata_size == 0 || profile.dnskey_size == 0)
        throw std::invalid_argument("zone profile record sizes must be >= 1");

    const DnsName owner = DnsName::from_string(profile.owner);

    DnsMessage msg;
    msg.header.id = id;
    msg.header.set_qr(true);

    Question q;
    q.qname = owner;
    q.qtype = kTypeA;
    msg.questions.push_back(q);

    auto rrsig = [&](std::uint8_t seed) {
        ResourceRecord rr;
        rr.name = owner;
        rr.rrtype = kTypeRrsig;
        rr.ttl = 3600;
        rr.rdata = pattern_bytes(profile.rrsig_size, seed);
        return rr;
    };

    ResourceRecord a;
    a.name = owner;
    a.rrtype = kTypeA;
    a.ttl = 3600;
    a.rdata = pattern_bytes(profile.a_rdata_size, 0x0a);
    msg.answers.emplace_back(std::move(a));
    msg.answers.emplace_back(rrsig(0x11));

    ResourceRecord ns;
    ns.name = owner;
    ns.rrtype = kTypeNs;
    ns.ttl = 3600;
    ns.rdata = encode_name(profile.ns_target);
    msg.authority.emplace_back(std::move(ns));
    msg.authority.emplace_back(rrsig(0x22));

    ResourceRecord soa;
    soa.name = owner;
    soa.rrtype = kTypeSoa;
    soa.ttl = 3600;
    soa.rdata = encode_name(profile.ns_target);
    Bytes admin = encode_name(profile.soa_admin);
    soa.rdata.insert(soa.rdata.end(), admin.begin(), admin.end());
    Bytes counters = pattern_bytes(20, 0x33);
    soa.rdata.insert(soa.rdata.end(), counters.begin(), counters.end());
    msg.authority.emplace_back(std::move(soa));
    msg.authority.emplace_back(rrsig(0x44));

    OptRecord opt;
    opt.udp_payload_size = 65355u & 0xFFFF;
    msg.additional.emplace_back(opt);
    return msg;
}

LookupStats run_lookup(const SimScenario& scn) {
    if (scn.latency_ms < 0) throw std::invalid_argument("negative latency");
    if (scn.bandwidth_bps && *scn.bandwidth_bps <= 0)
        throw std::invalid_argument("bandwidth must be positive");
    if (scn.max_udp < kMinMaxSize) throw std::invalid_argument("max_udp below 128");

    const std::optional<double> bpm =
        scn.bandwidth_bps ? std::optional<double>(*scn.bandwidth_bps / 1000.0) : std::nullopt;
    Link client_up{scn.latency_ms, bpm};    // client -> resolver
    Link client_down{scn.latency_ms, bpm};  // resolver -> client
    Link up{scn.latency_ms, bpm};           // resolver -> nameserver
    Link down{scn.latency_ms, bpm};         // nameserver -> resolver

    LookupStats stats;
    auto trace = [&](double t, bool to_server, std::size_t wire, const char* kind) {
        stats.total_bytes += wire;
        stats.trace.push_back(TraceEntry{t, to_server, wire, kind});
    };

    const DnsMessage full = build_worst_case_response(scn.profile, 0x4242);
    const Bytes full_wire = serialize_message(full, scn.rrfrag_type);
    const std::size_t dns_query_size =
        kHeaderSize + full.questions[0].encoded_size() + 11;  // question + OPT

    const double proc = scn.processing_ms;
    const std::size_t ho = scn.header_overhead;
    const std::size_t tho = scn.tcp_header_overhead;

    // Client asks the resolver; the client link is not part of the
    // mechanism's byte accounting.
    double t = client_up.deliver(0.0, dns_query_size + ho) + proc;

    // Resolver queries the name server, advertising max_udp.
    double t_q = up.deliver(t, dns_query_size + ho);
    trace(t_q, true, dns_query_size + ho, "query");
    t = t_q + proc;

    double t_done = 0;
    std::size_t upstream_round_trips = 1;

    switch (scn.mechanism) {
        case Mechanism::kUdpOnly: {
            // Responder-side splitting: the response goes out as
            // back-to-back datagrams with no further requests.
            std::size_t off = 0;
            while (off < full_wire.size()) {
                std::size_t chunk = std::min(scn.max_udp, full_wire.size() - off);
                t_done = down.deliver(t, chunk + ho);
                trace(t_done, false, chunk + ho, "response_fragment");
                off += chunk;
            }
            break;
        }
        case Mechanism::kStandardDns: {
            if (full_wire.size() <= scn.max_udp) {
                t_done = down.deliver(t, full_wire.size() + ho);
                trace(t_done, false, full_wire.size() + ho, "response");
                break;
            }
            // Wasted UDP attempt: truncated reply mirroring the query.
            double t_tc = down.deliver(t, dns_query_size + ho);
            trace(t_tc, false, dns_query_size + ho, "tc_response");
            // TCP: three-way handshake, request, streamed segments.
            double t_syn = up.deliver(t_tc + proc, tho);
            trace(t_syn, true, tho, "tcp_syn");
            double t_synack = down.deliver(t_syn + proc, tho);
            trace(t_synack, false, tho, "tcp_synack");
            double t_ack = up.deliver(t_synack + proc, tho);
            trace(t_ack, true, tho, "tcp_ack");
            double t_req = up.deliver(t_synack + proc, 2 + dns_query_size + tho);
            trace(t_req, true, 2 + dns_query_size + tho, "tcp_request");
            double srv = t_req + proc;
            std::size_t payload = full_wire.size() + 2;
            std::size_t off = 0;
            while (off < payload) {
                std::size_t seg = std::min(kTcpMss, payload - off);
                t_done = down.deliver(srv, seg + tho);
                trace(t_done, false, seg + tho, "tcp_segment");
                trace(t_done, true, tho, "tcp_segment_ack");
                up.deliver(t_done, tho);
                off += seg;
            }
            // Connection teardown; bytes only, the answer is already in.
            trace(t_done, true, tho, "tcp_fin");
            trace(t_done, false, tho, "tcp_finack");
            trace(t_done, true, tho, "tcp_fin_ack2");
            upstream_round_trips = 3;
            break;
        }
        case Mechanism::kArrfSequential:
        case Mechanism::kArrfParallel: {
            ResponderCache cache(kDefaultCacheCapacity);
            const DnsMessage first = fragment_response(full, scn.max_udp, cache);
            const Bytes first_wire = serialize_message(first, scn.rrfrag_type);
            double t_map = down.deliver(t, first_wire.size() + ho);
            trace(t_map, false, first_wire.size() + ho,
                  contains_rrfrag(first) ? "map_response" : "response");
            t_done = t_map;

            DnsMessage seen = parse_message(first_wire, scn.rrfrag_type);
            if (contains_rrfrag(seen)) {
                ReassemblyOptions opts;
                opts.max_size = scn.max_udp;
                opts.strategy = scn.mechanism == Mechanism::kArrfSequential
                                    ? Strategy::kSequential
                                    : Strategy::kParallel;
                opts.budget = scn.budget;
                opts.rrfrag_type = scn.rrfrag_type;
                auto outcome = Reassembler::inspect_response(seen, opts);
                auto* pending = std::get_if<Pending>(&outcome);
                if (!pending) {
                    t_done = t_map;  // map already carried everything
                    break;
                }
                double t_res = t_map + proc;
                FragmentRequestBatch batch = std::move(pending->batch);
                ReassemblyState& state = *pending->state;
                bool complete = false;
                while (!complete) {
                    if (batch.empty())
                        throw std::logic_error("reassembly stalled without queries");
                    // All queries of a batch leave back to back.
                    std::vector<double> arrivals;
                    std::vector<Bytes> replies;
                    for (const auto& q : batch.queries) {
                        Bytes q_wire = serialize_message(q, scn.rrfrag_type);
                        double qa = up.deliver(t_res, q_wire.size() + ho);
                        trace(qa, true, q_wire.size() + ho, "fragment_query");
                        DnsMessage resp = handle_fragment_query(
                            parse_message(q_wire, scn.rrfrag_type), scn.max_udp, cache);
                        Bytes r_wire = serialize_message(resp, scn.rrfrag_type);
                        double ra = down.deliver(qa + proc, r_wire.size() + ho);
                        trace(ra, false, r_wire.size() + ho, "fragment_response");
                        ++upstream_round_trips;
                        arrivals.push_back(ra);
                        replies.push_back(std::move(r_wire));
                    }
                    FragmentRequestBatch next;
                    for (std::size_t i = 0; i < replies.size(); ++i) {
                        auto absorbed = Reassembler::absorb_fragment_response(
                            state, parse_message(replies[i], scn.rrfrag_type));
                        t_done = arrivals[i];
                        if (absorbed.status == AbsorbOutcome::Status::kComplete) {
                            complete = true;
                            break;
                        }
                        for (auto& nq : absorbed.batch.queries)
                            next.queries.push_back(std::move(nq));
                    }
                    batch = std::move(next);
                    t_res = t_done + proc;
                }
            }
            break;
        }
    }

    double t_client = client_down.deliver(t_done + proc, full_wire.size() + ho);
    stats.resolution_time_ms = t_client;
    stats.round_trips = 1 + upstream_round_trips;
    return stats;
}

std::string run_suite(const std::vector<SimScenario>& scenarios) {
    std::ostringstream out;
    out << "mechanism,latency_ms,bandwidth_bps,max_udp,profile,resolution_time_ms,"
           "total_bytes,round_trips\n";
    for (const auto& scn : scenarios) {
        LookupStats stats = run_lookup(scn);
        out << mechanism_name(scn.mechanism) << ',' << scn.latency_ms << ',';
        if (scn.bandwidth_bps)
            out << static_cast<long long>(*scn.bandwidth_bps);
        else
            out << "unlimited";
        out << ',' << scn.max_udp << ',' << scn.profile.name << ',';
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", stats.resolution_time_ms);
        out << buf << ',' << stats.total_bytes << ',' << stats.round_trips << '\n';
    }
    return out.str();
}

std::vector<SimScenario> parse_scenarios(std::istream& in) {
    std::vector<SimScenario> out;
    SimScenario current;
    bool have_any_key = false;

    auto flush = [&] {
        if (!have_any_key) return;
        out.push_back(current);
        current = SimScenario{};
        have_any_key = false;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("scenario line " + std::to_string(lineno) +
                                     ": expected key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        try {
            if (key == "mechanism") {
                auto m = mechanism_from_name(value);
                if (!m) throw std::runtime_error("unknown mechanism '" + value + "'");
                current.mechanism = *m;
            } else if (key == "latency_ms") {
                current.latency_ms = std::stod(value);
            } else if (key == "bandwidth_bps") {
                if (value == "unlimited")
                    current.bandwidth_bps.reset();
                else
                    current.bandwidth_bps = std::stod(value);
            } else if (key == "max_udp") {
                current.max_udp = std::stoul(value);
            } else if (key == "profile") {
                auto p = profile_by_name(value);
                if (!p) throw std::runtime_error("unknown profile '" + value + "'");
                current.profile = *p;
            } else if (key == "header_overhead") {
                current.header_overhead = std::stoul(value);
            } else {
                throw std::runtime_error("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("scenario line " + std::to_string(lineno) +
                                     ": bad value for " + key);
        }
        have_any_key = true;
    }
    flush();
    return out;
}

std::vector<SimScenario> parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    return parse_scenarios(in);
}

}  // namespace arrf::sim
