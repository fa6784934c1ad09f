#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "arrf/reassembler.hpp"
#include "arrf/wire.hpp"

namespace arrf::sim {

enum class Mechanism { kStandardDns, kUdpOnly, kArrfSequential, kArrfParallel };

std::string mechanism_name(Mechanism m);
std::optional<Mechanism> mechanism_from_name(const std::string& name);

// Record sizing for the worst-case response: 1 question, 1 A, 1 NS, 1 SOA
// and 3 RRSIGs over the same owner name.
struct ZoneProfile {
    std::string name = "falcon512";
    std::size_t rrsig_size = 690;   // RRSIG rdata bytes
    std::size_t dnskey_size = 897;  // informational; the measured lookup is post-priming
    std::size_t a_rdata_size = 4;
    std::string owner = "example.com.";
    std::string ns_target = "ns1.example.com.";
    std::string soa_admin = "admin.example.com.";
};

// falcon512, dilithium2, sphincs128s, rsa2048, ecdsa256
std::optional<ZoneProfile> profile_by_name(const std::string& name);

struct SimScenario {
    Mechanism mechanism = Mechanism::kArrfParallel;
    double latency_ms = 10.0;  // per link, one way
    std::optional<double> bandwidth_bps;  // bytes per second; nullopt = unlimited
    std::size_t max_udp = 1232;
    ZoneProfile profile;
    std::size_t header_overhead = 40;      // per UDP datagram
    std::size_t tcp_header_overhead = 52;  // per TCP segment / control packet
    double processing_ms = 0.5;            // per receive->send transition
    std::uint16_t rrfrag_type = kDefaultRrfragType;
    std::size_t budget = kDefaultReassemblyBudget;
};

struct TraceEntry {
    double time_ms;        // arrival at the receiving node
    bool to_server;        // direction on the resolver<->nameserver link
    std::size_t wire_bytes;
    std::string kind;
};

struct LookupStats {
    double resolution_time_ms = 0;
    std::size_t total_bytes = 0;  // resolver<->nameserver link, both directions
    std::size_t round_trips = 0;  // client round trip + upstream exchanges
    std::vector<TraceEntry> trace;
};

// Synthesizes the worst-case response with deterministic counter-pattern
// rdata so reassembly corruption is detectable. Throws std::invalid_argument
// on zero-byte record sizes.
DnsMessage build_worst_case_response(const ZoneProfile& profile, std::uint16_t id = 0x517);

// Deterministically simulates one lookup (client -> resolver -> nameserver)
// under the scenario's mechanism and network conditions. The ARRF
// mechanisms run the real fragmenter and reassembler on real bytes.
LookupStats run_lookup(const SimScenario& scenario);

// One CSV row per scenario, stable column order:
// mechanism,latency_ms,bandwidth_bps,max_udp,profile,resolution_time_ms,total_bytes,round_trips
std::string run_suite(const std::vector<SimScenario>& scenarios);

// Parses line-oriented key=value blocks separated by blank lines. Keys:
// mechanism, latency_ms, bandwidth_bps (number or "unlimited"), max_udp,
// profile, header_overhead. Throws std::runtime_error on unknown keys or
// values.
std::vector<SimScenario> parse_scenarios(std::istream& in);
std::vector<SimScenario> parse_scenario_file(const std::string& path);

}  // namespace arrf::sim
