#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <thread>
#include <fstream>
#include <iostream>
#include <sstream>

#include "arrf/daemon.hpp"
#include "arrf/fragmenter.hpp"
#include "arrf/reassembler.hpp"
#include "arrf/rrfrag.hpp"
#include "arrf/simnet.hpp"
#include "arrf/wire.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

arrf::Bytes from_hex(std::string_view hex) {
    arrf::Bytes out;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    int hi = -1;
    for (char c : hex) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        int v = nibble(c);
        if (v < 0) throw std::runtime_error("invalid hex digit");
        if (hi < 0)
            hi = v;
        else {
            out.push_back(static_cast<std::uint8_t>(hi << 4 | v));
            hi = -1;
        }
    }
    if (hi >= 0) throw std::runtime_error("odd number of hex digits");
    return out;
}

std::string to_hex(const arrf::Bytes& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

void print_entry(std::ostream& os, const arrf::SectionEntry& entry) {
    if (const auto* rr = std::get_if<arrf::ResourceRecord>(&entry)) {
        os << "  rr name=" << rr->name.to_string() << " type=" << rr->rrtype
           << " class=" << rr->rrclass << " ttl=" << rr->ttl << " rdlen=" << rr->rdata.size()
           << "\n";
    } else if (const auto* frag = std::get_if<arrf::RrFrag>(&entry)) {
        os << "  rrfrag rrid=" << frag->rrid << " curidx=" << frag->curidx
           << " fragsize=" << frag->fragsize << " rrsize=" << frag->rrsize
           << " fragdata=" << frag->fragdata.size() << " bytes\n";
    } else {
        const auto& opt = std::get<arrf::OptRecord>(entry);
        os << "  opt udp_payload_size=" << opt.udp_payload_size << " rdlen=" << opt.rdata.size()
           << "\n";
    }
}

void print_message(std::ostream& os, const arrf::DnsMessage& msg) {
    os << "header id=0x" << std::hex << msg.header.id << std::dec
       << " qr=" << msg.header.qr() << " tc=" << msg.header.tc()
       << " rcode=" << int(msg.header.rcode()) << " size=" << arrf::encoded_size(msg) << "\n";
    for (const auto& q : msg.questions)
        os << "  question " << q.qname.to_string() << " type=" << q.qtype
           << " class=" << q.qclass << "\n";
    if (!msg.answers.empty()) os << " answers:\n";
    for (const auto& e : msg.answers) print_entry(os, e);
    if (!msg.authority.empty()) os << " authority:\n";
    for (const auto& e : msg.authority) print_entry(os, e);
    if (!msg.additional.empty()) os << " additional:\n";
    for (const auto& e : msg.additional) print_entry(os, e);
}

int run_decode(const std::string& hex_arg, std::uint16_t rrfrag_type) {
    std::string hex = hex_arg;
    if (hex == "-") {
        std::ostringstream all;
        all << std::cin.rdbuf();
        hex = all.str();
    }
    arrf::Bytes bytes = from_hex(hex);
    try {
        arrf::DnsMessage msg = arrf::parse_message(bytes, rrfrag_type);
        print_message(std::cout, msg);
        return 0;
    } catch (const arrf::MalformedMessage&) {
        // fall through: maybe a bare RRFRAG record
    }
    try {
        arrf::RrFrag frag = arrf::decode_rrfrag(bytes, rrfrag_type);
        std::cout << "rrfrag rrid=" << frag.rrid << " curidx=" << frag.curidx
                  << " fragsize=" << frag.fragsize << " rrsize=" << frag.rrsize
                  << " fragdata=" << frag.fragdata.size() << " bytes\n";
        return 0;
    } catch (const arrf::MalformedRrFrag&) {
        arrf::RrFrag frag = arrf::decode_rrfrag(bytes, rrfrag_type, /*query_context=*/true);
        std::cout << "rrfrag(query) rrid=" << frag.rrid << " curidx=" << frag.curidx
                  << " fragsize=" << frag.fragsize << " rrsize=" << frag.rrsize << "\n";
        return 0;
    }
}

int run_fragment(const std::string& path, std::size_t max_udp, std::uint16_t rrfrag_type) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    arrf::Bytes wire((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    arrf::DnsMessage msg = arrf::parse_message(wire, rrfrag_type);
    if (!msg.header.qr())
        throw std::runtime_error("input is a query; only responses are fragmented");

    arrf::ResponderCache cache;
    arrf::DnsMessage first = arrf::fragment_response(msg, max_udp, cache);
    arrf::Bytes first_wire = arrf::serialize_message(first, rrfrag_type);
    std::cout << "== map response (" << first_wire.size() << " bytes)\n";
    print_message(std::cout, first);
    std::cout << to_hex(first_wire) << "\n";
    if (!arrf::contains_rrfrag(first)) return 0;

    arrf::ReassemblyOptions opts;
    opts.max_size = max_udp;
    opts.strategy = arrf::Strategy::kSequential;
    opts.rrfrag_type = rrfrag_type;
    auto outcome = arrf::Reassembler::inspect_response(first, opts);
    auto* pending = std::get_if<arrf::Pending>(&outcome);
    if (!pending) return 0;
    arrf::FragmentRequestBatch batch = std::move(pending->batch);
    int n = 0;
    while (!batch.empty()) {
        arrf::DnsMessage resp =
            arrf::handle_fragment_query(batch.queries[0], max_udp, cache);
        arrf::Bytes resp_wire = arrf::serialize_message(resp, rrfrag_type);
        std::cout << "== fragment response " << ++n << " (" << resp_wire.size() << " bytes)\n";
        print_message(std::cout, resp);
        std::cout << to_hex(resp_wire) << "\n";
        auto absorbed = arrf::Reassembler::absorb_fragment_response(*pending->state, resp);
        if (absorbed.status == arrf::AbsorbOutcome::Status::kComplete) break;
        batch = std::move(absorbed.batch);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ARRF: request-based DNS fragmentation daemons, bench and codec tools"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "print help for all subcommands");

    // daemon
    auto* daemon_cmd = app.add_subcommand("daemon", "Run a transparent ARRF UDP proxy");
    std::string listen_spec = "127.0.0.1:5300";
    std::string upstream_spec;
    std::string role = "responder";
    std::string strategy = "parallel";
    arrf::DaemonConfig cfg;
    bool quiet = false;
    daemon_cmd->add_option("--listen", listen_spec, "listen address host:port")->required();
    daemon_cmd->add_option("--upstream", upstream_spec, "upstream address host:port")
        ->required();
    daemon_cmd->add_option("--role", role, "responder|requester")
        ->check(CLI::IsMember({"responder", "requester"}));
    daemon_cmd->add_option("--strategy", strategy, "sequential|parallel")
        ->check(CLI::IsMember({"sequential", "parallel"}));
    daemon_cmd->add_option("--max-udp", cfg.client_max_udp, "maximum datagram size on the path");
    daemon_cmd->add_option("--advertise", cfg.max_udp_advertise_upstream,
                           "UDP size advertised to the DNS software upstream");
    daemon_cmd->add_option("--rrfrag-type", cfg.rrfrag_type, "RRFRAG type code");
    daemon_cmd->add_option("--budget", cfg.budget, "per-transaction reassembly byte budget");
    daemon_cmd->add_option("--cache", cfg.cache_capacity, "responder cache entries");
    daemon_cmd->add_option("--timeout-ms", cfg.timeout_ms, "per-query retry timeout");
    daemon_cmd->add_option("--retries", cfg.max_retries, "fragment query retries");
    daemon_cmd->add_flag("--quiet", quiet, "suppress per-transaction log lines");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Run the lookup simulator over a scenario file");
    std::string scenario_path;
    std::string out_path;
    bench_cmd->add_option("--scenario-file", scenario_path, "scenario file")->required();
    bench_cmd->add_option("--out", out_path, "output CSV path ('-' for stdout)")->required();

    // decode
    auto* decode_cmd = app.add_subcommand("decode", "Decode a hex DNS message or RRFRAG");
    std::string hex_input;
    std::uint16_t decode_type = arrf::kDefaultRrfragType;
    decode_cmd->add_option("hex", hex_input, "hex bytes ('-' reads stdin)")->required();
    decode_cmd->add_option("--rrfrag-type", decode_type, "RRFRAG type code");

    // fragment
    auto* fragment_cmd =
        app.add_subcommand("fragment", "Fragment a raw DNS response file and dump the exchange");
    std::string fragment_path;
    std::size_t fragment_max = 1232;
    std::uint16_t fragment_type = arrf::kDefaultRrfragType;
    fragment_cmd->add_option("--file", fragment_path, "raw DNS message file")->required();
    fragment_cmd->add_option("--max-udp", fragment_max, "maximum datagram size");
    fragment_cmd->add_option("--rrfrag-type", fragment_type, "RRFRAG type code");

    // `arrf-bench` acts as `arrf bench`.
    std::vector<std::string> args;
    {
        std::string prog = argv[0];
        bool as_bench = prog.size() >= 10 && prog.substr(prog.size() - 10) == "arrf-bench";
        for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
        if (as_bench) args.emplace_back("bench");
    }

    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (app.got_subcommand(daemon_cmd)) {
            cfg.listen = arrf::net::parse_addr(listen_spec);
            cfg.upstream = arrf::net::parse_addr(upstream_spec);
            cfg.role = role == "responder" ? arrf::DaemonConfig::Role::kResponder
                                           : arrf::DaemonConfig::Role::kRequester;
            cfg.strategy = strategy == "sequential" ? arrf::Strategy::kSequential
                                                    : arrf::Strategy::kParallel;
            cfg.log = quiet ? nullptr : &std::cerr;
            arrf::ProxyDaemon daemon(cfg);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            daemon.start();
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            daemon.stop();
            return 0;
        }
        if (app.got_subcommand(bench_cmd)) {
            auto scenarios = arrf::sim::parse_scenario_file(scenario_path);
            std::string csv = arrf::sim::run_suite(scenarios);
            if (out_path == "-") {
                std::cout << csv;
            } else {
                std::ofstream out(out_path);
                if (!out) throw std::runtime_error("cannot open output: " + out_path);
                out << csv;
            }
            return 0;
        }
        if (app.got_subcommand(decode_cmd)) return run_decode(hex_input, decode_type);
        if (app.got_subcommand(fragment_cmd))
            return run_fragment(fragment_path, fragment_max, fragment_type);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
