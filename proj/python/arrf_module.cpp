#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "arrf/fragmenter.hpp"
#include "arrf/reassembler.hpp"
#include "arrf/rrfrag.hpp"
#include "arrf/simnet.hpp"
#include "arrf/wire.hpp"

namespace py = pybind11;
using namespace arrf;

namespace {

Bytes to_bytes(const py::bytes& b) {
    std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) {
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

// Runs the whole fragment/request/reassemble cycle in process.
DnsMessage run_exchange(const DnsMessage& original, std::size_t max_udp, Strategy strategy,
                        std::uint16_t rrfrag_type) {
    ResponderCache cache;
    DnsMessage first = fragment_response(original, max_udp, cache);
    ReassemblyOptions opts;
    opts.max_size = max_udp;
    opts.strategy = strategy;
    opts.rrfrag_type = rrfrag_type;
    auto outcome = Reassembler::inspect_response(
        parse_message(serialize_message(first, rrfrag_type), rrfrag_type), opts);
    if (auto* done = std::get_if<DnsMessage>(&outcome)) return *done;
    auto& pending = std::get<Pending>(outcome);
    FragmentRequestBatch batch = std::move(pending.batch);
    while (true) {
        FragmentRequestBatch next;
        for (const auto& q : batch.queries) {
            DnsMessage resp = handle_fragment_query(q, max_udp, cache);
            auto absorbed = Reassembler::absorb_fragment_response(*pending.state, resp);
            if (absorbed.status == AbsorbOutcome::Status::kComplete) return *absorbed.message;
            for (auto& nq : absorbed.batch.queries) next.queries.push_back(std::move(nq));
        }
        batch = std::move(next);
        if (batch.empty()) throw std::runtime_error("exchange stalled");
    }
}

}  // namespace

PYBIND11_MODULE(arrf, m) {
    m.doc() = "Request-based DNS fragmentation: wire codec, fragmenter/reassembler and "
              "lookup simulator";

    m.attr("DEFAULT_RRFRAG_TYPE") = kDefaultRrfragType;
    m.attr("DEFAULT_REASSEMBLY_BUDGET") = kDefaultReassemblyBudget;
    m.attr("MIN_MAX_SIZE") = kMinMaxSize;

    py::register_exception<MalformedMessage>(m, "MalformedMessage");
    py::register_exception<OversizeMessage>(m, "OversizeMessage");
    py::register_exception<CannotFit>(m, "CannotFit");
    py::register_exception<BudgetExceeded>(m, "BudgetExceeded");

    py::enum_<Strategy>(m, "Strategy")
        .value("SEQUENTIAL", Strategy::kSequential)
        .value("PARALLEL", Strategy::kParallel);

    py::class_<RrFrag>(m, "RrFrag")
        .def_static(
            "chunk",
            [](std::uint16_t rrid, std::uint32_t curidx, std::uint16_t rrsize, py::bytes data) {
                return RrFrag::chunk(rrid, curidx, rrsize, to_bytes(data));
            },
            py::arg("rrid"), py::arg("curidx"), py::arg("rrsize"), py::arg("fragdata"))
        .def_static("request", &RrFrag::request, py::arg("rrid"), py::arg("curidx"),
                    py::arg("rrsize"), py::arg("requested"))
        .def_readonly("rrid", &RrFrag::rrid)
        .def_readonly("curidx", &RrFrag::curidx)
        .def_readonly("fragsize", &RrFrag::fragsize)
        .def_readonly("rrsize", &RrFrag::rrsize)
        .def_property_readonly("fragdata",
                               [](const RrFrag& f) { return from_bytes(f.fragdata); })
        .def("__eq__", [](const RrFrag& a, const RrFrag& b) { return a == b; });

    py::class_<DnsMessage>(m, "DnsMessage")
        .def_property_readonly("id", [](const DnsMessage& msg) { return msg.header.id; })
        .def_property_readonly("qr", [](const DnsMessage& msg) { return msg.header.qr(); })
        .def_property_readonly("tc", [](const DnsMessage& msg) { return msg.header.tc(); })
        .def_property_readonly("rcode", [](const DnsMessage& msg) { return msg.header.rcode(); })
        .def_property_readonly("question_count",
                               [](const DnsMessage& msg) { return msg.questions.size(); })
        .def_property_readonly("answer_count",
                               [](const DnsMessage& msg) { return msg.answers.size(); })
        .def_property_readonly("authority_count",
                               [](const DnsMessage& msg) { return msg.authority.size(); })
        .def_property_readonly("additional_count",
                               [](const DnsMessage& msg) { return msg.additional.size(); })
        .def_property_readonly("contains_rrfrag",
                               [](const DnsMessage& msg) { return contains_rrfrag(msg); })
        .def("encoded_size", [](const DnsMessage& msg) { return encoded_size(msg); })
        .def(
            "to_bytes",
            [](const DnsMessage& msg, std::uint16_t type) {
                return from_bytes(serialize_message(msg, type));
            },
            py::arg("rrfrag_type") = kDefaultRrfragType)
        .def("__eq__", [](const DnsMessage& a, const DnsMessage& b) { return a == b; });

    m.def(
        "parse_message",
        [](py::bytes wire, std::uint16_t type) { return parse_message(to_bytes(wire), type); },
        py::arg("wire"), py::arg("rrfrag_type") = kDefaultRrfragType);
    m.def(
        "serialize_message",
        [](const DnsMessage& msg, std::uint16_t type) {
            return from_bytes(serialize_message(msg, type));
        },
        py::arg("msg"), py::arg("rrfrag_type") = kDefaultRrfragType);
    m.def(
        "encoded_size", [](const DnsMessage& msg) { return encoded_size(msg); }, py::arg("msg"));

    m.def(
        "encode_rrfrag",
        [](const RrFrag& f, std::uint16_t type) { return from_bytes(encode_rrfrag(f, type)); },
        py::arg("frag"), py::arg("type_code") = kDefaultRrfragType);
    m.def(
        "decode_rrfrag",
        [](py::bytes wire, std::uint16_t type, bool query_context) {
            return decode_rrfrag(to_bytes(wire), type, query_context);
        },
        py::arg("wire"), py::arg("type_code") = kDefaultRrfragType,
        py::arg("query_context") = false);
    m.def(
        "fnv16", [](py::bytes data) { return fnv16(to_bytes(data)); }, py::arg("data"));
    m.def(
        "assign_rrid",
        [](py::bytes canonical, const std::set<std::uint16_t>& occupied) {
            return assign_rrid(to_bytes(canonical),
                               [&](std::uint16_t id) { return occupied.count(id) != 0; });
        },
        py::arg("canonical"), py::arg("occupied") = std::set<std::uint16_t>{});

    py::class_<ResponderCache>(m, "ResponderCache")
        .def(py::init<std::size_t>(), py::arg("capacity") = kDefaultCacheCapacity)
        .def("intern",
             [](ResponderCache& c, py::bytes canonical) { return c.intern(to_bytes(canonical)); })
        .def("contains", &ResponderCache::contains)
        .def("__len__", &ResponderCache::size);

    m.def(
        "canonicalize_rr_from_message",
        [](const DnsMessage& msg, std::size_t answer_index) {
            const auto* rr = std::get_if<ResourceRecord>(&msg.answers.at(answer_index));
            if (!rr) throw std::invalid_argument("answer entry is not a plain record");
            return from_bytes(canonicalize_rr(*rr));
        },
        py::arg("msg"), py::arg("answer_index") = 0);
    m.def(
        "fragment_response",
        [](const DnsMessage& msg, std::size_t max_size, ResponderCache& cache) {
            return fragment_response(msg, max_size, cache);
        },
        py::arg("msg"), py::arg("max_size"), py::arg("cache"));
    m.def(
        "handle_fragment_query",
        [](const DnsMessage& q, std::size_t max_size, ResponderCache& cache) {
            return handle_fragment_query(q, max_size, cache);
        },
        py::arg("query"), py::arg("max_size"), py::arg("cache"));
    m.def("run_exchange", &run_exchange, py::arg("original"), py::arg("max_udp"),
          py::arg("strategy") = Strategy::kParallel,
          py::arg("rrfrag_type") = kDefaultRrfragType,
          "Fragment, serve and reassemble a response entirely in process");

    py::enum_<sim::Mechanism>(m, "Mechanism")
        .value("STANDARD_DNS", sim::Mechanism::kStandardDns)
        .value("UDP_ONLY", sim::Mechanism::kUdpOnly)
        .value("ARRF_SEQUENTIAL", sim::Mechanism::kArrfSequential)
        .value("ARRF_PARALLEL", sim::Mechanism::kArrfParallel);

    py::class_<sim::ZoneProfile>(m, "ZoneProfile")
        .def(py::init<>())
        .def_readwrite("name", &sim::ZoneProfile::name)
        .def_readwrite("rrsig_size", &sim::ZoneProfile::rrsig_size)
        .def_readwrite("dnskey_size", &sim::ZoneProfile::dnskey_size)
        .def_readwrite("a_rdata_size", &sim::ZoneProfile::a_rdata_size);
    m.def("profile_by_name", &sim::profile_by_name, py::arg("name"));

    py::class_<sim::SimScenario>(m, "SimScenario")
        .def(py::init([](sim::Mechanism mechanism, double latency_ms,
                         std::optional<double> bandwidth_bps, std::size_t max_udp,
                         const std::string& profile, std::size_t header_overhead) {
                 sim::SimScenario s;
                 s.mechanism = mechanism;
                 s.latency_ms = latency_ms;
                 s.bandwidth_bps = bandwidth_bps;
                 s.max_udp = max_udp;
                 auto p = sim::profile_by_name(profile);
                 if (!p) throw std::invalid_argument("unknown profile: " + profile);
                 s.profile = *p;
                 s.header_overhead = header_overhead;
                 return s;
             }),
             py::arg("mechanism"), py::arg("latency_ms") = 10.0,
             py::arg("bandwidth_bps") = std::optional<double>(50e6), py::arg("max_udp") = 1232,
             py::arg("profile") = "falcon512", py::arg("header_overhead") = 40)
        .def_readwrite("latency_ms", &sim::SimScenario::latency_ms)
        .def_readwrite("max_udp", &sim::SimScenario::max_udp);

    py::class_<sim::LookupStats>(m, "LookupStats")
        .def_readonly("resolution_time_ms", &sim::LookupStats::resolution_time_ms)
        .def_readonly("total_bytes", &sim::LookupStats::total_bytes)
        .def_readonly("round_trips", &sim::LookupStats::round_trips)
        .def_property_readonly("trace_len",
                               [](const sim::LookupStats& s) { return s.trace.size(); });

    m.def("build_worst_case_response", &sim::build_worst_case_response, py::arg("profile"),
          py::arg("id") = 0x517);
    m.def("run_lookup", &sim::run_lookup, py::arg("scenario"));
    m.def(
        "run_suite",
        [](const std::vector<sim::SimScenario>& scenarios) { return sim::run_suite(scenarios); },
        py::arg("scenarios"));
    m.def(
        "parse_scenarios",
        [](const std::string& text) {
            std::istringstream in(text);
            return sim::parse_scenarios(in);
        },
        py::arg("text"));
}
