#include "arrf/daemon.hpp"

#include <chrono>
#include <stdexcept>

namespace arrf {

namespace {

using Clock = std::chrono::steady_clock;

int ms_until(Clock::time_point deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    return left.count() > 0 ? static_cast<int>(left.count()) : 0;
}

std::size_t effective_max(const DnsMessage& query) {
    const OptRecord* opt = query.opt();
    if (!opt) return 512;  // pre-EDNS default
    return std::max<std::size_t>(opt->udp_payload_size, kMinMaxSize);
}

bool has_rrfrag_descriptor(const DnsMessage& query) {
    for (const auto& e : query.additional)
        if (std::holds_alternative<RrFrag>(e)) return true;
    return false;
}

}  // namespace

void DaemonConfig::validate() const {
    if (listen == upstream)
        throw std::invalid_argument("listen and upstream addresses must differ");
    if (client_max_udp < kMinMaxSize || client_max_udp > max_udp_advertise_upstream ||
        max_udp_advertise_upstream > kMaxMessageSize)
        throw std::invalid_argument(
            "require 128 <= client_max_udp <= max_udp_advertise_upstream <= 65535");
    if (timeout_ms <= 0) throw std::invalid_argument("timeout must be positive");
}

ProxyDaemon::ProxyDaemon(DaemonConfig cfg) : cfg_(std::move(cfg)), cache_(cfg_.cache_capacity) {
    cfg_.validate();
}

ProxyDaemon::~ProxyDaemon() { stop(); }

void ProxyDaemon::start() {
    listen_socket_.bind(cfg_.listen);
    stopping_ = false;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void ProxyDaemon::stop() {
    if (!accept_thread_.joinable()) return;
    stopping_ = true;
    accept_thread_.join();
    {
        std::unique_lock lock(txn_mutex_);
        txn_done_.wait(lock, [this] { return live_txns_ == 0; });
    }
    listen_socket_.close();
}

net::SockAddr ProxyDaemon::listen_addr() const { return listen_socket_.local_addr(); }

void ProxyDaemon::accept_loop() {
    while (!stopping_) {
        auto datagram = listen_socket_.recv_from(100);
        if (!datagram) continue;
        {
            std::lock_guard lock(txn_mutex_);
            ++live_txns_;
        }
        std::thread([this, wire = std::move(datagram->first), client = datagram->second]() mutable {
            try {
                handle_datagram(std::move(wire), client);
            } catch (...) {
                // A transaction must never take the daemon down.
            }
            {
                std::lock_guard lock(txn_mutex_);
                --live_txns_;
            }
            txn_done_.notify_all();
        }).detach();
    }
}

void ProxyDaemon::handle_datagram(Bytes wire, net::SockAddr client) {
    if (cfg_.role == DaemonConfig::Role::kResponder)
        serve_responder(wire, client);
    else
        serve_requester(wire, client);
}

Bytes ProxyDaemon::make_servfail(const DnsMessage& query) const {
    DnsMessage resp;
    resp.header.id = query.header.id;
    resp.header.set_qr(true);
    resp.header.set_rcode(kRcodeServFail);
    resp.questions = query.questions;
    return serialize_message(resp, cfg_.rrfrag_type);
}

Bytes ProxyDaemon::make_truncated_fallback(const DnsMessage& query) const {
    DnsMessage resp;
    resp.header.id = query.header.id;
    resp.header.set_qr(true);
    resp.header.set_tc(true);
    resp.questions = query.questions;
    return serialize_message(resp, cfg_.rrfrag_type);
}

void ProxyDaemon::log_txn(const DnsMessage& query, const net::SockAddr& client,
                          std::size_t bytes_in, std::size_t bytes_out, std::size_t round_trips,
                          const std::string& outcome) {
    if (!cfg_.log) return;
    std::lock_guard lock(log_mutex_);
    char idbuf[8];
    std::snprintf(idbuf, sizeof idbuf, "%04x", query.header.id);
    *cfg_.log << "txn id=0x" << idbuf << " client=" << client.to_string() << " qname="
              << (query.questions.empty() ? "." : query.questions[0].qname.to_string())
              << " qtype=" << (query.questions.empty() ? 0 : query.questions[0].qtype)
              << " bytes_in=" << bytes_in << " bytes_out=" << bytes_out
              << " round_trips=" << round_trips << " outcome=" << outcome << "\n";
}

void ProxyDaemon::serve_responder(const Bytes& wire, const net::SockAddr& client) {
    DnsMessage query;
    try {
        query = parse_message(wire, cfg_.rrfrag_type);
    } catch (const MalformedMessage&) {
        return;  // not a DNS query; nothing sane to answer
    }
    if (query.header.qr()) return;

    const std::size_t client_max = effective_max(query);

    // Fragment queries are served from local state; the DNS software behind
    // us never sees them.
    if (has_rrfrag_descriptor(query)) {
        DnsMessage resp = handle_fragment_query(query, client_max, cache_);
        Bytes out = serialize_message(resp, cfg_.rrfrag_type);
        listen_socket_.send_to(client, out);
        log_txn(query, client, wire.size(), out.size(), 1,
                resp.header.rcode() == kRcodeFormErr ? "formerr" : "fragment");
        return;
    }

    // Plain query: advertise a large buffer upstream so the full response
    // comes back in one datagram.
    DnsMessage upstream_q = query;
    if (auto* opt = upstream_q.opt())
        opt->udp_payload_size = static_cast<std::uint16_t>(
            std::min<std::size_t>(cfg_.max_udp_advertise_upstream, 0xFFFF));
    Bytes upstream_wire = serialize_message(upstream_q, cfg_.rrfrag_type);

    net::UdpSocket sock;
    sock.send_to(cfg_.upstream, upstream_wire);
    auto deadline = Clock::now() + std::chrono::milliseconds(cfg_.timeout_ms);
    std::optional<Bytes> raw;
    while (Clock::now() < deadline) {
        auto got = sock.recv_from(ms_until(deadline));
        if (!got) break;
        if (got->first.size() >= 2 &&
            (got->first[0] << 8 | got->first[1]) == query.header.id) {
            raw = std::move(got->first);
            break;
        }
    }
    if (!raw) {
        Bytes out = make_servfail(query);
        listen_socket_.send_to(client, out);
        log_txn(query, client, wire.size(), out.size(), 1, "upstream_timeout");
        return;
    }

    DnsMessage response;
    try {
        response = parse_message(*raw, cfg_.rrfrag_type);
    } catch (const MalformedMessage&) {
        Bytes out = make_servfail(query);
        listen_socket_.send_to(client, out);
        log_txn(query, client, raw->size(), out.size(), 1, "upstream_malformed");
        return;
    }

    if (raw->size() <= client_max) {
        // Transparent passthrough, byte for byte.
        listen_socket_.send_to(client, *raw);
        log_txn(query, client, raw->size(), raw->size(), 1, "passthrough");
        return;
    }

    try {
        DnsMessage first = fragment_response(response, client_max, cache_);
        Bytes out = serialize_message(first, cfg_.rrfrag_type);
        listen_socket_.send_to(client, out);
        log_txn(query, client, raw->size(), out.size(), 1, "fragmented");
    } catch (const CannotFit&) {
        Bytes out = make_truncated_fallback(query);
        listen_socket_.send_to(client, out);
        log_txn(query, client, raw->size(), out.size(), 1, "tc_fallback");
    }
}

void ProxyDaemon::serve_requester(const Bytes& wire, const net::SockAddr& client) {
    DnsMessage query;
    try {
        query = parse_message(wire, cfg_.rrfrag_type);
    } catch (const MalformedMessage&) {
        return;
    }
    if (query.header.qr()) return;

    // Cap the advertisement: this is the knob that decides the maximum
    // datagram size on the upstream path.
    Bytes upstream_wire = wire;
    std::size_t max_size = 512;
    if (auto* opt = query.opt()) {
        std::size_t advertised = std::max<std::size_t>(opt->udp_payload_size, kMinMaxSize);
        max_size = std::min(advertised, cfg_.client_max_udp);
        if (advertised != max_size) {
            DnsMessage rewritten = query;
            rewritten.opt()->udp_payload_size = static_cast<std::uint16_t>(max_size);
            upstream_wire = serialize_message(rewritten, cfg_.rrfrag_type);
        }
    }

    net::UdpSocket sock;
    sock.send_to(cfg_.upstream, upstream_wire);
    auto deadline = Clock::now() + std::chrono::milliseconds(cfg_.timeout_ms);
    std::optional<Bytes> raw;
    while (Clock::now() < deadline) {
        auto got = sock.recv_from(ms_until(deadline));
        if (!got) break;
        if (got->first.size() >= 2 &&
            (got->first[0] << 8 | got->first[1]) == query.header.id) {
            raw = std::move(got->first);
            break;
        }
    }
    if (!raw) {
        log_txn(query, client, wire.size(), 0, 1, "upstream_timeout");
        return;  // stay silent; the resolver retries on its own
    }

    DnsMessage response;
    try {
        response = parse_message(*raw, cfg_.rrfrag_type);
    } catch (const MalformedMessage&) {
        Bytes out = make_servfail(query);
        listen_socket_.send_to(client, out);
        log_txn(query, client, raw->size(), out.size(), 1, "upstream_malformed");
        return;
    }

    if (!contains_rrfrag(response)) {
        listen_socket_.send_to(client, *raw);
        log_txn(query, client, raw->size(), raw->size(), 1, "passthrough");
        return;
    }

    // Map received: run reassembly against the upstream.
    std::size_t bytes_in = raw->size();
    std::size_t round_trips = 1;
    ReassemblyOptions opts;
    opts.max_size = max_size;
    opts.strategy = cfg_.strategy;
    opts.budget = cfg_.budget;
    opts.rrfrag_type = cfg_.rrfrag_type;

    std::string failure;
    std::optional<DnsMessage> completed;
    try {
        auto outcome = Reassembler::inspect_response(response, opts);
        if (auto* done = std::get_if<DnsMessage>(&outcome)) {
            completed = std::move(*done);
        } else {
            auto& pending = std::get<Pending>(outcome);
            ReassemblyState& state = *pending.state;
            FragmentRequestBatch batch = std::move(pending.batch);

            int attempts = 0;
            while (!completed) {
                for (const auto& q : batch.queries) {
                    Bytes qw = serialize_message(q, cfg_.rrfrag_type);
                    sock.send_to(cfg_.upstream, qw);
                    ++round_trips;
                }
                batch.queries.clear();

                auto frag_deadline =
                    Clock::now() + std::chrono::milliseconds(cfg_.timeout_ms);
                bool progressed = false;
                while (!completed && batch.empty() && Clock::now() < frag_deadline) {
                    auto got = sock.recv_from(ms_until(frag_deadline));
                    if (!got) break;
                    bytes_in += got->first.size();
                    DnsMessage frag_resp;
                    try {
                        frag_resp = parse_message(got->first, cfg_.rrfrag_type);
                    } catch (const MalformedMessage&) {
                        continue;
                    }
                    auto absorbed = Reassembler::absorb_fragment_response(state, frag_resp);
                    switch (absorbed.status) {
                        case AbsorbOutcome::Status::kComplete:
                            completed = std::move(absorbed.message);
                            break;
                        case AbsorbOutcome::Status::kPending:
                            progressed = true;
                            for (auto& nq : absorbed.batch.queries)
                                batch.queries.push_back(std::move(nq));
                            break;
                        case AbsorbOutcome::Status::kResponseIgnored:
                            break;
                    }
                }
                if (completed) break;
                if (!batch.empty() || progressed) {
                    attempts = 0;
                    continue;
                }
                if (++attempts > cfg_.max_retries) {
                    failure = "timeout";
                    break;
                }
                batch.queries = state.outstanding_queries();  // retry unanswered
            }
        }
    } catch (const FormErrReceived&) {
        failure = "formerr";
    } catch (const BudgetExceeded&) {
        failure = "budget";
    } catch (const MalformedRrFrag&) {
        failure = "malformed_map";
    }

    if (!completed) {
        Bytes out = make_truncated_fallback(query);
        listen_socket_.send_to(client, out);
        log_txn(query, client, bytes_in, out.size(), round_trips,
                "tc_fallback_" + (failure.empty() ? std::string("abort") : failure));
        return;
    }

    // The resolver behind us must never see an RRFRAG.
    if (contains_rrfrag(*completed)) {
        Bytes out = make_truncated_fallback(query);
        listen_socket_.send_to(client, out);
        log_txn(query, client, bytes_in, out.size(), round_trips, "tc_fallback_internal");
        return;
    }
    Bytes out = serialize_message(*completed, cfg_.rrfrag_type);
    listen_socket_.send_to(client, out);
    log_txn(query, client, bytes_in, out.size(), round_trips, "reassembled");
}

}  // namespace arrf
