#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

#include "arrf/fragmenter.hpp"
#include "arrf/net.hpp"
#include "arrf/reassembler.hpp"

namespace arrf {

struct DaemonConfig {
    enum class Role { kResponder, kRequester };

    net::SockAddr listen;
    net::SockAddr upstream;
    Role role = Role::kResponder;

    // Responder side rewrites inbound OPT advertisements to this value
    // before forwarding upstream.
    std::size_t max_udp_advertise_upstream = 65355;
    // Requester side caps its own fragment-query advertisement (and the
    // forwarded query's OPT) at this value.
    std::size_t client_max_udp = 1232;

    Strategy strategy = Strategy::kParallel;
    std::uint16_t rrfrag_type = kDefaultRrfragType;
    std::size_t budget = kDefaultReassemblyBudget;
    std::size_t cache_capacity = kDefaultCacheCapacity;
    int timeout_ms = kDefaultRetryTimeoutMs;
    int max_retries = kDefaultMaxRetries;

    std::ostream* log = nullptr;  // one line per transaction when set

    void validate() const;  // throws std::invalid_argument
};

// Transparent UDP proxy implementing ARRF on one side of the path. The
// responder role fronts a name server and fragments oversized responses; the
// requester role fronts a resolver and reassembles before delivery.
class ProxyDaemon {
public:
    explicit ProxyDaemon(DaemonConfig cfg);
    ~ProxyDaemon();

    // Binds and starts serving on a background thread.
    void start();
    // Stops serving and joins all transaction threads.
    void stop();

    // Actual bound address (useful with port 0).
    net::SockAddr listen_addr() const;

    const ResponderCache& cache() const { return cache_; }

private:
    struct Txn;

    void accept_loop();
    void handle_datagram(Bytes wire, net::SockAddr client);
    void serve_responder(const Bytes& wire, const net::SockAddr& client);
    void serve_requester(const Bytes& wire, const net::SockAddr& client);
    Bytes make_servfail(const DnsMessage& query) const;
    Bytes make_truncated_fallback(const DnsMessage& query) const;
    void log_txn(const DnsMessage& query, const net::SockAddr& client, std::size_t bytes_in,
                 std::size_t bytes_out, std::size_t round_trips, const std::string& outcome);

    DaemonConfig cfg_;
    net::UdpSocket listen_socket_;
    ResponderCache cache_;
    std::thread accept_thread_;
    std::atomic<bool> stopping_{false};

    std::mutex txn_mutex_;
    std::condition_variable txn_done_;
    std::size_t live_txns_ = 0;

    std::mutex log_mutex_;
};

}  // namespace arrf
