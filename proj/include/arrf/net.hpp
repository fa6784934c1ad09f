#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "arrf/wire.hpp"

namespace arrf::net {

struct SockAddr {
    std::uint32_t ip = 0;  // host order, IPv4
    std::uint16_t port = 0;

    std::string to_string() const;
    bool operator==(const SockAddr&) const = default;
};

// "host:port" with a numeric IPv4 host (or "localhost").
SockAddr parse_addr(const std::string& spec);

// Minimal RAII UDP socket.
class UdpSocket {
public:
    UdpSocket();
    ~UdpSocket();
    UdpSocket(UdpSocket&& other) noexcept;
    UdpSocket& operator=(UdpSocket&& other) noexcept;
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;

    void bind(const SockAddr& addr);  // port 0 picks an ephemeral port
    SockAddr local_addr() const;
    void send_to(const SockAddr& dst, const Bytes& payload);

    // Blocks up to timeout_ms (-1 = forever). Returns nullopt on timeout or
    // on a closed socket.
    std::optional<std::pair<Bytes, SockAddr>> recv_from(int timeout_ms);

    void close();
    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

private:
    int fd_ = -1;
};

}  // namespace arrf::net
