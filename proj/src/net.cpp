#include "arrf/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace arrf::net {

std::string SockAddr::to_string() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u:%u", (ip >> 24) & 0xFF, (ip >> 16) & 0xFF,
                  (ip >> 8) & 0xFF, ip & 0xFF, port);
    return buf;
}

SockAddr parse_addr(const std::string& spec) {
    auto colon = spec.rfind(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("address must be host:port: " + spec);
    std::string host = spec.substr(0, colon);
    if (host == "localhost" || host.empty()) host = "127.0.0.1";
    in_addr addr{};
    if (inet_pton(AF_INET, host.c_str(), &addr) != 1)
        throw std::invalid_argument("not a numeric IPv4 host: " + host);
    unsigned long port = std::stoul(spec.substr(colon + 1));
    if (port > 0xFFFF) throw std::invalid_argument("port out of range: " + spec);
    return SockAddr{ntohl(addr.s_addr), static_cast<std::uint16_t>(port)};
}

namespace {

sockaddr_in to_sockaddr(const SockAddr& a) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_addr.s_addr = htonl(a.ip);
    sa.sin_port = htons(a.port);
    return sa;
}

SockAddr from_sockaddr(const sockaddr_in& sa) {
    return SockAddr{ntohl(sa.sin_addr.s_addr), ntohs(sa.sin_port)};
}

}  // namespace

UdpSocket::UdpSocket() {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket(): " + std::string(strerror(errno)));
}

UdpSocket::~UdpSocket() { close(); }

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void UdpSocket::bind(const SockAddr& addr) {
    sockaddr_in sa = to_sockaddr(addr);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
        throw std::runtime_error("bind(" + addr.to_string() + "): " + strerror(errno));
}

SockAddr UdpSocket::local_addr() const {
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len) != 0)
        throw std::runtime_error("getsockname(): " + std::string(strerror(errno)));
    return from_sockaddr(sa);
}

void UdpSocket::send_to(const SockAddr& dst, const Bytes& payload) {
    sockaddr_in sa = to_sockaddr(dst);
    ssize_t n = ::sendto(fd_, payload.data(), payload.size(), 0,
                         reinterpret_cast<sockaddr*>(&sa), sizeof sa);
    if (n < 0) throw std::runtime_error("sendto(): " + std::string(strerror(errno)));
}

std::optional<std::pair<Bytes, SockAddr>> UdpSocket::recv_from(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc <= 0) return std::nullopt;
    Bytes buf(65536);
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&sa),
                           &len);
    if (n < 0) return std::nullopt;
    buf.resize(static_cast<std::size_t>(n));
    return std::make_pair(std::move(buf), from_sockaddr(sa));
}

void UdpSocket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

}  // namespace arrf::net
