#include "rtlat/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <memory>

#include "rtlat/errors.hpp"
#include "rtlat/rtp.hpp"

namespace rtlat {

void SimTransport::send_datagram(std::span<const uint8_t> bytes) {
    if (bytes.size() > kMaxDatagramSize)
        throw Error(Errc::OversizedDatagram, std::to_string(bytes.size()) + " bytes");
    link_.send(peer_dest_, std::vector<uint8_t>(bytes.begin(), bytes.end()));
}

void SimTransport::deliver(std::vector<uint8_t> bytes, SimTime t) {
    inbox_.push_back(Datagram{std::move(bytes), t});
}

std::vector<Datagram> SimTransport::poll(SimTime now) {
    std::vector<Datagram> out;
    while (!inbox_.empty() && inbox_.front().recv_time <= now) {
        out.push_back(std::move(inbox_.front()));
        inbox_.pop_front();
    }
    return out;
}

namespace {

sockaddr_in loopback_addr(uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    return addr;
}

} // namespace

UdpTransport::UdpTransport(uint16_t port) {
    fd_ = socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK, 0);
    if (fd_ < 0)
        throw Error(Errc::SocketUnavailable, std::strerror(errno));

    const int rcvbuf = 1 << 20;
    setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &rcvbuf, sizeof rcvbuf);

    sockaddr_in addr = loopback_addr(port);
    if (bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        const int err = errno;
        close(fd_);
        fd_ = -1;
        throw Error(Errc::SocketUnavailable, std::string("bind: ") + std::strerror(err));
    }
    socklen_t len = sizeof addr;
    getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    local_port_ = ntohs(addr.sin_port);
}

UdpTransport::~UdpTransport() {
    if (fd_ >= 0)
        close(fd_);
}

void UdpTransport::connect_peer(const std::string& host, uint16_t port) {
    sockaddr_in addr = loopback_addr(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw Error(Errc::SocketUnavailable, "bad address " + host);
    if (connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
        throw Error(Errc::SocketUnavailable, std::string("connect: ") + std::strerror(errno));
}

SimTime UdpTransport::steady_now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void UdpTransport::set_epoch_now() {
    epoch_ns_ = steady_now_ns();
}

void UdpTransport::send_datagram(std::span<const uint8_t> bytes) {
    if (bytes.size() > kMaxDatagramSize)
        throw Error(Errc::OversizedDatagram, std::to_string(bytes.size()) + " bytes");
    const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), 0);
    if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != ECONNREFUSED)
        throw Error(Errc::SocketUnavailable, std::string("send: ") + std::strerror(errno));
}

std::vector<Datagram> UdpTransport::poll(SimTime) {
    std::vector<Datagram> out;
    uint8_t buf[65536];
    for (;;) {
        const ssize_t n = recv(fd_, buf, sizeof buf, 0);
        if (n < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK || errno == ECONNREFUSED)
                break;
            throw Error(Errc::SocketUnavailable, std::string("recv: ") + std::strerror(errno));
        }
        out.push_back(Datagram{std::vector<uint8_t>(buf, buf + n), steady_now_ns() - epoch_ns_});
    }
    return out;
}

std::pair<std::unique_ptr<UdpTransport>, std::unique_ptr<UdpTransport>> bind_udp_port_pair() {
    for (uint16_t base = 40000; base < 60000; base += 2) {
        try {
            auto even = std::make_unique<UdpTransport>(base);
            auto odd = std::make_unique<UdpTransport>(static_cast<uint16_t>(base + 1));
            return {std::move(even), std::move(odd)};
        } catch (const Error&) {
            continue;
        }
    }
    throw Error(Errc::SocketUnavailable, "no free even/odd UDP port pair");
}

} // namespace rtlat
