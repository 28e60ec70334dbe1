#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rtlat/netsim.hpp"
#include "rtlat/time.hpp"

namespace rtlat {

struct Datagram {
    std::vector<uint8_t> bytes;
    SimTime recv_time = 0;
};

/// Datagram endpoint; sessions talk to this and run unmodified over the
/// simulated link and a real socket. Delivered payloads are bit-identical
/// to sent ones; Datagram mode gives no reordering guarantee.
class TransportEndpoint {
public:
    virtual ~TransportEndpoint() = default;

    // Throws OversizedDatagram above the UDP payload limit, and
    // SocketUnavailable on socket errors (Datagram mode only).
    virtual void send_datagram(std::span<const uint8_t> bytes) = 0;

    // All arrivals with time <= now, in arrival order.
    virtual std::vector<Datagram> poll(SimTime now) = 0;
};

/// In-process adapter over SimLink. Outbound datagrams enter the link
/// tagged with this endpoint's peer id; the scenario wiring routes
/// deliveries into the peer's inbox.
class SimTransport final : public TransportEndpoint {
public:
    SimTransport(SimLink& out_link, int peer_dest) : link_(out_link), peer_dest_(peer_dest) {}

    void send_datagram(std::span<const uint8_t> bytes) override;
    std::vector<Datagram> poll(SimTime now) override;

    // Called by the link's deliver callback.
    void deliver(std::vector<uint8_t> bytes, SimTime t);

private:
    SimLink& link_;
    int peer_dest_;
    std::deque<Datagram> inbox_;
};

/// Nonblocking UDP socket endpoint. Arrival times are stamped on socket
/// read against the epoch set by set_epoch (steady clock).
class UdpTransport final : public TransportEndpoint {
public:
    // Binds 127.0.0.1:port; 0 picks an ephemeral port.
    explicit UdpTransport(uint16_t port = 0);
    ~UdpTransport() override;

    UdpTransport(const UdpTransport&) = delete;
    UdpTransport& operator=(const UdpTransport&) = delete;

    void connect_peer(const std::string& host, uint16_t port);
    uint16_t local_port() const { return local_port_; }

    void set_epoch_now();
    void set_epoch(SimTime abs_ns) { epoch_ns_ = abs_ns; }

    void send_datagram(std::span<const uint8_t> bytes) override;
    std::vector<Datagram> poll(SimTime now) override;

    static SimTime steady_now_ns();

private:
    int fd_ = -1;
    uint16_t local_port_ = 0;
    SimTime epoch_ns_ = 0;
};

/// Binds an even/odd UDP port pair (RTP on the even port, RTCP on the odd
/// one, by convention). Throws SocketUnavailable when no pair is free.
std::pair<std::unique_ptr<UdpTransport>, std::unique_ptr<UdpTransport>> bind_udp_port_pair();

} // namespace rtlat
