#include <doctest.h>

#include <cstdlib>
#include <random>
#include <set>
#include <vector>

#include "rtlat/errors.hpp"
#include "rtlat/rtcp.hpp"

using namespace rtlat;

namespace {

// Direct recurrence oracle, coded independently of ReceptionStats: keeps
// the jitter estimate in 1/16-tick fixed point and applies
// J <- J + (|D| - J)/16 with C++ truncating division.
struct JitterOracle {
    bool have = false;
    int64_t last_transit = 0;
    int64_t j_fp = 0;

    void feed(int64_t send, int64_t arrival) {
        const int64_t transit = arrival - send;
        if (!have) {
            have = true;
            last_transit = transit;
            return;
        }
        const int64_t d = std::llabs(transit - last_transit);
        last_transit = transit;
        j_fp = j_fp + ((d << 4) - j_fp) / 16;
    }
    uint32_t ticks() const { return static_cast<uint32_t>(j_fp >> 4); }
};

// Counting oracle for interval loss: expected = distinct sequence slots
// between the interval's extended bounds, lost = expected - arrivals.
uint8_t fraction_lost_oracle(uint64_t expected_interval, uint64_t received_interval) {
    if (expected_interval == 0)
        return 0;
    const int64_t lost =
        static_cast<int64_t>(expected_interval) - static_cast<int64_t>(received_interval);
    if (lost <= 0)
        return 0;
    const uint64_t scaled = static_cast<uint64_t>(lost) * 256 / expected_interval;
    return static_cast<uint8_t>(scaled > 255 ? 255 : scaled);
}

} // namespace

TEST_SUITE("rtcp") {

TEST_CASE("jitter single steps match the recurrence") {
    // One step from J=0 with |D|=16 lands on exactly 1 tick.
    ReceptionStats s;
    s.update_jitter(0, 100);  // initializes transit only
    s.update_jitter(0, 116);  // |D| = 16
    CHECK(s.jitter_ticks() == 1);
    CHECK(s.jitter_fixed_point() == 16);

    // From J=1 (fixed point 16), |D|=0 decays to 15/16 = 0.9375.
    s.update_jitter(0, 116); // transit unchanged, |D| = 0
    CHECK(s.jitter_fixed_point() == 15);
    CHECK(s.jitter_ticks() == 0);
}

TEST_CASE("constant transit keeps jitter decaying toward zero") {
    ReceptionStats s;
    s.update_jitter(0, 0);
    s.update_jitter(0, 5000); // one spike
    uint64_t prev = s.jitter_fixed_point();
    for (int i = 0; i < 100; ++i) {
        s.update_jitter(0, 5000);
        CHECK(s.jitter_fixed_point() <= prev);
        prev = s.jitter_fixed_point();
    }
}

TEST_CASE("constant-delay lossless stream converges below one tick within 200 packets") {
    ReceptionStats s;
    // A rough start, then perfectly constant transit.
    s.update_jitter(0, 0);
    s.update_jitter(0, 100000);
    for (int i = 0; i < 200; ++i)
        s.update_jitter(i * 3000, i * 3000 + 250);
    CHECK(s.jitter_ticks() < 1);
}

TEST_CASE("jitter matches the oracle on randomized transit sequences") {
    std::mt19937_64 rng(31);
    for (int round = 0; round < 1000; ++round) {
        ReceptionStats s;
        JitterOracle oracle;
        const int n = 2 + static_cast<int>(rng() % 300);
        int64_t send = 0;
        for (int i = 0; i < n; ++i) {
            send += static_cast<int64_t>(rng() % 3000);
            const int64_t arrival = send + static_cast<int64_t>(rng() % 20000);
            s.update_jitter(send, arrival);
            oracle.feed(send, arrival);
        }
        CHECK(s.jitter_fixed_point() == static_cast<uint64_t>(oracle.j_fp));
        CHECK(s.jitter_ticks() == oracle.ticks());
    }
}

TEST_CASE("fraction_lost formula") {
    CHECK(fraction_lost(100, 5) == 12);  // floor(5 * 256 / 100)
    CHECK(fraction_lost(100, 0) == 0);
    CHECK(fraction_lost(0, 0) == 0);     // empty interval
    CHECK(fraction_lost(100, -3) == 0);  // duplicates
    CHECK(fraction_lost(10, 10) == 255); // clamp: 100% loss scales to 256
    CHECK(fraction_lost(100, 10) == 25); // every 10th packet dropped
}

TEST_CASE("interval statistics match brute-force counting with wraparound") {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 1000; ++round) {
        ReceptionStats s;
        // Start close to the wrap point often enough to cross it.
        uint64_t ext_seq = (round % 2 == 0) ? 65300 + rng() % 200 : rng() % 5000;
        uint64_t first_rx = 0;
        uint64_t last_rx = 0;
        bool any_rx = false;
        uint64_t received = 0;
        uint64_t prev_expected = 0;
        uint64_t prev_received = 0;

        const int reports = 1 + static_cast<int>(rng() % 4);
        for (int rep = 0; rep < reports; ++rep) {
            const int n = 1 + static_cast<int>(rng() % 400);
            for (int i = 0; i < n; ++i) {
                if (rng() % 8 == 0) { // lost slot
                    ++ext_seq;
                    continue;
                }
                s.on_packet(static_cast<uint16_t>(ext_seq & 0xFFFF));
                if (!any_rx) {
                    any_rx = true;
                    first_rx = ext_seq;
                }
                last_rx = ext_seq;
                ++ext_seq;
                ++received;
            }
            const auto rr = make_report(s, 42, Timestamp64{0, 0});

            // The receiver can only see slots up to its last arrival.
            const uint64_t expected_total = any_rx ? last_rx - first_rx + 1 : 0;
            const uint64_t expected_interval = expected_total - prev_expected;
            const uint64_t received_interval = received - prev_received;
            CHECK(rr.fraction_lost == fraction_lost_oracle(expected_interval, received_interval));
            CHECK(rr.cumulative_lost ==
                  static_cast<int32_t>(static_cast<int64_t>(expected_total) -
                                       static_cast<int64_t>(received)));
            if (any_rx)
                CHECK(static_cast<uint64_t>(rr.highest_seq) ==
                      (first_rx & 0xFFFF) + (last_rx - first_rx));
            prev_expected = expected_total;
            prev_received = received;
        }
    }
}

TEST_CASE("extended highest sequence crosses 65535 -> 0") {
    ReceptionStats s;
    s.on_packet(65534);
    s.on_packet(65535);
    s.on_packet(0);
    s.on_packet(1);
    CHECK(s.extended_highest_seq() == 65536 + 1);
    CHECK(s.expected_total() == 4);

    // A reordered duplicate does not move the highest.
    s.on_packet(65535);
    CHECK(s.extended_highest_seq() == 65536 + 1);
}

TEST_CASE("cumulative_lost is non-decreasing without duplicates") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 200; ++round) {
        ReceptionStats s;
        uint64_t ext_seq = rng() % 70000;
        int32_t prev_cum = 0;
        for (int rep = 0; rep < 6; ++rep) {
            const int n = 1 + static_cast<int>(rng() % 200);
            for (int i = 0; i < n; ++i) {
                if (rng() % 5 == 0) {
                    ++ext_seq; // loss
                    continue;
                }
                s.on_packet(static_cast<uint16_t>(ext_seq & 0xFFFF));
                ++ext_seq;
            }
            const auto rr = make_report(s, 1, Timestamp64{0, 0});
            CHECK(rr.cumulative_lost >= prev_cum);
            prev_cum = rr.cumulative_lost;
        }
    }
}

TEST_CASE("zero-loss steady stream reports fraction_lost 0") {
    ReceptionStats s;
    for (uint16_t q = 0; q < 500; ++q)
        s.on_packet(q);
    const auto rr = make_report(s, 9, Timestamp64{3, 4});
    CHECK(rr.fraction_lost == 0);
    CHECK(rr.cumulative_lost == 0);
    CHECK(rr.highest_seq == 499);
    CHECK(rr.report_time == Timestamp64{3, 4});
}

TEST_CASE("receiver report encodes to the standard 32-byte layout") {
    RtcpReceiverReport rr;
    rr.ssrc = 0x01020304;
    rr.fraction_lost = 12;
    rr.cumulative_lost = 5;
    rr.highest_seq = 0xAABBCCDD;
    rr.jitter = 700;
    rr.report_time = Timestamp64{9, 0x80000000u};
    const auto bytes = encode_rr(rr);
    REQUIRE(bytes.size() == kReceiverReportSize);
    CHECK(bytes[0] == 0x81);
    CHECK(bytes[1] == 201);
    CHECK(bytes[2] == 0x00);
    CHECK(bytes[3] == 0x07);
    CHECK(bytes[12] == 12); // fraction lost byte
    CHECK(decode_rr(bytes) == rr);

    // Negative cumulative loss survives the 24-bit round-trip.
    rr.cumulative_lost = -5;
    CHECK(decode_rr(encode_rr(rr)) == rr);
}

TEST_CASE("receiver report round-trips on randomized values") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 1000; ++i) {
        RtcpReceiverReport rr;
        rr.ssrc = static_cast<uint32_t>(rng());
        rr.fraction_lost = static_cast<uint8_t>(rng());
        rr.cumulative_lost = static_cast<int32_t>(rng() % (1u << 24)) - (1 << 23);
        rr.highest_seq = static_cast<uint32_t>(rng());
        rr.jitter = static_cast<uint32_t>(rng());
        rr.report_time = Timestamp64{static_cast<uint32_t>(rng()), static_cast<uint32_t>(rng())};
        CHECK(decode_rr(encode_rr(rr)) == rr);
    }
}

TEST_CASE("rr decode errors") {
    std::vector<uint8_t> short_pkt(16, 0);
    try {
        (void)decode_rr(short_pkt);
        FAIL("expected TruncatedPacket");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TruncatedPacket);
    }

    auto bytes = encode_rr(RtcpReceiverReport{});
    bytes[1] = 200; // sender report type
    try {
        (void)decode_rr(bytes);
        FAIL("expected BadPacketType");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BadPacketType);
    }
}

} // TEST_SUITE
