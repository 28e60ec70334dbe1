#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "rtlat/errors.hpp"
#include "rtlat/rtp.hpp"

using namespace rtlat;

namespace {

RtpPacket random_packet(std::mt19937_64& rng, bool with_ext, size_t max_payload) {
    RtpPacket p;
    p.padding = rng() & 1;
    p.marker = rng() & 1;
    p.payload_type = static_cast<uint8_t>(rng() % 128);
    p.seq = static_cast<uint16_t>(rng());
    p.ts_block1 = static_cast<uint32_t>(rng());
    p.ssrc = static_cast<uint32_t>(rng());
    if (with_ext)
        p.ext_ts_block2 = static_cast<uint32_t>(rng());
    p.payload.resize(rng() % (max_payload + 1));
    for (auto& b : p.payload)
        b = static_cast<uint8_t>(rng());
    return p;
}

} // namespace

TEST_SUITE("rtp") {

TEST_CASE("split/join round-trips the full 64-bit space") {
    CHECK(split_timestamp(Timestamp64{1, 0}) == std::pair<uint32_t, uint32_t>{1, 0});
    CHECK(split_timestamp(Timestamp64{0, 0x80000000u}) ==
          std::pair<uint32_t, uint32_t>{0, 0x80000000u});
    CHECK(join_timestamp(1, 0) == Timestamp64{1, 0});

    std::mt19937_64 rng(1);
    for (int i = 0; i < 100000; ++i) {
        const Timestamp64 t{static_cast<uint32_t>(rng()), static_cast<uint32_t>(rng())};
        const auto [b1, b2] = split_timestamp(t);
        CHECK(join_timestamp(b1, b2) == t);
    }
}

TEST_CASE("minimal packet encodes to exactly 12 bytes") {
    // Hand-encoded fixed header: V=2 P=0 X=0 CC=0, M=0 PT=96,
    // seq 0x1234, ts 5, ssrc 0xDEADBEEF.
    RtpPacket p;
    p.payload_type = 96;
    p.seq = 0x1234;
    p.ts_block1 = 5;
    p.ssrc = 0xDEADBEEF;
    const auto bytes = encode_packet(p);
    const std::vector<uint8_t> expected = {0x80, 0x60, 0x12, 0x34, 0x00, 0x00,
                                           0x00, 0x05, 0xDE, 0xAD, 0xBE, 0xEF};
    CHECK(bytes == expected);
}

TEST_CASE("extension header carries the 0xBEDE profile and the element") {
    RtpPacket p;
    p.marker = true;
    p.payload_type = 96;
    p.seq = 1;
    p.ts_block1 = 2;
    p.ssrc = 3;
    p.ext_ts_block2 = 0x80000000u;
    const auto bytes = encode_packet(p, 1);
    REQUIRE(bytes.size() == 24);
    CHECK(bytes[0] == 0x90); // X bit set
    CHECK(bytes[1] == 0xE0); // marker | PT 96
    CHECK(bytes[12] == 0xBE);
    CHECK(bytes[13] == 0xDE);
    CHECK(bytes[14] == 0x00);
    CHECK(bytes[15] == 0x02); // two words of elements
    CHECK(bytes[16] == 0x13); // id 1, 4 data bytes
    CHECK(bytes[17] == 0x80);
    CHECK((bytes[21] | bytes[22] | bytes[23]) == 0); // padding
    CHECK(decode_packet(bytes) == p);
}

TEST_CASE("decode errors") {
    const std::vector<uint8_t> truncated(8, 0);
    try {
        (void)decode_packet(truncated);
        FAIL("expected TruncatedPacket");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TruncatedPacket);
    }

    // Version bits = 1.
    std::vector<uint8_t> bad_version(12, 0);
    bad_version[0] = 0x40;
    try {
        (void)decode_packet(bad_version);
        FAIL("expected BadVersion");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BadVersion);
    }

    // Extension flagged but region missing.
    std::vector<uint8_t> bad_ext(12, 0);
    bad_ext[0] = 0x90;
    try {
        (void)decode_packet(bad_ext);
        FAIL("expected MalformedExtension");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MalformedExtension);
    }
}

TEST_CASE("element id range and datagram size are enforced on encode") {
    RtpPacket p;
    p.ext_ts_block2 = 1;
    try {
        (void)encode_packet(p, 15);
        FAIL("expected ElementIdOutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ElementIdOutOfRange);
    }
    try {
        (void)encode_packet(p, 0);
        FAIL("expected ElementIdOutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ElementIdOutOfRange);
    }

    RtpPacket big;
    big.payload.resize(kMaxDatagramSize - kRtpHeaderSize + 1);
    try {
        (void)encode_packet(big);
        FAIL("expected PayloadTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::PayloadTooLarge);
    }
}

TEST_CASE("unknown extension elements are skipped, timestamp still recovered") {
    // Hand-built one-byte-format region: element id 2 (2 bytes), then the
    // timestamp element id 1 (4 bytes), then padding to the word boundary.
    std::vector<uint8_t> bytes = {0x90, 0x60, 0x00, 0x01, 0x00, 0x00, 0x00, 0x02,
                                  0x00, 0x00, 0x00, 0x03};
    const std::vector<uint8_t> ext = {0xBE, 0xDE, 0x00, 0x03, 0x21, 0xAA, 0xBB, 0x13,
                                      0xDE, 0xAD, 0xBE, 0xEF, 0x00, 0x00, 0x00, 0x00};
    bytes.insert(bytes.end(), ext.begin(), ext.end());
    bytes.push_back(0x55); // one payload byte

    const RtpPacket p = decode_packet(bytes, 1);
    REQUIRE(p.ext_ts_block2.has_value());
    CHECK(*p.ext_ts_block2 == 0xDEADBEEF);
    CHECK(p.payload == std::vector<uint8_t>{0x55});

    // An element that overruns the region is malformed.
    const std::vector<uint8_t> overrun = {0x90, 0x60, 0x00, 0x01, 0x00, 0x00, 0x00,
                                          0x02, 0x00, 0x00, 0x00, 0x03, 0xBE, 0xDE,
                                          0x00, 0x01, 0x13, 0xDE, 0xAD, 0xBE};
    try {
        (void)decode_packet(overrun);
        FAIL("expected MalformedExtension");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MalformedExtension);
    }
}

TEST_CASE("encode/decode round-trip over randomized packets") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 10000; ++i) {
        const auto p = random_packet(rng, i % 2 == 0, 1400);
        const auto id = static_cast<uint8_t>(1 + rng() % 14);
        CHECK(decode_packet(encode_packet(p, id), id) == p);
    }
}

TEST_CASE("packetize splits by the usable payload budget") {
    const Timestamp64 ts{7, 0x40000000u};

    // 3000 B with a 1400 B usable budget (wire mtu 1424): 1400/1400/200.
    auto packets = packetize_frame(3000, ts, 1424, 100, 0xAB);
    REQUIRE(packets.size() == 3);
    CHECK(packets[0].payload.size() == 1400);
    CHECK(packets[1].payload.size() == 1400);
    CHECK(packets[2].payload.size() == 200);
    CHECK_FALSE(packets[0].marker);
    CHECK_FALSE(packets[1].marker);
    CHECK(packets[2].marker);
    CHECK(packets[0].seq == 100);
    CHECK(packets[1].seq == 101);
    CHECK(packets[2].seq == 102);
    for (const auto& p : packets) {
        CHECK(p.ts_block1 == ts.seconds);
        CHECK(p.ext_ts_block2 == ts.fraction);
    }

    // Count matches the ceiling-division oracle on random sizes.
    std::mt19937_64 rng(5);
    for (int i = 0; i < 2000; ++i) {
        const size_t frame = 1 + rng() % 60000;
        const size_t mtu = kRtpPacketOverhead + 1 + rng() % 1500;
        const size_t usable = mtu - kRtpPacketOverhead;
        const auto pkts = packetize_frame(frame, ts, mtu, 0, 1);
        CHECK(pkts.size() == (frame + usable - 1) / usable);
        size_t total = 0;
        for (const auto& p : pkts)
            total += p.payload.size();
        CHECK(total == frame);
    }
}

TEST_CASE("packetize edge cases") {
    const Timestamp64 ts{1, 2};
    auto single = packetize_frame(100, ts, 1424, 9, 1);
    REQUIRE(single.size() == 1);
    CHECK(single[0].marker);

    auto wrapped = packetize_frame(2000, ts, 1424, 65535, 1);
    REQUIRE(wrapped.size() == 2);
    CHECK(wrapped[0].seq == 65535);
    CHECK(wrapped[1].seq == 0);

    try {
        (void)packetize_frame(100, ts, kRtpPacketOverhead, 0, 1);
        FAIL("expected MtuTooSmall");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MtuTooSmall);
    }
}

TEST_CASE("reassembler: in-order frame completes on the marker") {
    FrameReassembler r;
    const auto packets = packetize_frame(3000, Timestamp64{1, 2}, 1424, 0, 1);
    std::vector<FrameAssembly> done;
    for (const auto& p : packets)
        for (auto& a : r.on_packet(p))
            done.push_back(a);
    REQUIRE(done.size() == 1);
    CHECK(done[0].complete);
    CHECK(done[0].received_packets == 3);
    CHECK(done[0].expected_packets == 3);
    CHECK(done[0].bytes == 3000);
    CHECK(done[0].capture_ts == Timestamp64{1, 2});
}

TEST_CASE("reassembler: missing middle packet marks the frame incomplete") {
    FrameReassembler r;
    const auto packets = packetize_frame(3000, Timestamp64{1, 2}, 1424, 0, 1);
    std::vector<FrameAssembly> done;
    for (size_t i = 0; i < packets.size(); ++i) {
        if (i == 1)
            continue;
        for (auto& a : r.on_packet(packets[i]))
            done.push_back(a);
    }
    REQUIRE(done.size() == 1);
    CHECK_FALSE(done[0].complete);
    CHECK(done[0].received_packets == 2);
    CHECK(done[0].expected_packets == 3);
}

TEST_CASE("reassembler: next frame's arrival finalizes a markerless frame") {
    FrameReassembler r;
    auto f1 = packetize_frame(3000, Timestamp64{1, 0}, 1424, 0, 1);
    auto f2 = packetize_frame(3000, Timestamp64{2, 0}, 1424, 3, 1);
    std::vector<FrameAssembly> done;
    // Frame 1 loses its marker packet; frame 2 arrives complete.
    for (auto& a : r.on_packet(f1[0])) done.push_back(a);
    for (auto& a : r.on_packet(f1[1])) done.push_back(a);
    for (const auto& p : f2)
        for (auto& a : r.on_packet(p))
            done.push_back(a);
    REQUIRE(done.size() == 2);
    CHECK_FALSE(done[0].complete);
    // Span inferred from the next frame's first sequence number.
    CHECK(done[0].expected_packets == 3);
    CHECK(done[0].received_packets == 2);
    CHECK(done[1].complete);
}

TEST_CASE("reassembler: duplicates are ignored and stragglers dropped") {
    FrameReassembler r;
    auto f1 = packetize_frame(3000, Timestamp64{1, 0}, 1424, 0, 1);
    auto f2 = packetize_frame(3000, Timestamp64{2, 0}, 1424, 3, 1);
    std::vector<FrameAssembly> done;
    for (auto& a : r.on_packet(f1[0])) done.push_back(a);
    for (auto& a : r.on_packet(f1[0])) done.push_back(a); // duplicate
    for (auto& a : r.on_packet(f1[1])) done.push_back(a);
    for (auto& a : r.on_packet(f1[2])) done.push_back(a);
    REQUIRE(done.size() == 1);
    CHECK(done[0].complete);
    CHECK(done[0].received_packets == 3);

    for (auto& a : r.on_packet(f2[0])) done.push_back(a); // frame 2 stays open
    for (auto& a : r.on_packet(f1[1])) done.push_back(a); // straggler of frame 1
    CHECK(done.size() == 1);
    const auto tail = r.flush();
    REQUIRE(tail.has_value());
    CHECK(tail->received_packets == 1); // the straggler never joined frame 2
}

TEST_CASE("reassembler: head loss detected via previous frame's marker") {
    FrameReassembler r;
    auto f1 = packetize_frame(3000, Timestamp64{1, 0}, 1424, 0, 1);
    auto f2 = packetize_frame(3000, Timestamp64{2, 0}, 1424, 3, 1);
    std::vector<FrameAssembly> done;
    for (const auto& p : f1)
        for (auto& a : r.on_packet(p))
            done.push_back(a);
    // Frame 2 loses its first packet (seq 3).
    for (auto& a : r.on_packet(f2[1])) done.push_back(a);
    for (auto& a : r.on_packet(f2[2])) done.push_back(a);
    REQUIRE(done.size() == 2);
    CHECK_FALSE(done[1].complete);
    CHECK(done[1].expected_packets == 3);
    CHECK(done[1].received_packets == 2);
}

TEST_CASE("packetize -> reassemble reproduces frames exactly (property)") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 200; ++round) {
        FrameReassembler r;
        uint16_t seq = static_cast<uint16_t>(rng());
        std::vector<std::pair<Timestamp64, size_t>> sent;
        std::vector<FrameAssembly> got;
        const int frames = 2 + static_cast<int>(rng() % 30);
        for (int f = 0; f < frames; ++f) {
            const Timestamp64 ts = Timestamp64::from_ns(static_cast<SimTime>(f + 1) * 33'366'667);
            const size_t size = 1 + rng() % 40000;
            sent.emplace_back(ts, size);
            for (const auto& p : packetize_frame(size, ts, 1424, seq, 1)) {
                ++seq;
                for (auto& a : r.on_packet(p))
                    got.push_back(a);
            }
        }
        REQUIRE(got.size() == sent.size());
        for (size_t i = 0; i < sent.size(); ++i) {
            CHECK(got[i].complete);
            CHECK(got[i].capture_ts == sent[i].first);
            CHECK(got[i].bytes == sent[i].second);
        }
    }
}

TEST_CASE("reassembler matches an omniscient reference across loss and reorder") {
    // Reference: with the whole arrival trace known, a frame's received
    // count is the number of distinct sequence numbers that arrived, and it
    // is complete iff every seq from its true start to its marker arrived.
    std::mt19937_64 rng(123);
    for (int round = 0; round < 300; ++round) {
        const int frames = 2 + static_cast<int>(rng() % 6);
        struct SentFrame {
            Timestamp64 ts;
            uint16_t first_seq;
            uint16_t marker_seq;
        };
        std::vector<SentFrame> sent;
        std::vector<RtpPacket> trace;
        uint16_t seq = static_cast<uint16_t>(rng());
        for (int f = 0; f < frames; ++f) {
            const Timestamp64 ts = Timestamp64::from_ns(static_cast<SimTime>(f + 1) * 33'366'667);
            const auto pkts = packetize_frame(1 + rng() % 8000, ts, 1424, seq, 1);
            sent.push_back(SentFrame{ts, seq, static_cast<uint16_t>(seq + pkts.size() - 1)});
            seq = static_cast<uint16_t>(seq + pkts.size());
            for (const auto& p : pkts)
                trace.push_back(p);
        }

        // Random loss, then bounded reordering strictly within a frame
        // (cross-frame reorder would legitimately diverge from an
        // omniscient oracle: the streaming side drops stragglers).
        std::vector<RtpPacket> arrived;
        for (const auto& p : trace)
            if (rng() % 10 != 0)
                arrived.push_back(p);
        auto same_frame = [](const RtpPacket& a, const RtpPacket& b) {
            return a.ts_block1 == b.ts_block1 && a.ext_ts_block2 == b.ext_ts_block2;
        };
        // The marker must not move earlier: a marker arrival finalizes the
        // frame and later same-frame packets become stragglers by design.
        for (size_t i = 1; i < arrived.size(); ++i)
            if (rng() % 4 == 0 && same_frame(arrived[i - 1], arrived[i]) && !arrived[i].marker)
                std::swap(arrived[i - 1], arrived[i]);

        std::map<uint64_t, std::set<uint16_t>> by_frame;
        for (const auto& p : arrived)
            by_frame[join_timestamp(p.ts_block1, *p.ext_ts_block2).key()].insert(p.seq);

        FrameReassembler r;
        std::vector<FrameAssembly> got;
        for (const auto& p : arrived)
            for (auto& a : r.on_packet(p))
                got.push_back(a);
        if (auto tail = r.flush())
            got.push_back(*tail);

        for (const auto& a : got) {
            const auto it = by_frame.find(a.capture_ts.key());
            REQUIRE(it != by_frame.end());
            CHECK(a.received_packets == static_cast<int>(it->second.size()));
            const auto sf = std::find_if(sent.begin(), sent.end(), [&](const SentFrame& s) {
                return s.ts.key() == a.capture_ts.key();
            });
            REQUIRE(sf != sent.end());
            bool all = true;
            for (uint16_t q = sf->first_seq;; ++q) {
                if (!it->second.count(q))
                    all = false;
                if (q == sf->marker_seq)
                    break;
            }
            // Head loss is only detectable when the previous frame's marker
            // arrived and pinned where this frame must begin. With that
            // continuity the completeness claims must agree exactly; without
            // it the claim covers the seqs from the first *arrival*. A fully
            // lost previous frame leaves a stale anchor, so the reassembler
            // may conservatively report an all-arrived frame as incomplete.
            const size_t fi = static_cast<size_t>(sf - sent.begin());
            bool continuity = false;
            bool prev_any_arrived = false;
            if (fi > 0) {
                const auto prev = by_frame.find(sent[fi - 1].ts.key());
                prev_any_arrived = prev != by_frame.end() && !prev->second.empty();
                continuity = prev != by_frame.end() &&
                             prev->second.count(sent[fi - 1].marker_seq) > 0;
            }
            if (a.expected_packets.has_value() && all && (fi == 0 || prev_any_arrived))
                CHECK(a.complete);
            if (a.complete) {
                if (continuity) {
                    CHECK(all);
                } else {
                    uint16_t min_arrived = sf->marker_seq;
                    for (uint16_t q = sf->first_seq;; ++q) {
                        if (it->second.count(q)) {
                            min_arrived = q;
                            break;
                        }
                        if (q == sf->marker_seq)
                            break;
                    }
                    bool tail_all = true;
                    for (uint16_t q = min_arrived;; ++q) {
                        if (!it->second.count(q))
                            tail_all = false;
                        if (q == sf->marker_seq)
                            break;
                    }
                    CHECK(tail_all);
                }
            }
        }
    }
}

TEST_CASE("all packets of one frame carry identical timestamp blocks") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; ++i) {
        const Timestamp64 ts{static_cast<uint32_t>(rng()), static_cast<uint32_t>(rng())};
        const auto pkts = packetize_frame(1 + rng() % 50000, ts, 1424, 0, 1);
        for (const auto& p : pkts) {
            CHECK(p.ts_block1 == pkts[0].ts_block1);
            CHECK(p.ext_ts_block2 == pkts[0].ext_ts_block2);
        }
    }
}

} // TEST_SUITE
