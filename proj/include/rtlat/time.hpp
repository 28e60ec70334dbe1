#pragma once

#include <compare>
#include <cstdint>

namespace rtlat {

// Simulation time: nanoseconds since scenario start (t = 0).
using SimTime = int64_t;

constexpr SimTime kNsPerSec = 1'000'000'000;
constexpr SimTime kNsPerMs = 1'000'000;

constexpr SimTime ms_to_ns(double ms) {
    return static_cast<SimTime>(ms * 1e6 + (ms >= 0 ? 0.5 : -0.5));
}
constexpr SimTime sec_to_ns(double s) {
    return static_cast<SimTime>(s * 1e9 + (s >= 0 ? 0.5 : -0.5));
}

/// 64-bit wall-clock timestamp: 32-bit seconds + 32-bit binary fraction
/// (units of 2^-32 s, ~0.233 ns). Seconds are relative to the scenario
/// epoch and wrap modulo 2^32.
///
/// The ns <-> fraction conversion round-trips exactly for every nanosecond
/// value, so latencies derived from two timestamps are exact integer
/// nanosecond differences.
struct Timestamp64 {
    uint32_t seconds = 0;
    uint32_t fraction = 0;

    friend constexpr auto operator<=>(const Timestamp64&, const Timestamp64&) = default;

    // 64-bit key for hashing / joining records.
    constexpr uint64_t key() const {
        return (static_cast<uint64_t>(seconds) << 32) | fraction;
    }

    static Timestamp64 from_ns(SimTime ns);
};

// Fraction word for a nanosecond offset within one second. Exact inverse of
// fraction_to_ns for all inputs in [0, 1e9).
constexpr uint32_t ns_to_fraction(uint32_t ns_in_second) {
    uint64_t scaled = (static_cast<uint64_t>(ns_in_second) << 32) + 500'000'000ull;
    return static_cast<uint32_t>(scaled / 1'000'000'000ull);
}

constexpr uint32_t fraction_to_ns(uint32_t fraction) {
    uint64_t scaled = static_cast<uint64_t>(fraction) * 1'000'000'000ull + (1ull << 31);
    return static_cast<uint32_t>(scaled >> 32);
}

inline Timestamp64 Timestamp64::from_ns(SimTime ns) {
    int64_t sec = ns / kNsPerSec;
    int64_t rem = ns % kNsPerSec;
    if (rem < 0) {
        sec -= 1;
        rem += kNsPerSec;
    }
    return Timestamp64{static_cast<uint32_t>(sec), ns_to_fraction(static_cast<uint32_t>(rem))};
}

/// (later - earlier) in nanoseconds. Seconds difference is wrap-aware
/// (valid for spans below 2^31 s); negative results are returned as-is
/// and flagged downstream as a clock-skew indicator.
inline int64_t diff_ns(Timestamp64 later, Timestamp64 earlier) {
    auto dsec = static_cast<int32_t>(later.seconds - earlier.seconds);
    int64_t dfrac = static_cast<int64_t>(fraction_to_ns(later.fraction)) -
                    static_cast<int64_t>(fraction_to_ns(earlier.fraction));
    return static_cast<int64_t>(dsec) * kNsPerSec + dfrac;
}

inline double diff_ms(Timestamp64 later, Timestamp64 earlier) {
    return static_cast<double>(diff_ns(later, earlier)) / 1e6;
}

// Timestamp in units of a reference clock (e.g. 90 kHz), truncated.
inline int64_t to_ticks(Timestamp64 t, int64_t clock_hz) {
    uint64_t frac_ticks = (static_cast<uint64_t>(t.fraction) * static_cast<uint64_t>(clock_hz)) >> 32;
    return static_cast<int64_t>(t.seconds) * clock_hz + static_cast<int64_t>(frac_ticks);
}

inline int64_t ns_to_ticks(SimTime ns, int64_t clock_hz) {
    return ns / kNsPerSec * clock_hz + ns % kNsPerSec * clock_hz / kNsPerSec;
}

enum class ClockId { Sender, Receiver };

/// Constant per-run deviation of each endpoint clock from true simulation
/// time. Models imperfect NTP synchronization; no drift.
struct ClockPair {
    int64_t sender_offset_ns = 0;
    int64_t receiver_offset_ns = 0;

    int64_t offset_ns(ClockId id) const {
        return id == ClockId::Sender ? sender_offset_ns : receiver_offset_ns;
    }

    // Reading of `id`'s clock at true time `t`.
    Timestamp64 now(ClockId id, SimTime t) const {
        return Timestamp64::from_ns(t + offset_ns(id));
    }
};

} // namespace rtlat
