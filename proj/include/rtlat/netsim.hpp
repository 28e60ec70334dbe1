#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <random>
#include <vector>

#include "rtlat/time.hpp"

namespace rtlat {

/// Time-ordered event queue. Events fire in nondecreasing time; ties break
/// by insertion order. Single-threaded; owns the simulation clock.
class EventQueue {
public:
    SimTime now() const { return now_; }

    void at(SimTime t, std::function<void()> fn);
    void in(SimTime dt, std::function<void()> fn) { at(now_ + dt, std::move(fn)); }

    // Runs the earliest event; false when empty.
    bool run_one();
    // Runs every event with time <= t, then advances the clock to t.
    void run_until(SimTime t);
    void run_all();

    size_t pending() const { return heap_.size(); }

private:
    struct Event {
        SimTime t;
        uint64_t order;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.t != b.t ? a.t > b.t : a.order > b.order;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    SimTime now_ = 0;
    uint64_t next_order_ = 0;
};

struct LinkConfig {
    int64_t bandwidth_bps = 12'000'000; // 0 = connection lost
    int64_t propagation_delay_ns = 2'000'000;
    int64_t queue_capacity_bytes = 250'000;
    double loss_prob = 0.0;
    int64_t delay_jitter_max_ns = 0; // uniform extra delay in [0, max]
    uint64_t seed = 1;
};

struct LinkCounters {
    uint64_t sent = 0;
    uint64_t delivered = 0;
    uint64_t dropped_loss = 0;
    uint64_t dropped_overflow = 0;
};

/// Deterministic simulated channel: tail-drop FIFO byte queue, serialization
/// at the current bandwidth, propagation delay, independent Bernoulli loss
/// and uniform delay jitter. Randomness comes from std::mt19937_64 (the
/// algorithm is pinned by the standard, so traces reproduce across
/// platforms); a draw is consumed per packet only when the corresponding
/// knob is enabled, loss first, then jitter.
///
/// Datagrams carry an opaque destination tag so several streams can share
/// one channel; delivery order and timing are unaffected by the tag.
class SimLink {
public:
    using DeliverFn = std::function<void(int dest, std::vector<uint8_t> bytes, SimTime t)>;

    SimLink(EventQueue& eq, LinkConfig cfg, DeliverFn deliver);

    void send(int dest, std::vector<uint8_t> bytes);

    // Takes effect immediately; a packet already serializing completes at
    // the old rate.
    void set_bandwidth(int64_t bps);

    int64_t bandwidth() const { return bandwidth_bps_; }
    int64_t queued_bytes() const { return queued_bytes_; }
    size_t queued_packets() const { return queue_.size(); }
    uint64_t in_flight() const { return in_flight_; }
    const LinkCounters& counters() const { return counters_; }

    // Cumulative time with a non-empty queue, up to the queue's clock.
    int64_t busy_ns() const;

private:
    struct Pending {
        int dest;
        std::vector<uint8_t> bytes;
    };

    void maybe_start_serialization();
    void note_queue_change();
    double draw_u01();

    EventQueue& eq_;
    LinkConfig cfg_;
    int64_t bandwidth_bps_;
    DeliverFn deliver_;
    std::mt19937_64 rng_;

    std::deque<Pending> queue_;
    int64_t queued_bytes_ = 0;
    bool serializing_ = false;
    uint64_t in_flight_ = 0;
    LinkCounters counters_;

    int64_t busy_accum_ = 0;
    SimTime busy_since_ = 0;
    bool busy_ = false;
};

struct AttenuationPoint {
    double db;
    int64_t bandwidth_bps;
};

// Built-in attenuation -> usable-bandwidth presets (5G lab measurements).
const std::vector<AttenuationPoint>& default_attenuation_table();

/// Piecewise-linear interpolation over the preset table; flat beyond the
/// endpoints, 0 at and above the cutoff row.
int64_t attenuation_to_bandwidth(double db, const std::vector<AttenuationPoint>& table);
int64_t attenuation_to_bandwidth(double db);

} // namespace rtlat
