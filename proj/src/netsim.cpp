#include "rtlat/netsim.hpp"

#include <cmath>

namespace rtlat {

void EventQueue::at(SimTime t, std::function<void()> fn) {
    heap_.push(Event{t < now_ ? now_ : t, next_order_++, std::move(fn)});
}

bool EventQueue::run_one() {
    if (heap_.empty())
        return false;
    Event ev = std::move(const_cast<Event&>(heap_.top()));
    heap_.pop();
    now_ = ev.t;
    ev.fn();
    return true;
}

void EventQueue::run_until(SimTime t) {
    while (!heap_.empty() && heap_.top().t <= t)
        run_one();
    if (now_ < t)
        now_ = t;
}

void EventQueue::run_all() {
    while (run_one()) {
    }
}

SimLink::SimLink(EventQueue& eq, LinkConfig cfg, DeliverFn deliver)
    : eq_(eq), cfg_(cfg), bandwidth_bps_(cfg.bandwidth_bps), deliver_(std::move(deliver)),
      rng_(cfg.seed) {}

double SimLink::draw_u01() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

void SimLink::note_queue_change() {
    const bool now_busy = queued_bytes_ > 0;
    if (now_busy == busy_)
        return;
    if (busy_)
        busy_accum_ += eq_.now() - busy_since_;
    else
        busy_since_ = eq_.now();
    busy_ = now_busy;
}

int64_t SimLink::busy_ns() const {
    return busy_accum_ + (busy_ ? eq_.now() - busy_since_ : 0);
}

void SimLink::send(int dest, std::vector<uint8_t> bytes) {
    ++counters_.sent;
    if (cfg_.loss_prob > 0 && draw_u01() < cfg_.loss_prob) {
        ++counters_.dropped_loss;
        return;
    }
    const auto size = static_cast<int64_t>(bytes.size());
    if (queued_bytes_ + size > cfg_.queue_capacity_bytes) {
        ++counters_.dropped_overflow;
        return;
    }
    queue_.push_back(Pending{dest, std::move(bytes)});
    queued_bytes_ += size;
    note_queue_change();
    maybe_start_serialization();
}

void SimLink::set_bandwidth(int64_t bps) {
    bandwidth_bps_ = bps;
    maybe_start_serialization();
}

void SimLink::maybe_start_serialization() {
    if (serializing_ || queue_.empty() || bandwidth_bps_ <= 0)
        return;
    serializing_ = true;
    const auto size = static_cast<int64_t>(queue_.front().bytes.size());
    // Ceiling division keeps the 0-remainder cases exact (1500 B at
    // 12 Mbps serializes in exactly 1 ms).
    const int64_t bits_ns = size * 8 * kNsPerSec;
    const int64_t ser_ns = (bits_ns + bandwidth_bps_ - 1) / bandwidth_bps_;
    eq_.in(ser_ns, [this] {
        Pending p = std::move(queue_.front());
        queue_.pop_front();
        queued_bytes_ -= static_cast<int64_t>(p.bytes.size());
        note_queue_change();
        serializing_ = false;

        int64_t delay = cfg_.propagation_delay_ns;
        if (cfg_.delay_jitter_max_ns > 0)
            delay += static_cast<int64_t>(
                std::llround(draw_u01() * static_cast<double>(cfg_.delay_jitter_max_ns)));
        ++in_flight_;
        eq_.in(delay, [this, dest = p.dest, bytes = std::move(p.bytes)]() mutable {
            --in_flight_;
            ++counters_.delivered;
            deliver_(dest, std::move(bytes), eq_.now());
        });
        maybe_start_serialization();
    });
}

const std::vector<AttenuationPoint>& default_attenuation_table() {
    static const std::vector<AttenuationPoint> table = {
        {10.0, 53'200'000}, {20.0, 53'300'000}, {30.0, 43'300'000}, {40.0, 39'500'000},
        {45.0, 31'700'000}, {50.0, 21'700'000}, {55.0, 18'000'000}, {60.0, 0},
    };
    return table;
}

int64_t attenuation_to_bandwidth(double db, const std::vector<AttenuationPoint>& table) {
    if (table.empty())
        return 0;
    if (db <= table.front().db)
        return table.front().bandwidth_bps;
    if (db >= table.back().db)
        return table.back().bandwidth_bps;
    for (size_t i = 1; i < table.size(); ++i) {
        if (db <= table[i].db) {
            const auto& a = table[i - 1];
            const auto& b = table[i];
            const double frac = (db - a.db) / (b.db - a.db);
            const double bw = static_cast<double>(a.bandwidth_bps) +
                              frac * static_cast<double>(b.bandwidth_bps - a.bandwidth_bps);
            return static_cast<int64_t>(std::llround(bw));
        }
    }
    return table.back().bandwidth_bps;
}

int64_t attenuation_to_bandwidth(double db) {
    return attenuation_to_bandwidth(db, default_attenuation_table());
}

} // namespace rtlat
