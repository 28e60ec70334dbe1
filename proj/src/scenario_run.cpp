#include <algorithm>
#include <chrono>
#include <functional>
#include <memory>
#include <thread>
#include <unordered_map>

#include "rtlat/errors.hpp"
#include "rtlat/scenario.hpp"
#include "rtlat/transport.hpp"

namespace rtlat {

namespace {

// Share of pixelated frames above which a step is labeled "pixelation".
constexpr double kPixelationLabelFraction = 0.10;

struct FrameKeyInfo {
    uint64_t frame_id;
    QualityLevel level;
};

struct StreamRig {
    std::unique_ptr<SimTransport> sender_tp;
    std::unique_ptr<SimTransport> receiver_tp;
    std::unique_ptr<SenderSession> sender;
    std::unique_ptr<ReceiverSession> receiver;
    std::unordered_map<uint64_t, FrameKeyInfo> frame_index;
};

SenderConfig make_sender_config(const Scenario& sc, int stream_id) {
    SenderConfig cfg;
    cfg.ssrc = 0x1000u + static_cast<uint32_t>(stream_id);
    cfg.mtu = sc.mtu;
    cfg.ext_element_id = sc.ext_element_id;
    cfg.adaptive = sc.mode == RunMode::Adaptive;
    cfg.source.profiles = sc.profiles;
    cfg.source.start_level = sc.start_level;
    cfg.source.keyframe_factor = sc.keyframe_factor;
    cfg.source.gop_length = sc.gop_length;
    cfg.source.switch_policy = sc.switch_policy;
    cfg.thresholds = sc.thresholds;
    cfg.min_dwell_ns = ms_to_ns(sc.min_dwell_ms);
    return cfg;
}

ReceiverConfig make_receiver_config(const Scenario& sc, int stream_id) {
    ReceiverConfig cfg;
    cfg.ssrc = 0x1000u + static_cast<uint32_t>(stream_id);
    cfg.ext_element_id = sc.ext_element_id;
    cfg.rtcp_interval_ns = sc.rtcp_interval_ms * kNsPerMs;
    cfg.rtcp_clock_hz = sc.rtcp_clock_hz;
    cfg.glass = sc.glass;
    cfg.render = sc.render;
    return cfg;
}

FrameRow make_row(const LatencySample& s, int stream_id,
                  const std::unordered_map<uint64_t, FrameKeyInfo>& index, int64_t bw,
                  int64_t queue_bytes) {
    FrameRow row;
    row.display_time = s.display_time;
    row.stream_id = stream_id;
    const auto it = index.find(s.capture_ts.key());
    if (it != index.end()) {
        row.frame_id = it->second.frame_id;
        row.level = it->second.level;
    } else {
        row.frame_id = s.frame_id;
    }
    row.e2e_ns = s.e2e_ns;
    row.s2s_ns = s.s2s_ns;
    row.flag = s.flag;
    row.link_bw_bps = bw;
    row.queue_bytes = queue_bytes;
    return row;
}

struct WindowSnapshot {
    int64_t busy_ns = 0;
    std::vector<uint64_t> packets_received;
};

void fill_summary(const Scenario& sc, const std::vector<StepSpec>& steps,
                  const std::vector<std::pair<WindowSnapshot, WindowSnapshot>>& snaps,
                  const std::vector<StreamRig>& rigs, RunResult& result) {
    const SimTime warmup_ns = sec_to_ns(sc.warmup_s);
    for (const auto& step : steps) {
        const SimTime wb = step.begin + warmup_ns;
        const SimTime we = step.end;
        const auto& snap = snaps[static_cast<size_t>(step.index)];
        const double busy_frac =
            we > wb ? static_cast<double>(snap.second.busy_ns - snap.first.busy_ns) /
                          static_cast<double>(we - wb)
                    : 0.0;

        for (size_t i = 0; i < rigs.size(); ++i) {
            StepSummary s;
            s.step_index = step.index;
            s.step_value = step.value;
            s.bandwidth_bps = step.bandwidth_bps;
            s.stream_id = static_cast<int>(i);
            s.queue_busy_fraction = busy_frac;
            s.packets_received = snap.second.packets_received[i] - snap.first.packets_received[i];

            int64_t e2e_sum = 0;
            int64_t s2s_sum = 0;
            uint64_t occ[3] = {0, 0, 0};
            for (const auto& f : result.frames) {
                if (f.stream_id != static_cast<int>(i) || f.display_time < wb ||
                    f.display_time > we)
                    continue;
                ++s.displayed;
                if (f.flag == DisplayFlag::Pixelated)
                    ++s.pixelated;
                e2e_sum += f.e2e_ns;
                s2s_sum += f.s2s_ns;
                ++occ[rank(f.level)];
            }

            const auto freezes = classify_freezing(rigs[i].receiver->display_times(), wb, we,
                                                   sc.render.freeze_threshold_ns);
            s.frozen_fraction = frozen_fraction(freezes, wb, we);

            if (s.frozen_fraction > sc.render.freeze_window_fraction)
                s.label = "freezing";
            else if (s.displayed > 0 &&
                     static_cast<double>(s.pixelated) >
                         kPixelationLabelFraction * static_cast<double>(s.displayed))
                s.label = "pixelation";
            else
                s.label = "ok";

            if (s.displayed > 0 && s.label != "freezing") {
                s.has_means = true;
                s.mean_e2e_ms = static_cast<double>(e2e_sum) / static_cast<double>(s.displayed) / 1e6;
                s.mean_s2s_ms = static_cast<double>(s2s_sum) / static_cast<double>(s.displayed) / 1e6;
            }
            if (s.displayed > 0) {
                s.occ_high = static_cast<double>(occ[rank(QualityLevel::High)]) / s.displayed;
                s.occ_medium = static_cast<double>(occ[rank(QualityLevel::Medium)]) / s.displayed;
                s.occ_low = static_cast<double>(occ[rank(QualityLevel::Low)]) / s.displayed;
            }
            result.summary.push_back(std::move(s));
        }
    }
}

void fill_counters(const std::vector<StreamRig>& rigs, RunResult& result) {
    for (const auto& rig : rigs) {
        StreamCounters c;
        c.frames_sent = rig.sender->frame_log().size();
        c.packets_sent = rig.sender->packets_sent();
        c.packets_received = rig.receiver->packets_received();
        c.frames_displayed = rig.receiver->frames_displayed();
        c.frames_discarded = rig.receiver->frames_discarded();
        c.frames_pixelated = rig.receiver->frames_pixelated();
        c.final_level = rig.sender->level();
        result.streams.push_back(c);
    }
    for (const auto& rig : rigs)
        for (const auto& dec : rig.sender->decisions())
            result.decisions.push_back(DecisionRow{dec.time,
                                                   static_cast<int>(&rig - rigs.data()), dec.fpl_pct,
                                                   dec.jitter_ticks, dec.from, dec.to});
    std::stable_sort(result.decisions.begin(), result.decisions.end(),
                     [](const DecisionRow& a, const DecisionRow& b) {
                         return a.time != b.time ? a.time < b.time : a.stream_id < b.stream_id;
                     });
}

} // namespace

RunResult run_scenario(const Scenario& sc) {
    if (auto diags = validate(sc); !diags.empty()) {
        std::string msg = "invalid scenario";
        for (const auto& line : diags)
            msg += "\n  " + line;
        throw Error(Errc::ConfigError, msg);
    }

    const auto steps = build_schedule(sc);
    const SimTime total_end = steps.back().end;
    const SimTime warmup_ns = sec_to_ns(sc.warmup_s);
    const SimTime rtcp_interval_ns = sc.rtcp_interval_ms * kNsPerMs;
    const ClockPair clocks{ms_to_ns(sc.sender_offset_ms), ms_to_ns(sc.receiver_offset_ms)};

    RunResult result;
    result.steps = steps;

    EventQueue eq;
    std::vector<StreamRig> rigs(static_cast<size_t>(sc.streams));

    LinkConfig fwd_cfg = sc.link;
    fwd_cfg.bandwidth_bps = steps.front().bandwidth_bps;
    fwd_cfg.seed = sc.seed;
    LinkConfig rev_cfg = sc.reverse_link_set ? sc.reverse_link : fwd_cfg;
    rev_cfg.seed = sc.seed + 1;

    std::unique_ptr<SimLink> fwd;
    std::unique_ptr<SimLink> rev;

    fwd = std::make_unique<SimLink>(
        eq, fwd_cfg, [&](int dest, std::vector<uint8_t> bytes, SimTime t) {
            auto& rig = rigs[static_cast<size_t>(dest)];
            rig.receiver_tp->deliver(std::move(bytes), t);
            std::vector<LatencySample> samples;
            for (auto& d : rig.receiver_tp->poll(t))
                rig.receiver->on_datagram(d, t, samples);
            for (const auto& s : samples)
                result.frames.push_back(
                    make_row(s, dest, rig.frame_index, fwd->bandwidth(), fwd->queued_bytes()));
        });
    rev = std::make_unique<SimLink>(eq, rev_cfg,
                                    [&](int dest, std::vector<uint8_t> bytes, SimTime t) {
                                        auto& rig = rigs[static_cast<size_t>(dest)];
                                        rig.sender_tp->deliver(std::move(bytes), t);
                                        for (auto& d : rig.sender_tp->poll(t))
                                            rig.sender->on_datagram(d, t);
                                    });

    // Camera phases are staggered evenly across the frame interval.
    const auto frame_interval =
        static_cast<SimTime>(std::llround(1e9 / sc.profiles.high.framerate_fps));
    for (int i = 0; i < sc.streams; ++i) {
        auto& rig = rigs[static_cast<size_t>(i)];
        rig.sender_tp = std::make_unique<SimTransport>(*fwd, i);
        rig.receiver_tp = std::make_unique<SimTransport>(*rev, i);
        const SimTime start = frame_interval * i / sc.streams;
        rig.sender = std::make_unique<SenderSession>(make_sender_config(sc, i), clocks, start,
                                                     *rig.sender_tp);
        rig.receiver = std::make_unique<ReceiverSession>(make_receiver_config(sc, i), clocks,
                                                         *rig.receiver_tp);
    }

    // Bandwidth switches first at a step boundary, then snapshots, then any
    // traffic scheduled later (tie-break is insertion order). An explicitly
    // configured reverse link keeps its own bandwidth through the sweep.
    for (size_t s = 1; s < steps.size(); ++s)
        eq.at(steps[s].begin, [&, bw = steps[s].bandwidth_bps] {
            fwd->set_bandwidth(bw);
            if (!sc.reverse_link_set)
                rev->set_bandwidth(bw);
        });

    std::vector<std::pair<WindowSnapshot, WindowSnapshot>> snaps(steps.size());
    auto take_snapshot = [&]() {
        WindowSnapshot snap;
        snap.busy_ns = fwd->busy_ns();
        for (const auto& rig : rigs)
            snap.packets_received.push_back(rig.receiver->packets_received());
        return snap;
    };
    for (const auto& step : steps) {
        eq.at(step.begin + warmup_ns,
              [&, idx = static_cast<size_t>(step.index)] { snaps[idx].first = take_snapshot(); });
        eq.at(step.end,
              [&, idx = static_cast<size_t>(step.index)] { snaps[idx].second = take_snapshot(); });
    }

    std::function<void(int)> schedule_tick = [&](int i) {
        auto& rig = rigs[static_cast<size_t>(i)];
        const SimTime t = rig.sender->next_frame_time();
        if (t >= total_end)
            return;
        eq.at(t, [&, i, t] {
            auto& r = rigs[static_cast<size_t>(i)];
            r.sender->on_frame_tick(t);
            const auto& entry = r.sender->frame_log().back();
            r.frame_index.emplace(entry.capture_ts.key(),
                                  FrameKeyInfo{entry.frame_id, entry.level});
            schedule_tick(i);
        });
    };
    std::function<void(int, SimTime)> schedule_rtcp = [&](int i, SimTime t) {
        if (t > total_end)
            return;
        eq.at(t, [&, i, t] {
            rigs[static_cast<size_t>(i)].receiver->rtcp_tick(t);
            schedule_rtcp(i, t + rtcp_interval_ns);
        });
    };
    for (int i = 0; i < sc.streams; ++i) {
        schedule_tick(i);
        schedule_rtcp(i, rtcp_interval_ns);
    }

    eq.run_until(total_end);

    fill_summary(sc, steps, snaps, rigs, result);
    fill_counters(rigs, result);
    result.forward_link = fwd->counters();
    result.reverse_link = rev->counters();
    return result;
}

RunResult run_scenario_udp(const Scenario& sc, double duration_s) {
    if (auto diags = validate(sc); !diags.empty()) {
        std::string msg = "invalid scenario";
        for (const auto& line : diags)
            msg += "\n  " + line;
        throw Error(Errc::ConfigError, msg);
    }

    struct UdpRig {
        std::unique_ptr<UdpTransport> send_rtp;  // sender -> receiver media
        std::unique_ptr<UdpTransport> send_rtcp; // sender <- receiver feedback
        std::unique_ptr<UdpTransport> recv_rtp;
        std::unique_ptr<UdpTransport> recv_rtcp;
        std::unique_ptr<SenderSession> sender;
        std::unique_ptr<ReceiverSession> receiver;
        std::unordered_map<uint64_t, FrameKeyInfo> frame_index;
        SimTime next_rtcp = 0;
    };

    const ClockPair clocks{ms_to_ns(sc.sender_offset_ms), ms_to_ns(sc.receiver_offset_ms)};
    const SimTime dur = sec_to_ns(duration_s);
    const SimTime rtcp_interval_ns = sc.rtcp_interval_ms * kNsPerMs;
    const auto frame_interval =
        static_cast<SimTime>(std::llround(1e9 / sc.profiles.high.framerate_fps));

    std::vector<UdpRig> rigs(static_cast<size_t>(sc.streams));
    for (int i = 0; i < sc.streams; ++i) {
        auto& rig = rigs[static_cast<size_t>(i)];
        auto [recv_even, recv_odd] = bind_udp_port_pair();
        auto [send_even, send_odd] = bind_udp_port_pair();
        rig.recv_rtp = std::move(recv_even);
        rig.recv_rtcp = std::move(recv_odd);
        rig.send_rtp = std::move(send_even);
        rig.send_rtcp = std::move(send_odd);
        rig.send_rtp->connect_peer("127.0.0.1", rig.recv_rtp->local_port());
        rig.recv_rtcp->connect_peer("127.0.0.1", rig.send_rtcp->local_port());

        rig.sender = std::make_unique<SenderSession>(make_sender_config(sc, i), clocks,
                                                     frame_interval * i / sc.streams,
                                                     *rig.send_rtp);
        rig.receiver = std::make_unique<ReceiverSession>(make_receiver_config(sc, i), clocks,
                                                         *rig.recv_rtcp);
        rig.next_rtcp = rtcp_interval_ns;
    }

    const SimTime epoch = UdpTransport::steady_now_ns();
    for (auto& rig : rigs) {
        rig.send_rtp->set_epoch(epoch);
        rig.send_rtcp->set_epoch(epoch);
        rig.recv_rtp->set_epoch(epoch);
        rig.recv_rtcp->set_epoch(epoch);
    }
    auto elapsed = [&] { return UdpTransport::steady_now_ns() - epoch; };

    RunResult result;
    result.steps.push_back(StepSpec{0, 0.0, 0, 0, dur});

    auto pump = [&](bool sending) {
        const SimTime now = elapsed();
        for (auto& rig : rigs) {
            if (sending) {
                while (true) {
                    const SimTime t = rig.sender->next_frame_time();
                    if (t > now || t >= dur)
                        break;
                    rig.sender->on_frame_tick(t);
                    const auto& entry = rig.sender->frame_log().back();
                    rig.frame_index.emplace(entry.capture_ts.key(),
                                            FrameKeyInfo{entry.frame_id, entry.level});
                }
                while (rig.next_rtcp <= now && rig.next_rtcp < dur) {
                    rig.receiver->rtcp_tick(rig.next_rtcp);
                    rig.next_rtcp += rtcp_interval_ns;
                }
            }
            std::vector<LatencySample> samples;
            for (auto& d : rig.recv_rtp->poll(now))
                rig.receiver->on_datagram(d, d.recv_time, samples);
            for (const auto& s : samples)
                result.frames.push_back(make_row(s, static_cast<int>(&rig - rigs.data()),
                                                 rig.frame_index, 0, 0));
            for (auto& d : rig.send_rtcp->poll(now))
                rig.sender->on_datagram(d, d.recv_time);
        }
    };

    while (elapsed() < dur) {
        pump(true);
        std::this_thread::sleep_for(std::chrono::microseconds(500));
    }
    const SimTime drain_end = elapsed() + 200 * kNsPerMs;
    while (elapsed() < drain_end) {
        pump(false);
        std::this_thread::sleep_for(std::chrono::microseconds(500));
    }

    for (const auto& rig : rigs) {
        StreamCounters c;
        c.frames_sent = rig.sender->frame_log().size();
        c.packets_sent = rig.sender->packets_sent();
        c.packets_received = rig.receiver->packets_received();
        c.frames_displayed = rig.receiver->frames_displayed();
        c.frames_discarded = rig.receiver->frames_discarded();
        c.frames_pixelated = rig.receiver->frames_pixelated();
        c.final_level = rig.sender->level();
        result.streams.push_back(c);

        StepSummary s;
        s.step_index = 0;
        s.stream_id = static_cast<int>(&rig - rigs.data());
        s.displayed = c.frames_displayed;
        s.pixelated = c.frames_pixelated;
        s.packets_received = c.packets_received;
        const auto freezes = classify_freezing(rig.receiver->display_times(), 0, dur,
                                               sc.render.freeze_threshold_ns);
        s.frozen_fraction = frozen_fraction(freezes, 0, dur);
        s.label = s.frozen_fraction > sc.render.freeze_window_fraction ? "freezing"
                  : (s.displayed > 0 && static_cast<double>(s.pixelated) >
                                            kPixelationLabelFraction *
                                                static_cast<double>(s.displayed))
                      ? "pixelation"
                      : "ok";
        int64_t e2e_sum = 0;
        int64_t s2s_sum = 0;
        uint64_t count = 0;
        for (const auto& f : result.frames) {
            if (f.stream_id != s.stream_id)
                continue;
            e2e_sum += f.e2e_ns;
            s2s_sum += f.s2s_ns;
            ++count;
        }
        if (count > 0 && s.label != "freezing") {
            s.has_means = true;
            s.mean_e2e_ms = static_cast<double>(e2e_sum) / static_cast<double>(count) / 1e6;
            s.mean_s2s_ms = static_cast<double>(s2s_sum) / static_cast<double>(count) / 1e6;
        }
        result.summary.push_back(std::move(s));
    }
    for (const auto& rig : rigs)
        for (const auto& dec : rig.sender->decisions())
            result.decisions.push_back(DecisionRow{dec.time,
                                                   static_cast<int>(&rig - rigs.data()),
                                                   dec.fpl_pct, dec.jitter_ticks, dec.from,
                                                   dec.to});
    return result;
}

} // namespace rtlat
