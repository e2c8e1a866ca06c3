/*
 * Copyright 2026 The oppwlan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "oppwlan/census.hpp"
#include "oppwlan/config.hpp"
#include "oppwlan/sim/common.hpp"
#include "oppwlan/sim/event_queue.hpp"
#include "oppwlan/sim/report.hpp"
#include "oppwlan/timer.hpp"
#include "oppwlan/timing.hpp"

namespace oppwlan::sim {

/// Discrete-event model of the opportunistic MAC: one downlink queue per STA
/// at the AP plus one uplink queue per STA, channel-dependent backoff timers,
/// and AP-internal tie resolution without collision.
///
/// Queue ids are 2*pair + side (0 = AP downlink, 1 = STA uplink).
class OpportunisticSim {
public:
  OpportunisticSim(const Scenario& sc, RunBudget budget)
      : sc_(sc),
        policy_(sc.policy()),
        budget_(budget),
        rng_(make_rng(sc.config.seed)),
        channel_(sc.space, sc.config.channel_mode),
        n_pairs_(sc.config.n_stations),
        queues_(static_cast<std::size_t>(2 * n_pairs_)),
        pair_state_(static_cast<std::size_t>(n_pairs_), -1),
        occupancy_(queues_.size()) {
    sc.validate();
    budget.validate();
  }

  SimReport run() {
    init_report();
    if (budget_.saturated) {
      for (std::size_t q = 0; q < queues_.size(); ++q) add_packet(q, 0.0);
    } else if (sc_.config.lambda_pps > 0.0) {
      for (std::size_t q = 0; q < queues_.size(); ++q) schedule_arrival(q, 0.0);
    }
    if (budget_.renewals && warmup_renewals() == 0) open_window(0.0);
    start_contention(0.0);

    const double horizon = budget_.duration_us.value_or(std::numeric_limits<double>::infinity());
    while (!events_.empty() && !done_) {
      const Event e = events_.top();
      if (e.time_us > horizon) break;
      events_.pop();
      cross_time_marks(e.time_us);
      now_ = e.time_us;
      switch (e.kind) {
        case EventKind::arrival: on_arrival(static_cast<std::size_t>(e.queue)); break;
        case EventKind::slot_tick:
          if (e.generation == tick_generation_) on_tick();
          break;
        case EventKind::transmission_end: on_transmission_end(); break;
        case EventKind::collision_end: on_collision_end(); break;
      }
    }
    if (budget_.duration_us) {
      cross_time_marks(horizon);
      now_ = horizon;
    }
    return finalize();
  }

private:
  enum class Phase { idle, contending, busy };

  struct Queue {
    std::int64_t backlog = 0;
    int retry = 0;
    int expiry = -1;
    std::int64_t arrivals = 0;
    std::int64_t delivered = 0;
    std::int64_t dropped = 0;
    std::int64_t delivered_measured = 0;
  };

  static Side side_of(std::size_t q) { return q % 2 == 0 ? Side::ap : Side::sta; }
  static int pair_of(std::size_t q) { return static_cast<int>(q / 2); }

  std::int64_t warmup_renewals() const {
    return static_cast<std::int64_t>(std::floor(budget_.warmup_fraction * static_cast<double>(*budget_.renewals)));
  }

  void init_report() {
    report_.scheme = "opportunistic";
    report_.n_stations = n_pairs_;
    report_.lambda_pps = sc_.config.lambda_pps;
    report_.seed = sc_.config.seed;
    report_.success_states.assign(static_cast<std::size_t>(policy_.num_states()), 0);
    report_.contended_draw_states.assign(static_cast<std::size_t>(policy_.num_states()), 0);
    if (budget_.duration_us) {
      warmup_end_ = budget_.warmup_fraction * *budget_.duration_us;
      mid_time_ = warmup_end_ + 0.5 * (*budget_.duration_us - warmup_end_);
    }
  }

  void cross_time_marks(double t) {
    if (!budget_.duration_us) return;
    if (!window_open_ && t >= warmup_end_) open_window(warmup_end_);
    if (!mid_taken_ && t >= mid_time_) {
      report_.backlog_mid = total_backlog();
      mid_taken_ = true;
    }
  }

  void open_window(double t) {
    window_open_ = true;
    window_start_ = t;
    occupancy_.open(t);
    last_success_end_.reset();
  }

  std::int64_t total_backlog() const {
    std::int64_t b = 0;
    for (const auto& q : queues_) b += q.backlog;
    return b;
  }

  void schedule_arrival(std::size_t q, double from) {
    std::exponential_distribution<double> gap(sc_.config.lambda_pps * 1e-6);
    events_.push({from + gap(rng_), EventKind::arrival, static_cast<int>(q), 0, 0});
  }

  void add_packet(std::size_t q, double t) {
    auto& qu = queues_[q];
    ++qu.arrivals;
    ++qu.backlog;
    occupancy_.set(q, true, t);
  }

  void remove_head(std::size_t q) {
    auto& qu = queues_[q];
    --qu.backlog;
    qu.retry = 0;
    if (qu.backlog == 0) {
      if (budget_.saturated)
        add_packet(q, now_);
      else
        occupancy_.set(q, false, now_);
    }
  }

  void on_arrival(std::size_t q) {
    add_packet(q, now_);
    schedule_arrival(q, now_);
    if (queues_[q].backlog != 1) return;
    if (phase_ == Phase::idle) {
      start_contention(now_);
    } else if (phase_ == Phase::contending) {
      // Joins at the first slot boundary at or after the arrival.
      int m = static_cast<int>(std::ceil((now_ - tau_) / policy_.delta_us() - 1e-9));
      m = std::clamp(m, 0, scheduled_slot_);
      set_timer(q, m);
      if (queues_[q].expiry < scheduled_slot_) schedule_tick(queues_[q].expiry);
    }
  }

  void start_contention(double tau) {
    tau_ = tau;
    std::fill(pair_state_.begin(), pair_state_.end(), -1);
    pairs_drawn_ = 0;
    period_draws_.clear();
    int earliest = std::numeric_limits<int>::max();
    int ap_nonempty = 0, sta_nonempty = 0;
    if (cycle_start_pending_) cycle_census_ = census_now();
    for (std::size_t q = 0; q < queues_.size(); ++q) {
      queues_[q].expiry = -1;
      if (queues_[q].backlog > 0) {
        (side_of(q) == Side::ap ? ap_nonempty : sta_nonempty) += 1;
        set_timer(q, 0);
        earliest = std::min(earliest, queues_[q].expiry);
      }
    }
    if (cycle_start_pending_ && window_open_) {
      cycle_ap_sum_ += static_cast<double>(ap_nonempty) / n_pairs_;
      cycle_sta_sum_ += static_cast<double>(sta_nonempty) / n_pairs_;
      ++cycle_count_;
    }
    cycle_start_pending_ = false;
    if (earliest == std::numeric_limits<int>::max()) {
      phase_ = Phase::idle;
      return;
    }
    phase_ = Phase::contending;
    ++cycle_attempts_;
    schedule_tick(earliest);
  }

  std::array<int, 3> census_now() const {
    std::array<int, 3> c{};
    for (int p = 0; p < n_pairs_; ++p) {
      const bool ap = queues_[static_cast<std::size_t>(2 * p)].backlog > 0;
      const bool sta = queues_[static_cast<std::size_t>(2 * p + 1)].backlog > 0;
      if (ap || sta) ++c[static_cast<std::size_t>(index(make_pair_state(ap, sta)) - 1)];
    }
    return c;
  }

  void schedule_tick(int slot) {
    scheduled_slot_ = slot;
    ++tick_generation_;
    events_.push({tau_ + slot * policy_.delta_us(), EventKind::slot_tick, -1, tick_generation_, 0});
  }

  void set_timer(std::size_t q, int slot) {
    const int pair = pair_of(q);
    auto& state = pair_state_[static_cast<std::size_t>(pair)];
    if (state < 0) {
      state = channel_(rng_);
      ++pairs_drawn_;
      period_draws_.push_back(state);
    }
    queues_[q].expiry = slot + draw_timer(policy_, state, side_of(q), rng_);
    // Reciprocity: both sides of a pair derive their timers from one draw.
    if (policy_.state_from_timer(queues_[q].expiry - slot) != state) throw consistency_error("timer does not encode the pair's channel state");
  }

  void on_tick() {
    const int k = scheduled_slot_;
    expired_.clear();
    for (std::size_t q = 0; q < queues_.size(); ++q)
      if (queues_[q].expiry == k) expired_.push_back(q);
    if (expired_.empty()) throw consistency_error("slot tick without an expiring queue");

    if (window_open_ && pairs_drawn_ >= 2)
      for (int s : period_draws_) ++report_.contended_draw_states[static_cast<std::size_t>(s)];

    const bool all_ap = std::all_of(expired_.begin(), expired_.end(), [](std::size_t q) { return side_of(q) == Side::ap; });
    const double start = tau_ + k * policy_.delta_us();
    phase_ = Phase::busy;
    if (expired_.size() == 1 || all_ap) {
      std::size_t winner = expired_.front();
      if (expired_.size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, expired_.size() - 1);
        winner = expired_[pick(rng_)];
        if (window_open_) ++report_.ap_internal_picks;
      }
      tx_queue_ = winner;
      tx_state_ = pair_state_[static_cast<std::size_t>(pair_of(winner))];
      std::bernoulli_distribution ok(1.0 - sc_.config.per_state_per[static_cast<std::size_t>(tx_state_)]);
      tx_ok_ = ok(rng_);
      events_.push({start + t_suc(sc_.timing, tx_state_), EventKind::transmission_end, static_cast<int>(winner), 0, 0});
    } else {
      if (all_ap) throw consistency_error("AP queues must never collide with each other");
      collided_ = expired_;
      events_.push({start + t_col(sc_.timing), EventKind::collision_end, -1, 0, 0});
    }
  }

  void on_transmission_end() {
    const std::size_t q = tx_queue_;
    auto& qu = queues_[q];
    if (tx_ok_) {
      ++qu.delivered;
      ++total_successes_;
      if (window_open_) {
        ++qu.delivered_measured;
        ++report_.successes;
        ++(side_of(q) == Side::ap ? report_.ap_successes : report_.sta_successes);
        ++report_.success_states[static_cast<std::size_t>(tx_state_)];
        if (last_success_end_) {
          const double len = now_ - *last_success_end_;
          renewal_sum_ += len;
          ++renewal_count_;
          if (budget_.record_trace)
            report_.trace.push_back({renewal_count_, len, side_of(q), tx_state_, cycle_attempts_, cycle_census_});
        }
        last_success_end_ = now_;
      }
      cycle_attempts_ = 0;
      cycle_start_pending_ = true;
      remove_head(q);
    } else {
      if (window_open_) ++report_.failed_transmissions;
      if (register_failure(qu.retry, sc_.config.retry_limit)) {
        ++qu.dropped;
        if (window_open_) ++report_.dropped;
        remove_head(q);
      }
    }
    if (tx_ok_ && budget_.renewals) {
      const auto warm = warmup_renewals();
      if (!window_open_ && total_successes_ >= warm) open_window(now_);
      if (!mid_taken_ && total_successes_ >= warm + (*budget_.renewals - warm) / 2) {
        report_.backlog_mid = total_backlog();
        mid_taken_ = true;
      }
      if (total_successes_ >= *budget_.renewals) {
        done_ = true;
        return;
      }
    }
    start_contention(now_);
  }

  void on_collision_end() {
    if (window_open_) ++report_.collisions;
    for (std::size_t q : collided_) {
      auto& qu = queues_[q];
      if (register_failure(qu.retry, sc_.config.retry_limit)) {
        ++qu.dropped;
        if (window_open_) ++report_.dropped;
        remove_head(q);
      }
    }
    start_contention(now_);
  }

  SimReport finalize() {
    if (!window_open_) open_window(now_);
    report_.warmup_us = window_start_;
    report_.duration_us = now_ - window_start_;
    const double secs = report_.duration_us * 1e-6;
    double ap_occ = 0.0, sta_occ = 0.0;
    for (std::size_t q = 0; q < queues_.size(); ++q) {
      const auto& qu = queues_[q];
      QueueStats s;
      s.pair = pair_of(q);
      s.side = side_of(q);
      s.arrivals = qu.arrivals;
      s.delivered = qu.delivered;
      s.dropped = qu.dropped;
      s.backlog_end = qu.backlog;
      s.delivered_measured = qu.delivered_measured;
      s.throughput_pps = secs > 0.0 ? qu.delivered_measured / secs : 0.0;
      s.nonempty_fraction = occupancy_.fraction(q, now_);
      (s.side == Side::ap ? report_.downlink_pps : report_.uplink_pps) += s.throughput_pps;
      (s.side == Side::ap ? ap_occ : sta_occ) += s.nonempty_fraction;
      report_.queues.push_back(s);
    }
    report_.system_pps = report_.downlink_pps + report_.uplink_pps;
    report_.p_a_hat = ap_occ / n_pairs_;
    report_.p_s_hat = sta_occ / n_pairs_;
    if (cycle_count_ > 0) {
      report_.p_a_cycle_start = cycle_ap_sum_ / cycle_count_;
      report_.p_s_cycle_start = cycle_sta_sum_ / cycle_count_;
    }
    if (renewal_count_ > 0) report_.mean_renewal_us = renewal_sum_ / static_cast<double>(renewal_count_);
    report_.backlog_end = total_backlog();
    if (!mid_taken_) report_.backlog_mid = report_.backlog_end;
    if (report_.successes < 1000 && sc_.config.lambda_pps > 0.0)
      report_.warnings.push_back("fewer than 1000 renewals in the measurement window");
    return report_;
  }

  Scenario sc_;
  TimerPolicy policy_;
  RunBudget budget_;
  std::mt19937_64 rng_;
  ChannelSampler channel_;
  int n_pairs_;
  std::vector<Queue> queues_;
  std::vector<int> pair_state_;
  OccupancyMeter occupancy_;
  EventQueue events_;
  SimReport report_;

  Phase phase_ = Phase::idle;
  double now_ = 0.0;
  double tau_ = 0.0;
  int scheduled_slot_ = 0;
  std::uint64_t tick_generation_ = 0;
  int pairs_drawn_ = 0;
  std::vector<int> period_draws_;
  std::vector<std::size_t> expired_;
  std::vector<std::size_t> collided_;
  std::size_t tx_queue_ = 0;
  int tx_state_ = 0;
  bool tx_ok_ = false;

  bool window_open_ = false;
  bool mid_taken_ = false;
  bool done_ = false;
  double window_start_ = 0.0;
  double warmup_end_ = 0.0;
  double mid_time_ = 0.0;
  std::int64_t total_successes_ = 0;
  std::optional<double> last_success_end_;
  double renewal_sum_ = 0.0;
  std::int64_t renewal_count_ = 0;
  int cycle_attempts_ = 0;
  std::array<int, 3> cycle_census_{};
  bool cycle_start_pending_ = true;
  double cycle_ap_sum_ = 0.0, cycle_sta_sum_ = 0.0;
  std::int64_t cycle_count_ = 0;
};

inline SimReport run_opportunistic(const Scenario& sc, const RunBudget& budget) {
  return OpportunisticSim(sc, budget).run();
}

}  // namespace oppwlan::sim
