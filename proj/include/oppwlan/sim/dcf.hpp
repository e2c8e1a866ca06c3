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
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oppwlan/config.hpp"
#include "oppwlan/sim/common.hpp"
#include "oppwlan/sim/report.hpp"
#include "oppwlan/timing.hpp"

namespace oppwlan::sim {

enum class RateAdaptation { arf, threshold };

inline const char* to_string(RateAdaptation r) { return r == RateAdaptation::arf ? "dcf-arf" : "dcf-threshold"; }

struct DcfOptions {
  RateAdaptation adaptation = RateAdaptation::arf;
  int cw_min = 15;
  int cw_max = 1023;
  int arf_up = 10;
  int arf_down = 2;
  /// When false the STAs generate no uplink traffic.
  bool uplink = true;
};

/// 802.11 DCF with binary exponential backoff. The AP serves every downlink
/// packet from one FIFO; each STA owns one uplink queue. Backoff counters
/// freeze while the medium is busy.
///
/// Report queue ids follow the opportunistic layout (2*pair + side); the AP
/// FIFO is accounted per destination.
class DcfSim {
public:
  DcfSim(const Scenario& sc, RunBudget budget, DcfOptions opt)
      : sc_(sc),
        budget_(budget),
        opt_(opt),
        rng_(make_rng(sc.config.seed)),
        channel_(sc.space, sc.config.channel_mode),
        n_(sc.config.n_stations),
        stations_(static_cast<std::size_t>(n_ + 1)),
        links_(static_cast<std::size_t>(2 * n_)),
        counts_(static_cast<std::size_t>(2 * n_)),
        next_arrival_(static_cast<std::size_t>(2 * n_), std::numeric_limits<double>::infinity()),
        occupancy_(static_cast<std::size_t>(2 * n_)) {
    sc.validate();
    budget.validate();
    if (opt.cw_min < 0 || opt.cw_max < opt.cw_min) throw invalid_parameter("contention window bounds are inconsistent");
    if (opt.arf_up < 1 || opt.arf_down < 1) throw invalid_parameter("ARF thresholds must be positive");
    for (auto& s : stations_) s.cw = opt.cw_min;
  }

  SimReport run() {
    init_report();
    for (std::size_t q = 0; q < counts_.size(); ++q) {
      if (!generates(q)) continue;
      if (budget_.saturated) {
        const int joined = add_packet(q, 0.0);
        if (joined >= 0) stations_[static_cast<std::size_t>(joined)].counter = draw_backoff(opt_.cw_min);
      } else if (sc_.config.lambda_pps > 0.0)
        next_arrival_[q] = gap();
    }
    if (budget_.renewals && warmup_renewals() == 0) open_window(0.0);

    const double horizon = budget_.duration_us.value_or(std::numeric_limits<double>::infinity());
    const double delta = sc_.timing.slot_us;
    idle_start_ = 0.0;
    while (!done_) {
      int k = std::numeric_limits<int>::max();
      for (const auto& s : stations_)
        if (s.counter >= 0) k = std::min(k, s.counter);
      const double expiry = k == std::numeric_limits<int>::max() ? std::numeric_limits<double>::infinity() : idle_start_ + k * delta;

      const auto first = std::min_element(next_arrival_.begin(), next_arrival_.end());
      const double arrival = first == next_arrival_.end() ? std::numeric_limits<double>::infinity() : *first;

      if (arrival <= expiry) {
        if (arrival > horizon) break;
        const auto q = static_cast<std::size_t>(first - next_arrival_.begin());
        advance(arrival);
        next_arrival_[q] = arrival + gap();
        const int joined = add_packet(q, arrival);
        if (joined >= 0) {
          const int m = static_cast<int>(std::ceil((arrival - idle_start_) / delta - 1e-9));
          stations_[static_cast<std::size_t>(joined)].counter = std::max(m, 0) + draw_backoff(stations_[static_cast<std::size_t>(joined)].cw);
        }
        continue;
      }
      if (expiry > horizon) break;
      advance(expiry);
      attempt(k);
    }
    if (budget_.duration_us) advance(horizon);
    return finalize();
  }

private:
  struct Station {
    std::deque<int> fifo;  // AP only: destination pair per packet
    std::int64_t backlog = 0;
    int counter = -1;  // absolute slot index of expiry within the current idle period; -1 when empty
    int cw = 15;
    int retry = 0;
  };
  /// ARF state per directed link; starts at the lowest rate.
  struct Link {
    int rate = 0;
    int ok_run = 0;
    int fail_run = 0;
  };
  struct Counts {
    std::int64_t arrivals = 0;
    std::int64_t delivered = 0;
    std::int64_t dropped = 0;
    std::int64_t backlog = 0;
    std::int64_t delivered_measured = 0;
  };

  static constexpr std::size_t ap = 0;

  bool generates(std::size_t q) const { return q % 2 == 0 || opt_.uplink; }

  std::int64_t warmup_renewals() const {
    return static_cast<std::int64_t>(std::floor(budget_.warmup_fraction * static_cast<double>(*budget_.renewals)));
  }

  double gap() {
    std::exponential_distribution<double> g(sc_.config.lambda_pps * 1e-6);
    return g(rng_);
  }

  int draw_backoff(int cw) {
    std::uniform_int_distribution<int> d(0, cw);
    return d(rng_);
  }

  void init_report() {
    report_.scheme = to_string(opt_.adaptation);
    report_.n_stations = n_;
    report_.lambda_pps = sc_.config.lambda_pps;
    report_.seed = sc_.config.seed;
    report_.success_states.assign(static_cast<std::size_t>(sc_.space.num_states()), 0);
    report_.contended_draw_states.assign(static_cast<std::size_t>(sc_.space.num_states()), 0);
    if (budget_.duration_us) {
      warmup_end_ = budget_.warmup_fraction * *budget_.duration_us;
      mid_time_ = warmup_end_ + 0.5 * (*budget_.duration_us - warmup_end_);
    }
  }

  void advance(double t) {
    if (budget_.duration_us) {
      if (!window_open_ && t >= warmup_end_) open_window(warmup_end_);
      if (!mid_taken_ && t >= mid_time_) {
        report_.backlog_mid = total_backlog();
        mid_taken_ = true;
      }
    }
    now_ = t;
  }

  void open_window(double t) {
    window_open_ = true;
    window_start_ = t;
    occupancy_.open(t);
    last_success_end_.reset();
  }

  std::int64_t total_backlog() const {
    std::int64_t b = 0;
    for (const auto& c : counts_) b += c.backlog;
    return b;
  }

  int random_destination() {
    std::uniform_int_distribution<int> d(0, n_ - 1);
    return d(rng_);
  }

  /// Enqueues one packet for queue q. Returns the station index if it just
  /// became backlogged while the medium is idle (it must draw a backoff).
  int add_packet(std::size_t q, double t) {
    auto& c = counts_[q];
    ++c.arrivals;
    ++c.backlog;
    occupancy_.set(q, true, t);
    const int pair = static_cast<int>(q / 2);
    const std::size_t st = q % 2 == 0 ? ap : static_cast<std::size_t>(pair + 1);
    auto& s = stations_[st];
    if (st == ap) s.fifo.push_back(pair);
    ++s.backlog;
    if (s.backlog != 1) return -1;
    if (busy_) {
      s.counter = draw_backoff(s.cw);
      return -1;
    }
    return static_cast<int>(st);
  }

  std::size_t head_queue(std::size_t st) const {
    return st == ap ? static_cast<std::size_t>(2 * stations_[ap].fifo.front()) : static_cast<std::size_t>(2 * (st - 1) + 1);
  }

  void remove_head(std::size_t st) {
    auto& s = stations_[st];
    const std::size_t q = head_queue(st);
    auto& c = counts_[q];
    if (st == ap) s.fifo.pop_front();
    --s.backlog;
    --c.backlog;
    s.retry = 0;
    s.cw = opt_.cw_min;
    if (budget_.saturated && s.backlog == 0) {
      add_packet(st == ap ? static_cast<std::size_t>(2 * random_destination()) : q, now_);
    } else if (c.backlog == 0) {
      occupancy_.set(q, false, now_);
    }
  }

  void fail_head(std::size_t st) {
    auto& s = stations_[st];
    s.cw = std::min(2 * s.cw + 1, opt_.cw_max);
    if (register_failure(s.retry, sc_.config.retry_limit)) {
      ++counts_[head_queue(st)].dropped;
      if (window_open_) ++report_.dropped;
      remove_head(st);
    }
  }

  void arf_update(Link& l, bool ok) {
    if (opt_.adaptation != RateAdaptation::arf) return;
    if (ok) {
      l.fail_run = 0;
      if (++l.ok_run >= opt_.arf_up) {
        l.ok_run = 0;
        l.rate = std::min(l.rate + 1, sc_.space.num_states() - 1);
      }
    } else {
      l.ok_run = 0;
      if (++l.fail_run >= opt_.arf_down) {
        l.fail_run = 0;
        l.rate = std::max(l.rate - 1, 0);
      }
    }
  }

  void attempt(int k) {
    expired_.clear();
    for (std::size_t st = 0; st < stations_.size(); ++st) {
      auto& s = stations_[st];
      if (s.counter < 0) continue;
      if (s.counter == k)
        expired_.push_back(st);
      else
        s.counter -= k;
    }
    busy_ = true;
    double end = now_;
    std::vector<std::size_t> retry;
    if (expired_.size() == 1) {
      const std::size_t st = expired_.front();
      const std::size_t q = head_queue(st);
      auto& link = links_[q];
      const int state = channel_(rng_);
      const int rate = opt_.adaptation == RateAdaptation::threshold ? state : link.rate;
      bool ok = rate <= state;
      if (ok) {
        std::bernoulli_distribution good(1.0 - sc_.config.per_state_per[static_cast<std::size_t>(rate)]);
        ok = good(rng_);
      }
      arf_update(link, ok);
      end = now_ + t_suc(sc_.timing, rate);
      advance_busy(end);
      if (ok) {
        auto& c = counts_[q];
        ++c.delivered;
        ++total_successes_;
        if (window_open_) {
          ++c.delivered_measured;
          ++report_.successes;
          ++(st == ap ? report_.ap_successes : report_.sta_successes);
          ++report_.success_states[static_cast<std::size_t>(rate)];
          if (last_success_end_) {
            renewal_sum_ += end - *last_success_end_;
            ++renewal_count_;
          }
          last_success_end_ = end;
        }
        remove_head(st);
      } else {
        if (window_open_) ++report_.failed_transmissions;
        fail_head(st);
      }
      check_renewal_budget(ok);
    } else {
      end = now_ + t_col(sc_.timing);
      advance_busy(end);
      if (window_open_) ++report_.collisions;
      for (std::size_t st : expired_) {
        arf_update(links_[head_queue(st)], false);
        fail_head(st);
      }
    }
    busy_ = false;
    idle_start_ = end;
    for (std::size_t st : expired_) {
      auto& s = stations_[st];
      s.counter = s.backlog > 0 ? draw_backoff(s.cw) : -1;
    }
  }

  /// Delivers the arrivals that fall inside a busy interval ending at `end`.
  void advance_busy(double end) {
    const double horizon = budget_.duration_us.value_or(std::numeric_limits<double>::infinity());
    for (;;) {
      const auto first = std::min_element(next_arrival_.begin(), next_arrival_.end());
      if (first == next_arrival_.end() || *first > end || *first > horizon) break;
      const auto q = static_cast<std::size_t>(first - next_arrival_.begin());
      const double t = *first;
      advance(t);
      next_arrival_[q] = t + gap();
      add_packet(q, t);
    }
    advance(std::min(end, horizon));
    now_ = end;
  }

  void check_renewal_budget(bool ok) {
    if (!ok || !budget_.renewals) return;
    const auto warm = warmup_renewals();
    if (!window_open_ && total_successes_ >= warm) open_window(now_);
    if (!mid_taken_ && total_successes_ >= warm + (*budget_.renewals - warm) / 2) {
      report_.backlog_mid = total_backlog();
      mid_taken_ = true;
    }
    if (total_successes_ >= *budget_.renewals) done_ = true;
  }

  SimReport finalize() {
    if (!window_open_) open_window(now_);
    report_.warmup_us = window_start_;
    report_.duration_us = now_ - window_start_;
    const double secs = report_.duration_us * 1e-6;
    double ap_occ = 0.0, sta_occ = 0.0;
    for (std::size_t q = 0; q < counts_.size(); ++q) {
      const auto& c = counts_[q];
      QueueStats s;
      s.pair = static_cast<int>(q / 2);
      s.side = q % 2 == 0 ? Side::ap : Side::sta;
      s.arrivals = c.arrivals;
      s.delivered = c.delivered;
      s.dropped = c.dropped;
      s.backlog_end = c.backlog;
      s.delivered_measured = c.delivered_measured;
      s.throughput_pps = secs > 0.0 ? c.delivered_measured / secs : 0.0;
      s.nonempty_fraction = occupancy_.fraction(q, now_);
      (s.side == Side::ap ? report_.downlink_pps : report_.uplink_pps) += s.throughput_pps;
      (s.side == Side::ap ? ap_occ : sta_occ) += s.nonempty_fraction;
      report_.queues.push_back(s);
    }
    report_.system_pps = report_.downlink_pps + report_.uplink_pps;
    report_.p_a_hat = ap_occ / n_;
    report_.p_s_hat = sta_occ / n_;
    if (renewal_count_ > 0) report_.mean_renewal_us = renewal_sum_ / static_cast<double>(renewal_count_);
    report_.backlog_end = total_backlog();
    if (!mid_taken_) report_.backlog_mid = report_.backlog_end;
    if (report_.successes < 1000 && (sc_.config.lambda_pps > 0.0 || budget_.saturated))
      report_.warnings.push_back("fewer than 1000 successes in the measurement window");
    return report_;
  }

  Scenario sc_;
  RunBudget budget_;
  DcfOptions opt_;
  std::mt19937_64 rng_;
  ChannelSampler channel_;
  int n_;
  std::vector<Station> stations_;
  std::vector<Link> links_;
  std::vector<Counts> counts_;
  std::vector<double> next_arrival_;
  OccupancyMeter occupancy_;
  SimReport report_;
  std::vector<std::size_t> expired_;

  double now_ = 0.0;
  double idle_start_ = 0.0;
  bool busy_ = false;
  bool window_open_ = false;
  bool mid_taken_ = false;
  bool done_ = false;
  double window_start_ = 0.0;
  double warmup_end_ = 0.0;
  double mid_time_ = 0.0;
  std::int64_t total_successes_ = 0;
  double renewal_sum_ = 0.0;
  std::int64_t renewal_count_ = 0;
  std::optional<double> last_success_end_;
};

inline SimReport run_dcf(const Scenario& sc, RunBudget budget, DcfOptions opt = {}) { return DcfSim(sc, budget, opt).run(); }

}  // namespace oppwlan::sim
