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

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oppwlan/timer.hpp"

namespace oppwlan::sim {

struct QueueStats {
  int pair = 0;
  Side side = Side::ap;
  // Whole-run counters; arrivals = delivered + dropped + backlog_end.
  std::int64_t arrivals = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
  std::int64_t backlog_end = 0;
  // Measurement window (after warm-up).
  std::int64_t delivered_measured = 0;
  double throughput_pps = 0.0;
  double nonempty_fraction = 0.0;
};

/// One line of the optional per-renewal trace.
struct RenewalRecord {
  std::int64_t index = 0;
  double length_us = 0.0;
  Side winner = Side::ap;
  int state = 0;
  int attempts = 0;  // contention periods in the cycle, including the successful one
  /// Census (k1, k2, k3) at the first contention period of the cycle.
  std::array<int, 3> start_census{};
};

struct SimReport {
  std::string scheme;
  int n_stations = 0;
  double lambda_pps = 0.0;
  std::uint64_t seed = 0;
  /// Length of the measurement window (simulated time after warm-up).
  double duration_us = 0.0;
  double warmup_us = 0.0;
  std::vector<QueueStats> queues;

  double uplink_pps = 0.0;
  double downlink_pps = 0.0;
  double system_pps = 0.0;

  std::int64_t successes = 0;  // measured window
  std::int64_t ap_successes = 0;
  std::int64_t sta_successes = 0;
  std::int64_t failed_transmissions = 0;
  std::int64_t collisions = 0;
  /// Contention periods in which several AP queues expired together and the
  /// AP picked one of them.
  std::int64_t ap_internal_picks = 0;
  std::int64_t dropped = 0;

  double p_a_hat = 0.0;
  double p_s_hat = 0.0;
  /// Fraction of AP / STA queues nonempty at the first contention period of each renewal cycle.
  double p_a_cycle_start = 0.0;
  double p_s_cycle_start = 0.0;
  std::optional<double> mean_renewal_us;

  /// Total backlog over all queues at the middle and at the end of the window.
  std::int64_t backlog_mid = 0;
  std::int64_t backlog_end = 0;

  /// Successful transmissions per channel state, and contention periods with
  /// at least two contending pairs, by the state of the raw channel draw.
  std::vector<std::int64_t> success_states;
  std::vector<std::int64_t> contended_draw_states;

  std::vector<std::string> warnings;
  std::vector<RenewalRecord> trace;

  /// Backlog growth over the second half of the window, packets/s.
  double backlog_growth_pps() const {
    return duration_us > 0.0 ? (backlog_end - backlog_mid) / (0.5 * duration_us * 1e-6) : 0.0;
  }
};

inline std::pair<double, double> estimate_occupancy(const SimReport& r) { return {r.p_a_hat, r.p_s_hat}; }

inline std::optional<double> estimate_renewal(const SimReport& r) { return r.mean_renewal_us; }

inline nlohmann::json to_json(const SimReport& r) {
  nlohmann::json queues = nlohmann::json::array();
  for (const auto& q : r.queues)
    queues.push_back({{"pair", q.pair},
                      {"side", to_string(q.side)},
                      {"arrivals", q.arrivals},
                      {"delivered", q.delivered},
                      {"dropped", q.dropped},
                      {"backlog_end", q.backlog_end},
                      {"delivered_measured", q.delivered_measured},
                      {"throughput_pps", q.throughput_pps},
                      {"nonempty_fraction", q.nonempty_fraction}});
  nlohmann::json j{{"scheme", r.scheme},
                   {"n_stations", r.n_stations},
                   {"lambda_pps", r.lambda_pps},
                   {"seed", r.seed},
                   {"duration_us", r.duration_us},
                   {"warmup_us", r.warmup_us},
                   {"uplink_pps", r.uplink_pps},
                   {"downlink_pps", r.downlink_pps},
                   {"system_pps", r.system_pps},
                   {"successes", r.successes},
                   {"ap_successes", r.ap_successes},
                   {"sta_successes", r.sta_successes},
                   {"failed_transmissions", r.failed_transmissions},
                   {"collisions", r.collisions},
                   {"ap_internal_picks", r.ap_internal_picks},
                   {"dropped", r.dropped},
                   {"p_a_hat", r.p_a_hat},
                   {"p_s_hat", r.p_s_hat},
                   {"p_a_cycle_start", r.p_a_cycle_start},
                   {"p_s_cycle_start", r.p_s_cycle_start},
                   {"mean_renewal_us", r.mean_renewal_us ? nlohmann::json(*r.mean_renewal_us) : nlohmann::json()},
                   {"backlog_mid", r.backlog_mid},
                   {"backlog_end", r.backlog_end},
                   {"success_states", r.success_states},
                   {"contended_draw_states", r.contended_draw_states},
                   {"warnings", r.warnings},
                   {"queues", queues}};
  return j;
}

inline void write_trace_csv(std::ostream& os, const SimReport& r) {
  os << "renewal,length_us,winner,state,attempts,k1,k2,k3\n";
  os.precision(17);
  for (const auto& t : r.trace)
    os << t.index << ',' << t.length_us << ',' << to_string(t.winner) << ',' << t.state << ',' << t.attempts << ',' << t.start_census[0]
       << ',' << t.start_census[1] << ',' << t.start_census[2] << '\n';
}

}  // namespace oppwlan::sim
