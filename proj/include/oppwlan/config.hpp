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

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "oppwlan/channel.hpp"
#include "oppwlan/error.hpp"
#include "oppwlan/timer.hpp"
#include "oppwlan/timing.hpp"

namespace oppwlan {

/// Channel law given directly as state probabilities.
struct ExplicitChannel {
  std::vector<double> pi;
};

/// Rayleigh fading: E_b/N_0 exponential with this mean, quantized per draw.
struct RayleighChannel {
  double mean_ebn0_db = 20.0;
};

using ChannelMode = std::variant<ExplicitChannel, RayleighChannel>;

struct SystemConfig {
  int n_stations = 7;
  double lambda_pps = 0.0;
  std::vector<double> per_state_per{0.1, 0.1, 0.1, 0.1};
  ChannelMode channel_mode = ExplicitChannel{{0.25, 0.25, 0.25, 0.25}};
  /// nullopt means packets are retried until delivered.
  std::optional<int> retry_limit = 7;
  std::uint64_t seed = 1;

  void validate(int num_states) const {
    if (n_stations < 1) throw invalid_parameter("need at least one station");
    if (!(lambda_pps >= 0.0)) throw invalid_parameter("arrival rate must be nonnegative");
    if (static_cast<int>(per_state_per.size()) != num_states)
      throw invalid_parameter("PER vector length must equal the number of channel states");
    for (double e : per_state_per)
      if (!(e >= 0.0 && e <= 1.0)) throw invalid_parameter("PER entries must lie in [0,1]");
    if (retry_limit && *retry_limit < 0) throw invalid_parameter("retry limit must be nonnegative");
    if (const auto* ex = std::get_if<ExplicitChannel>(&channel_mode)) validate_distribution(ex->pi, num_states);
  }
};

/// Everything one run (analytic or simulated) consumes. The vulnerability
/// window of the timer policy is the MAC slot.
struct Scenario {
  ChannelSpace space = ChannelSpace::table_one();
  SystemConfig config;
  double timer_p = 0.5;
  MacTiming timing = MacTiming::ieee80211a(ChannelSpace::table_one());

  TimerPolicy policy() const { return TimerPolicy(timer_p, timing.slot_us, space.num_states()); }

  /// Per-period state distribution implied by the channel mode.
  std::vector<double> state_distribution() const {
    if (const auto* ex = std::get_if<ExplicitChannel>(&config.channel_mode)) return ex->pi;
    return state_probabilities(space, std::get<RayleighChannel>(config.channel_mode).mean_ebn0_db);
  }

  void validate() const {
    config.validate(space.num_states());
    timing.validate();
    if (timing.num_states() != space.num_states())
      throw invalid_parameter("timing and channel space disagree on the number of states");
    (void)policy();
  }
};

}  // namespace oppwlan
