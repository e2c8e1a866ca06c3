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

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "oppwlan/error.hpp"

namespace oppwlan {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Quantized channel: state i covers E_b/N_0 in [thresholds[i], thresholds[i+1])
/// and is served at rates[i] Mbps. The first state also absorbs everything
/// below its nominal lower bound (there is no outage state).
class ChannelSpace {
public:
  ChannelSpace(std::vector<double> thresholds_db, std::vector<double> rates_mbps)
      : thresholds_db_(std::move(thresholds_db)), rates_mbps_(std::move(rates_mbps)) {
    if (thresholds_db_.empty())
      throw invalid_parameter("channel space needs at least one state");
    if (thresholds_db_.size() != rates_mbps_.size())
      throw invalid_parameter("thresholds and rates differ in length");
    for (std::size_t i = 1; i < thresholds_db_.size(); ++i) {
      if (!(thresholds_db_[i] > thresholds_db_[i - 1]))
        throw invalid_parameter("thresholds must be strictly ascending");
      if (!(rates_mbps_[i] > rates_mbps_[i - 1]))
        throw invalid_parameter("rates must be strictly ascending");
    }
    for (double r : rates_mbps_)
      if (!(r > 0.0)) throw invalid_parameter("rates must be positive");
  }

  /// The four 802.11a modes kept for rate adaptation (12/24/48/54 Mbps).
  static ChannelSpace table_one() {
    return ChannelSpace({0.0, 19.11, 26.90, 31.88}, {12.0, 24.0, 48.0, 54.0});
  }

  int num_states() const noexcept { return static_cast<int>(rates_mbps_.size()); }
  std::span<const double> thresholds_db() const noexcept { return thresholds_db_; }
  std::span<const double> rates_mbps() const noexcept { return rates_mbps_; }
  double rate_mbps(int state) const { return rates_mbps_.at(static_cast<std::size_t>(state)); }

  /// Maps an instantaneous E_b/N_0 (dB) to its state index.
  int quantize_db(double ebn0_db) const noexcept {
    int s = 0;
    for (int i = 1; i < num_states(); ++i)
      if (ebn0_db >= thresholds_db_[static_cast<std::size_t>(i)]) s = i;
    return s;
  }

  int quantize_linear(double ebn0) const noexcept {
    if (ebn0 <= 0.0) return 0;
    return quantize_db(10.0 * std::log10(ebn0));
  }

private:
  std::vector<double> thresholds_db_;
  std::vector<double> rates_mbps_;
};

/// State probabilities under Rayleigh fading: E_b/N_0 is exponential with the
/// given mean, so P(state i) = exp(-t_i/mu) - exp(-t_{i+1}/mu) in linear scale,
/// with t_0 = 0 and t_{|H|} = infinity.
inline std::vector<double> state_probabilities(const ChannelSpace& space, double mean_ebn0_db) {
  if (!std::isfinite(mean_ebn0_db))
    throw invalid_parameter("mean E_b/N_0 must be finite");
  const double mu = db_to_linear(mean_ebn0_db);
  if (!(mu > 0.0)) throw invalid_parameter("mean E_b/N_0 must be positive in linear scale");

  const int n = space.num_states();
  std::vector<double> tail(static_cast<std::size_t>(n) + 1);
  tail[0] = 1.0;
  for (int i = 1; i < n; ++i)
    tail[static_cast<std::size_t>(i)] = std::exp(-db_to_linear(space.thresholds_db()[static_cast<std::size_t>(i)]) / mu);
  tail[static_cast<std::size_t>(n)] = 0.0;

  std::vector<double> pi(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < pi.size(); ++i) pi[i] = tail[i] - tail[i + 1];
  return pi;
}

/// Checks that `pi` is a probability vector over `num_states` states.
inline void validate_distribution(std::span<const double> pi, int num_states) {
  if (static_cast<int>(pi.size()) != num_states)
    throw invalid_parameter("state distribution has wrong length");
  double sum = 0.0;
  for (double x : pi) {
    if (!(x >= 0.0)) throw invalid_parameter("state distribution has a negative entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw invalid_parameter("state distribution does not sum to 1");
}

}  // namespace oppwlan
