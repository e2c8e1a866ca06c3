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
#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "oppwlan/channel.hpp"
#include "oppwlan/config.hpp"
#include "oppwlan/error.hpp"
#include "oppwlan/sim/report.hpp"

namespace oppwlan::sim {

/// How long to run. Exactly one of `duration_us` / `renewals` is used; the
/// first `warmup_fraction` of it is excluded from every metric.
struct RunBudget {
  std::optional<double> duration_us;
  std::optional<std::int64_t> renewals;
  double warmup_fraction = 0.05;
  /// Queues never drain: a packet is generated whenever one would empty.
  bool saturated = false;
  bool record_trace = false;

  void validate() const {
    if (duration_us.has_value() == renewals.has_value())
      throw invalid_parameter("budget needs exactly one of duration or renewal count");
    if (duration_us && !(*duration_us > 0.0)) throw invalid_parameter("duration must be positive");
    if (renewals && *renewals < 1) throw invalid_parameter("renewal count must be positive");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw invalid_parameter("warm-up fraction must lie in [0,1)");
  }

  static RunBudget for_duration(double us) {
    RunBudget b;
    b.duration_us = us;
    return b;
  }
  static RunBudget for_renewals(std::int64_t n) {
    RunBudget b;
    b.renewals = n;
    return b;
  }
};

/// Draws one quantized channel state per call.
class ChannelSampler {
public:
  ChannelSampler(const ChannelSpace& space, const ChannelMode& mode) : space_(space) {
    if (const auto* ex = std::get_if<ExplicitChannel>(&mode)) {
      validate_distribution(ex->pi, space.num_states());
      law_ = std::discrete_distribution<int>(ex->pi.begin(), ex->pi.end());
    } else {
      const double mean = db_to_linear(std::get<RayleighChannel>(mode).mean_ebn0_db);
      law_ = std::exponential_distribution<double>(1.0 / mean);
    }
  }

  template <class Urbg>
  int operator()(Urbg& rng) {
    if (auto* d = std::get_if<std::discrete_distribution<int>>(&law_)) return (*d)(rng);
    return space_.quantize_linear(std::get<std::exponential_distribution<double>>(law_)(rng));
  }

private:
  ChannelSpace space_;
  std::variant<std::discrete_distribution<int>, std::exponential_distribution<double>> law_;
};

/// Time-weighted nonempty fraction of a set of queues over the measurement window.
class OccupancyMeter {
public:
  explicit OccupancyMeter(std::size_t queues) : busy_(queues, false), since_(queues, 0.0), total_(queues, 0.0) {}

  void set(std::size_t q, bool nonempty, double now) {
    if (busy_[q] == nonempty) return;
    if (open_ && busy_[q]) total_[q] += now - since_[q];
    busy_[q] = nonempty;
    since_[q] = now;
  }

  void open(double now) {
    open_ = true;
    start_ = now;
    for (std::size_t q = 0; q < busy_.size(); ++q) {
      total_[q] = 0.0;
      since_[q] = now;
    }
  }

  /// Fraction of [open, now] during which queue q was nonempty.
  double fraction(std::size_t q, double now) const {
    if (!open_ || now <= start_) return 0.0;
    const double extra = busy_[q] ? now - since_[q] : 0.0;
    return (total_[q] + extra) / (now - start_);
  }

  bool nonempty(std::size_t q) const { return busy_[q]; }

private:
  std::vector<bool> busy_;
  std::vector<double> since_;
  std::vector<double> total_;
  bool open_ = false;
  double start_ = 0.0;
};

/// Retry bookkeeping shared by both MACs. Returns true if the head packet is dropped.
inline bool register_failure(int& retry_count, const std::optional<int>& retry_limit) {
  ++retry_count;
  if (retry_limit && retry_count > *retry_limit) {
    retry_count = 0;
    return true;
  }
  return false;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6f70u, 0x776cu};
  return std::mt19937_64(seq);
}

}  // namespace oppwlan::sim
