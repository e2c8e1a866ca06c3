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
#include <random>

#include "oppwlan/error.hpp"

namespace oppwlan {

enum class Side { ap, sta };

inline const char* to_string(Side s) { return s == Side::ap ? "ap" : "sta"; }

/// Randomized SNR-to-backoff mapping. A queue whose pair sees state i draws
/// from the two-slot set {b(i), b(i)+1} with b(i) = 2(|H|-1-i): the AP takes
/// the even slot with probability p, the STA takes it with probability 1-p.
/// Slots are counted in units of the vulnerability window (equal to the slot
/// time here).
class TimerPolicy {
public:
  TimerPolicy(double p, double delta_us, int num_states) : p_(p), delta_us_(delta_us), num_states_(num_states) {
    if (!(p >= 0.0 && p <= 1.0)) throw invalid_parameter("timer probability p must lie in [0,1]");
    if (!(delta_us > 0.0)) throw invalid_parameter("vulnerability window must be positive");
    if (num_states < 1) throw invalid_parameter("need at least one channel state");
  }

  double p() const noexcept { return p_; }
  double delta_us() const noexcept { return delta_us_; }
  int num_states() const noexcept { return num_states_; }
  int max_slot() const noexcept { return 2 * num_states_ - 1; }

  int base_slot(int state) const {
    check_state(state);
    return 2 * (num_states_ - 1 - state);
  }

  /// Probability that `side` draws the even (earlier) slot of its pair.
  double even_probability(Side side) const noexcept { return side == Side::ap ? p_ : 1.0 - p_; }

  /// Probability of drawing `slots` given `state`; zero outside the support.
  double draw_probability(int state, Side side, int slots) const {
    const int b = base_slot(state);
    if (slots == b) return even_probability(side);
    if (slots == b + 1) return 1.0 - even_probability(side);
    return 0.0;
  }

  int state_from_timer(int slots) const {
    if (slots < 0 || slots > max_slot()) throw invalid_parameter("timer slot out of range");
    return num_states_ - 1 - slots / 2;
  }

  void check_state(int state) const {
    if (state < 0 || state >= num_states_) throw invalid_parameter("channel state index out of range");
  }

private:
  double p_;
  double delta_us_;
  int num_states_;
};

template <class Urbg>
int draw_timer(const TimerPolicy& policy, int state, Side side, Urbg& rng) {
  const int b = policy.base_slot(state);
  std::bernoulli_distribution even(policy.even_probability(side));
  return even(rng) ? b : b + 1;
}

inline int state_from_timer(const TimerPolicy& policy, int slots) { return policy.state_from_timer(slots); }

}  // namespace oppwlan
