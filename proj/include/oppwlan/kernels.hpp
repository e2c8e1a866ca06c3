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
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "oppwlan/census.hpp"
#include "oppwlan/channel.hpp"
#include "oppwlan/error.hpp"
#include "oppwlan/timer.hpp"

namespace oppwlan {

/// Probability that an empty queue sees at least one Poisson arrival within
/// `duration_us` microseconds at rate `lambda_pps`.
inline double p_nonempty(double lambda_pps, double duration_us) {
  return -std::expm1(-lambda_pps * duration_us * 1e-6);
}

/// Timer-expiry kernels of a single pair over one contention period, for each
/// of the four pair states. Slots run 0..T_max; kernel(k, l) is the mass of
/// the event "expires first at slot k having drawn a timer of l slots".
class KernelTable {
public:
  KernelTable(TimerPolicy policy, std::vector<double> pi, double lambda_pps)
      : policy_(policy), pi_(std::move(pi)), lambda_pps_(lambda_pps), t_max_(policy.max_slot()) {
    const std::size_t cells = static_cast<std::size_t>((t_max_ + 1) * (t_max_ + 1));
    for (int i = 0; i < 4; ++i) {
      ap_[i].assign(cells, 0.0);
      sta_[i].assign(cells, 0.0);
      both_[i].assign(cells, 0.0);
      survival_[i].assign(static_cast<std::size_t>(t_max_ + 2), 1.0);
    }
  }

  const TimerPolicy& policy() const noexcept { return policy_; }
  std::span<const double> pi() const noexcept { return pi_; }
  double lambda_pps() const noexcept { return lambda_pps_; }
  int t_max() const noexcept { return t_max_; }

  double ap(PairState s, int k, int l) const { return at(ap_, s, k, l); }
  double sta(PairState s, int k, int l) const { return at(sta_, s, k, l); }
  double both(PairState s, int k, int l) const { return at(both_, s, k, l); }

  /// P(tau_min > k) for k in -1..T_max; zero-mass past T_max is not implied
  /// for pairs whose queues were both empty at the start.
  double survival(PairState s, int k) const {
    if (k < -1) return 1.0;
    if (k > t_max_) k = t_max_;
    return survival_[index(s)][static_cast<std::size_t>(k + 1)];
  }

  /// Sum over timer lengths of the AP-first kernel at slot k.
  double ap_at(PairState s, int k) const {
    double sum = 0.0;
    for (int l = 0; l <= k; ++l) sum += ap(s, k, l);
    return sum;
  }

  double& ap_ref(PairState s, int k, int l) { return ref(ap_, s, k, l); }
  double& sta_ref(PairState s, int k, int l) { return ref(sta_, s, k, l); }
  double& both_ref(PairState s, int k, int l) { return ref(both_, s, k, l); }

  /// Fills the survival table from the kernels.
  void finalize() {
    for (auto s : all_pair_states) {
      double cum = 0.0;
      auto& surv = survival_[index(s)];
      surv[0] = 1.0;
      for (int k = 0; k <= t_max_; ++k) {
        for (int l = 0; l <= k; ++l) cum += ap(s, k, l) + sta(s, k, l) + both(s, k, l);
        surv[static_cast<std::size_t>(k + 1)] = std::max(0.0, 1.0 - cum);
      }
    }
  }

  /// CSV with one row per (state, k, l).
  void write_csv(std::ostream& os) const {
    os << "state,k,l,ap,sta,ap_sta,survival_k\n";
    os.precision(17);
    for (auto s : all_pair_states)
      for (int k = 0; k <= t_max_; ++k)
        for (int l = 0; l <= k; ++l)
          os << 's' << index(s) << ',' << k << ',' << l << ',' << ap(s, k, l) << ',' << sta(s, k, l) << ','
             << both(s, k, l) << ',' << survival(s, k) << '\n';
  }

private:
  using Grid = std::array<std::vector<double>, 4>;

  void check(int k, int l) const {
    if (k < 0 || k > t_max_ || l < 0 || l > k) throw invalid_parameter("kernel index out of range");
  }
  double at(const Grid& g, PairState s, int k, int l) const {
    check(k, l);
    return g[index(s)][static_cast<std::size_t>(k * (t_max_ + 1) + l)];
  }
  double& ref(Grid& g, PairState s, int k, int l) {
    check(k, l);
    return g[index(s)][static_cast<std::size_t>(k * (t_max_ + 1) + l)];
  }

  TimerPolicy policy_;
  std::vector<double> pi_;
  double lambda_pps_;
  int t_max_;
  Grid ap_, sta_, both_;
  std::array<std::vector<double>, 4> survival_;
};

namespace detail {

struct SetSlot {
  int slot;  // -1: no timer set before T_max
  double prob;
};

/// Slot at which a queue sets its timer: slot 0 if nonempty at the start,
/// otherwise the first slot boundary after its first arrival.
inline std::vector<SetSlot> set_slot_law(bool nonempty, double q, int t_max) {
  if (nonempty) return {{0, 1.0}};
  std::vector<SetSlot> law;
  double stay_empty = 1.0;
  for (int m = 1; m <= t_max; ++m) {
    law.push_back({m, stay_empty * q});
    stay_empty *= 1.0 - q;
  }
  law.push_back({-1, stay_empty});
  return law;
}

}  // namespace detail

/// Builds the kernel table by exhaustive enumeration of set slots, the pair's
/// shared channel state and the two timer draws.
inline KernelTable build_kernels(const TimerPolicy& policy, std::span<const double> pi, double lambda_pps) {
  validate_distribution(pi, policy.num_states());
  if (!(lambda_pps >= 0.0)) throw invalid_parameter("arrival rate must be nonnegative");

  KernelTable table(policy, std::vector<double>(pi.begin(), pi.end()), lambda_pps);
  const int t_max = policy.max_slot();
  const double q = p_nonempty(lambda_pps, policy.delta_us());

  for (auto s : all_pair_states) {
    const auto ap_law = detail::set_slot_law(ap_nonempty(s), q, t_max);
    const auto sta_law = detail::set_slot_law(sta_nonempty(s), q, t_max);
    for (const auto& a : ap_law)
      for (const auto& b : sta_law) {
        const double set_prob = a.prob * b.prob;
        if (set_prob == 0.0 || (a.slot < 0 && b.slot < 0)) continue;
        for (int state = 0; state < policy.num_states(); ++state) {
          const double state_prob = set_prob * pi[static_cast<std::size_t>(state)];
          if (state_prob == 0.0) continue;
          const int base = policy.base_slot(state);
          for (int la = base; la <= base + 1; ++la)
            for (int ls = base; ls <= base + 1; ++ls) {
              const double w = state_prob * policy.draw_probability(state, Side::ap, la) *
                               policy.draw_probability(state, Side::sta, ls);
              if (w == 0.0) continue;
              constexpr int never = 1 << 20;
              const int ea = a.slot < 0 ? never : a.slot + la;
              const int es = b.slot < 0 ? never : b.slot + ls;
              if (ea < es) {
                if (ea <= t_max) table.ap_ref(s, ea, la) += w;
              } else if (es < ea) {
                if (es <= t_max) table.sta_ref(s, es, ls) += w;
              } else if (ea <= t_max) {
                table.both_ref(s, ea, la) += w;
              }
            }
        }
      }
  }
  table.finalize();
  return table;
}

}  // namespace oppwlan
