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
#include <span>
#include <vector>

#include "oppwlan/census.hpp"
#include "oppwlan/error.hpp"
#include "oppwlan/kernels.hpp"
#include "oppwlan/timer.hpp"

namespace oppwlan {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

namespace detail {

inline void check_slots(const KernelTable& kt, int k, int l) {
  if (k < 0 || k > kt.t_max() || l < 0 || l > k) throw invalid_parameter("slot indices must satisfy 0 <= l <= k <= T_max");
}

/// prod_j S_j(k)^{n_j}
inline double all_survive(const KernelTable& kt, const std::array<int, 4>& n, int k) {
  double r = 1.0;
  for (auto s : all_pair_states) r *= std::pow(kt.survival(s, k), n[index(s)]);
  return r;
}

/// Expected value of 1/(1 + X) where X counts the pairs among `others` whose
/// AP queue alone expires at slot k while every other pair survives past k.
/// Returns the probability-weighted sum (not conditioned on survival).
inline double ap_pick_weight(const KernelTable& kt, const std::array<int, 4>& others, int k) {
  std::array<double, 4> a_mass{}, surv{};
  for (auto s : all_pair_states) {
    a_mass[index(s)] = kt.ap_at(s, k);
    surv[index(s)] = kt.survival(s, k);
  }
  double total = 0.0;
  for (int a0 = 0; a0 <= others[0]; ++a0)
    for (int a1 = 0; a1 <= others[1]; ++a1)
      for (int a2 = 0; a2 <= others[2]; ++a2)
        for (int a3 = 0; a3 <= others[3]; ++a3) {
          const std::array<int, 4> a{a0, a1, a2, a3};
          double w = 1.0;
          for (int j = 0; j < 4; ++j)
            w *= binomial(others[j], a[j]) * std::pow(a_mass[j], a[j]) * std::pow(surv[j], others[j] - a[j]);
          if (w == 0.0) continue;
          total += w / static_cast<double>(1 + a0 + a1 + a2 + a3);
        }
  return total;
}

}  // namespace detail

/// Probability that the STA queue of some s_i pair wins alone at slot k with
/// a timer of l slots.
inline double p_suc_sta(PairState i, int k, int l, const SystemCensus& census, const KernelTable& kt) {
  detail::check_slots(kt, k, l);
  const int ni = census.count(i);
  if (ni == 0) return 0.0;
  auto others = census.counts();
  others[index(i)] -= 1;
  return ni * kt.sta(i, k, l) * detail::all_survive(kt, others, k);
}

/// Probability that an AP queue of some s_i pair wins at slot k with a timer
/// of l slots. Several AP queues may expire together; the AP then picks one
/// uniformly, so the event is a success rather than a collision.
inline double p_suc_ap(PairState i, int k, int l, const SystemCensus& census, const KernelTable& kt) {
  detail::check_slots(kt, k, l);
  const int ni = census.count(i);
  if (ni == 0) return 0.0;
  const double tagged = kt.ap(i, k, l);
  if (tagged == 0.0) return 0.0;
  auto others = census.counts();
  others[index(i)] -= 1;
  // n_i * P(k;l;AP) * E[1/(1+X)] over the remaining pairs, which equals the
  // sum over (a_0..a_3) of binom(n_j,a_j) * a_i/sum(a) * ... in closed form.
  return ni * tagged * detail::ap_pick_weight(kt, others, k);
}

/// Reference form of p_suc_ap: the explicit sum over how many pairs of each
/// class have their AP queue expire at k, with uniform pick weight a_i/sum(a).
inline double p_suc_ap_by_configuration(PairState i, int k, int l, const SystemCensus& census, const KernelTable& kt) {
  detail::check_slots(kt, k, l);
  const auto n = census.counts();
  const int ii = index(i);
  const double ai_mass = kt.ap_at(i, k);
  double total = 0.0;
  for (int a0 = 0; a0 <= n[0]; ++a0)
    for (int a1 = 0; a1 <= n[1]; ++a1)
      for (int a2 = 0; a2 <= n[2]; ++a2)
        for (int a3 = 0; a3 <= n[3]; ++a3) {
          const std::array<int, 4> a{a0, a1, a2, a3};
          if (a[ii] == 0) continue;
          const int sum_a = a0 + a1 + a2 + a3;
          double w = static_cast<double>(a[ii]) / sum_a * kt.ap(i, k, l) * std::pow(ai_mass, a[ii] - 1);
          for (auto s : all_pair_states) {
            const int j = index(s);
            w *= binomial(n[j], a[j]) * std::pow(kt.survival(s, k), n[j] - a[j]);
            if (j != ii) w *= std::pow(kt.ap_at(s, k), a[j]);
          }
          total += w;
        }
  return total;
}

/// Total clean-contention success mass at slot k (all classes, lengths, sides).
inline double success_at(int k, const SystemCensus& census, const KernelTable& kt) {
  double sum = 0.0;
  for (auto s : all_pair_states)
    for (int l = 0; l <= k; ++l) sum += p_suc_ap(s, k, l, census, kt) + p_suc_sta(s, k, l, census, kt);
  return sum;
}

/// Probability that the first expiry happens at slot k and is a collision.
inline double p_col(int k, const SystemCensus& census, const KernelTable& kt) {
  if (k < 0 || k > kt.t_max()) throw invalid_parameter("slot index out of range");
  const auto n = census.counts();
  const double first_at_k = detail::all_survive(kt, n, k - 1) - detail::all_survive(kt, n, k);
  const double col = first_at_k - success_at(k, census, kt);
  if (col < 0.0) {
    if (col < -1e-12) throw consistency_error("negative collision probability");
    return 0.0;
  }
  return col;
}

/// Probability that the tagged queue on `side` wins the contention of one
/// minislot and its packet is received without error.
inline double p_hat_minislot(Side side, const TaggedCensus& tagged, const KernelTable& kt, std::span<const double> per) {
  if (static_cast<int>(per.size()) != kt.policy().num_states()) throw invalid_parameter("PER vector length mismatch");
  const auto o = tagged.others();
  const auto others = o.counts();
  double total = 0.0;
  for (int k = 0; k <= kt.t_max(); ++k) {
    double win_mass = 0.0;
    for (int l = 0; l <= k; ++l) {
      const double kern = side == Side::ap ? kt.ap(tagged.tagged, k, l) : kt.sta(tagged.tagged, k, l);
      if (kern == 0.0) continue;
      win_mass += kern * (1.0 - per[static_cast<std::size_t>(kt.policy().state_from_timer(l))]);
    }
    if (win_mass == 0.0) continue;
    const double rivals =
        side == Side::ap ? detail::ap_pick_weight(kt, others, k) : detail::all_survive(kt, others, k);
    total += win_mass * rivals;
  }
  return total;
}

/// Occupancy gains over an interval: a = s1->s3, b = s2->s3, c = s0->s1,
/// d = s0->s2, e = s0->s3.
struct CensusDelta {
  int a = 0, b = 0, c = 0, d = 0, e = 0;
};

inline SystemCensus apply(const SystemCensus& from, const CensusDelta& x) {
  return SystemCensus(from.k1 - x.a + x.c, from.k2 - x.b + x.d, from.k3 + x.a + x.b + x.e, from.n);
}

/// Probability that arrivals during `duration_us` move the census by `x`.
inline double transition_prob(const SystemCensus& from, const CensusDelta& x, double duration_us, double lambda_pps) {
  const int n0 = from.n0();
  if (x.a < 0 || x.b < 0 || x.c < 0 || x.d < 0 || x.e < 0 || x.a > from.k1 || x.b > from.k2 || x.c + x.d + x.e > n0)
    throw invalid_parameter("census delta exceeds the available pairs");
  const double p = p_nonempty(lambda_pps, duration_us);
  const int gains = x.a + x.b + x.c + x.d + 2 * x.e;
  const int stays = (from.k1 - x.a) + (from.k2 - x.b) + x.c + x.d + 2 * (n0 - x.c - x.d - x.e);
  return binomial(from.k1, x.a) * binomial(from.k2, x.b) * binomial(n0, x.c) * binomial(n0 - x.c, x.d) *
         binomial(n0 - x.c - x.d, x.e) * std::pow(p, gains) * std::pow(1.0 - p, stays);
}

/// Every reachable successor census with its probability.
inline std::vector<std::pair<SystemCensus, double>> census_successors(const SystemCensus& from, double duration_us,
                                                                      double lambda_pps) {
  std::vector<std::pair<SystemCensus, double>> out;
  const int n0 = from.n0();
  for (int a = 0; a <= from.k1; ++a)
    for (int b = 0; b <= from.k2; ++b)
      for (int c = 0; c <= n0; ++c)
        for (int d = 0; c + d <= n0; ++d)
          for (int e = 0; c + d + e <= n0; ++e) {
            const CensusDelta x{a, b, c, d, e};
            const double pr = transition_prob(from, x, duration_us, lambda_pps);
            if (pr > 0.0) out.emplace_back(apply(from, x), pr);
          }
  return out;
}

/// Transition law of a single pair over an interval.
inline std::array<double, 4> pair_transition(PairState from, double duration_us, double lambda_pps) {
  const double p = p_nonempty(lambda_pps, duration_us);
  const double ap_full = ap_nonempty(from) ? 1.0 : p;
  const double sta_full = sta_nonempty(from) ? 1.0 : p;
  std::array<double, 4> out{};
  for (int ap = 0; ap < 2; ++ap)
    for (int sta = 0; sta < 2; ++sta)
      out[index(make_pair_state(ap, sta))] = (ap ? ap_full : 1.0 - ap_full) * (sta ? sta_full : 1.0 - sta_full);
  return out;
}

}  // namespace oppwlan
