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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "oppwlan/census.hpp"
#include "oppwlan/contention.hpp"
#include "oppwlan/error.hpp"
#include "oppwlan/kernels.hpp"
#include "oppwlan/timing.hpp"

namespace oppwlan {

/// Long-run probabilities that an AP queue / an STA queue is nonempty.
struct OccupancyPrior {
  double p_a = 0.0;
  double p_s = 0.0;

  void validate() const {
    if (!(p_a >= 0.0 && p_a <= 1.0 && p_s >= 0.0 && p_s <= 1.0))
      throw invalid_parameter("occupancy probabilities must lie in [0,1]");
  }

  /// Independent per-pair state probabilities (s0, s1, s2, s3).
  std::array<double, 4> pair_law() const {
    return {(1 - p_a) * (1 - p_s), p_a * (1 - p_s), (1 - p_a) * p_s, p_a * p_s};
  }
};

/// Multinomial prior over censuses of `n` pairs, indexed like CensusSpace(n).
inline std::vector<double> census_prior(const OccupancyPrior& prior, int n) {
  prior.validate();
  const CensusSpace space(n);
  const auto law = prior.pair_law();
  std::vector<double> out(space.size());
  for (std::size_t idx = 0; idx < space.size(); ++idx) {
    const auto& c = space[idx];
    out[idx] = binomial(n, c.k1) * binomial(n - c.k1, c.k2) * binomial(n - c.k1 - c.k2, c.k3) *
               std::pow(law[1], c.k1) * std::pow(law[2], c.k2) * std::pow(law[3], c.k3) * std::pow(law[0], c.n0());
  }
  return out;
}

/// Prior over tagged censuses, indexed like TaggedSpace(n).
inline std::vector<double> tagged_prior(const OccupancyPrior& prior, int n) {
  const TaggedSpace space(n);
  const auto law = prior.pair_law();
  const auto rest = census_prior(prior, n - 1);
  std::vector<double> out(space.size());
  for (std::size_t idx = 0; idx < space.size(); ++idx)
    out[idx] = law[static_cast<std::size_t>(index(space[idx].tagged))] * rest[idx % rest.size()];
  return out;
}

/// One way a minislot can end without a clean success.
struct Retry {
  double prob;
  double duration_us;
};

/// Outcomes of one contention period from a nonempty census.
struct MinislotOutcomes {
  /// Probability-weighted duration of the clean-success outcomes, in us.
  double success_time_us = 0.0;
  double success_prob = 0.0;
  /// Collisions and failed transmissions, grouped by duration.
  std::vector<Retry> retries;

  double retry_time_us() const {
    double t = 0.0;
    for (const auto& r : retries) t += r.prob * r.duration_us;
    return t;
  }
  double total_prob() const {
    double t = success_prob;
    for (const auto& r : retries) t += r.prob;
    return t;
  }
};

inline MinislotOutcomes minislot_outcomes(const SystemCensus& census, const KernelTable& kt, const MacTiming& timing,
                                          std::span<const double> per) {
  const auto& policy = kt.policy();
  const double slot = policy.delta_us();
  const int states = policy.num_states();
  MinislotOutcomes out;
  for (int k = 0; k <= kt.t_max(); ++k) {
    std::vector<double> won(static_cast<std::size_t>(states), 0.0);
    for (auto s : all_pair_states)
      for (int l = 0; l <= k; ++l)
        won[static_cast<std::size_t>(policy.state_from_timer(l))] +=
            p_suc_ap(s, k, l, census, kt) + p_suc_sta(s, k, l, census, kt);
    for (int st = 0; st < states; ++st) {
      const double w = won[static_cast<std::size_t>(st)];
      if (w == 0.0) continue;
      const double e = per[static_cast<std::size_t>(st)];
      const double dur = k * slot + t_suc(timing, st);
      out.success_prob += w * (1.0 - e);
      out.success_time_us += w * (1.0 - e) * dur;
      if (e > 0.0) out.retries.push_back({w * e, dur});
    }
    const double c = p_col(k, census, kt);
    if (c > 0.0) out.retries.push_back({c, k * slot + t_col(timing)});
  }
  return out;
}

namespace detail {

inline Eigen::VectorXd solve_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double& residual) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) throw singular_system("linear system is singular (rcond " + std::to_string(rc) + ")");
  Eigen::VectorXd x = lu.solve(b);
  residual = (a * x - b).lpNorm<Eigen::Infinity>() / std::max(1.0, b.lpNorm<Eigen::Infinity>());
  return x;
}

inline void check_inputs(const KernelTable& kt, const MacTiming& timing, std::span<const double> per, int n) {
  if (n < 1) throw invalid_parameter("need at least one pair");
  if (timing.num_states() != kt.policy().num_states() || static_cast<int>(per.size()) != kt.policy().num_states())
    throw invalid_parameter("timing/PER/state-space size mismatch");
  if (std::abs(timing.slot_us - kt.policy().delta_us()) > 1e-12)
    throw invalid_parameter("vulnerability window must equal the slot time");
}

}  // namespace detail

/// Conditional expected renewal lengths E[R^(k1,k2,k3)] for every census.
struct RenewalSolution {
  CensusSpace space;
  std::vector<double> expected_us;  // +inf for the empty census when lambda = 0
  double residual = 0.0;

  double at(const SystemCensus& c) const { return expected_us[space.index_of(c)]; }

  /// E[R] under a census prior.
  double expected_renewal_us(const OccupancyPrior& prior) const {
    const auto w = census_prior(prior, space.n());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] > 0.0) sum += w[i] * expected_us[i];
    return sum;
  }
};

inline RenewalSolution solve_expected_renewal(const KernelTable& kt, const MacTiming& timing, std::span<const double> per,
                                              int n) {
  detail::check_inputs(kt, timing, per, n);
  const double lambda = kt.lambda_pps();
  RenewalSolution sol{CensusSpace(n), {}, 0.0};
  const auto& space = sol.space;
  const std::size_t dim = space.size();

  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  const bool idle_defined = lambda > 0.0;

  for (std::size_t row = 0; row < dim; ++row) {
    const auto& c = space[row];
    const auto r = static_cast<Eigen::Index>(row);
    if (c.empty()) {
      if (!idle_defined) continue;  // row stays x = 0, overwritten with +inf below
      b(r) = 1e6 / (2.0 * n * lambda);
      a(r, static_cast<Eigen::Index>(space.index_of(SystemCensus(1, 0, 0, n)))) -= 0.5;
      a(r, static_cast<Eigen::Index>(space.index_of(SystemCensus(0, 1, 0, n)))) -= 0.5;
      continue;
    }
    const auto out = minislot_outcomes(c, kt, timing, per);
    b(r) = out.success_time_us + out.retry_time_us();
    for (const auto& retry : out.retries)
      for (const auto& [next, pr] : census_successors(c, retry.duration_us, lambda))
        a(r, static_cast<Eigen::Index>(space.index_of(next))) -= retry.prob * pr;
  }

  Eigen::VectorXd x = detail::solve_dense(a, b, sol.residual);
  sol.expected_us.assign(x.data(), x.data() + x.size());
  if (!idle_defined) sol.expected_us[0] = std::numeric_limits<double>::infinity();
  return sol;
}

/// Per-tagged-census probabilities that the tagged AP / STA queue delivers
/// the packet that ends the renewal cycle.
struct TaggedSolution {
  TaggedSpace space;
  std::vector<double> ap;
  std::vector<double> sta;
  double residual = 0.0;

  /// (P̄_A, P̄_S) under a prior.
  std::pair<double, double> aggregate(const OccupancyPrior& prior) const {
    const auto w = tagged_prior(prior, space.n());
    double pa = 0.0, ps = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      pa += w[i] * ap[i];
      ps += w[i] * sta[i];
    }
    return {pa, ps};
  }
};

inline TaggedSolution solve_tagged_success(const KernelTable& kt, const MacTiming& timing, std::span<const double> per,
                                           int n) {
  detail::check_inputs(kt, timing, per, n);
  const double lambda = kt.lambda_pps();
  TaggedSolution sol{TaggedSpace(n), {}, {}, 0.0};
  const auto& space = sol.space;
  const std::size_t dim = space.size();

  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), 2);

  for (std::size_t row = 0; row < dim; ++row) {
    const auto t = space[row];
    const auto r = static_cast<Eigen::Index>(row);
    const auto full = t.full();
    if (full.empty()) {
      if (lambda <= 0.0) continue;  // never leaves the idle state: probability 0
      // First arrival lands on one of the 2N queues uniformly.
      const double w = 1.0 / (2.0 * n);
      a(r, static_cast<Eigen::Index>(space.index_of(TaggedCensus(PairState::s1, 0, 0, 0, n)))) -= w;
      a(r, static_cast<Eigen::Index>(space.index_of(TaggedCensus(PairState::s2, 0, 0, 0, n)))) -= w;
      if (n > 1) {
        a(r, static_cast<Eigen::Index>(space.index_of(TaggedCensus(PairState::s0, 1, 0, 0, n)))) -= (n - 1) * w;
        a(r, static_cast<Eigen::Index>(space.index_of(TaggedCensus(PairState::s0, 0, 1, 0, n)))) -= (n - 1) * w;
      }
      continue;
    }
    rhs(r, 0) = p_hat_minislot(Side::ap, t, kt, per);
    rhs(r, 1) = p_hat_minislot(Side::sta, t, kt, per);
    const auto out = minislot_outcomes(full, kt, timing, per);
    const auto others = t.others();
    for (const auto& retry : out.retries) {
      const auto own = pair_transition(t.tagged, retry.duration_us, lambda);
      const auto rest = census_successors(others, retry.duration_us, lambda);
      for (auto s : all_pair_states) {
        const double ps = own[static_cast<std::size_t>(index(s))];
        if (ps == 0.0) continue;
        for (const auto& [next, pr] : rest) {
          const auto col = space.index_of(TaggedCensus(s, next.k1, next.k2, next.k3, n));
          a(r, static_cast<Eigen::Index>(col)) -= retry.prob * ps * pr;
        }
      }
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) throw singular_system("tagged system is singular (rcond " + std::to_string(rc) + ")");
  Eigen::MatrixXd x = lu.solve(rhs);
  sol.residual = (a * x - rhs).lpNorm<Eigen::Infinity>() / std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  sol.ap.assign(x.col(0).data(), x.col(0).data() + x.rows());
  sol.sta.assign(x.col(1).data(), x.col(1).data() + x.rows());
  return sol;
}

}  // namespace oppwlan
