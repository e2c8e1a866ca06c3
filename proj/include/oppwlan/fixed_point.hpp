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
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "oppwlan/config.hpp"
#include "oppwlan/kernels.hpp"
#include "oppwlan/renewal.hpp"

namespace oppwlan {

struct AnalysisSolution {
  double lambda_pps = 0.0;
  double p_a = 0.0;
  double p_s = 0.0;
  double expected_renewal_us = 0.0;
  double pbar_a = 0.0;
  double pbar_s = 0.0;
  double theta_ap = 0.0;   // packets/s
  double theta_sta = 0.0;  // packets/s
  bool converged = false;
  int iterations = 0;
  /// |N (P̄_A + P̄_S) - 1| at the reported point.
  double identity_error = 0.0;
};

/// Solver settings for the damped multiplicative update
/// P <- clamp(P * (lambda / Theta(P))^gamma, eps, 1 - eps).
struct FixedPointOptions {
  double gamma = 0.5;
  double eps = 1e-6;
  double tolerance = 1e-4;
  int max_iterations = 500;
  int pinned_limit = 50;
  /// Starting point for both coordinates.
  double initial = 0.5;
  /// Called with every evaluation of the update map.
  std::function<void(const AnalysisSolution&)> observer;
};

/// The renewal and tagged systems at one arrival rate. Both are independent of
/// the occupancy prior, so evaluating Theta at a new (P_A, P_S) is a weighted sum.
class AnalysisModel {
public:
  AnalysisModel(const Scenario& sc, double lambda_pps)
      : n_(sc.config.n_stations),
        lambda_(lambda_pps),
        kernels_(build_kernels(sc.policy(), sc.state_distribution(), lambda_pps)),
        renewal_(solve_expected_renewal(kernels_, sc.timing, sc.config.per_state_per, n_)),
        tagged_(solve_tagged_success(kernels_, sc.timing, sc.config.per_state_per, n_)) {}

  const KernelTable& kernels() const noexcept { return kernels_; }
  const RenewalSolution& renewal() const noexcept { return renewal_; }
  const TaggedSolution& tagged() const noexcept { return tagged_; }
  int n() const noexcept { return n_; }
  double lambda_pps() const noexcept { return lambda_; }

  AnalysisSolution evaluate(const OccupancyPrior& prior) const {
    AnalysisSolution s;
    s.lambda_pps = lambda_;
    s.p_a = prior.p_a;
    s.p_s = prior.p_s;
    s.expected_renewal_us = renewal_.expected_renewal_us(prior);
    std::tie(s.pbar_a, s.pbar_s) = tagged_.aggregate(prior);
    s.theta_ap = s.pbar_a / s.expected_renewal_us * 1e6;
    s.theta_sta = s.pbar_s / s.expected_renewal_us * 1e6;
    s.identity_error = std::abs(n_ * (s.pbar_a + s.pbar_s) - 1.0);
    if (!(s.identity_error <= 1e-6)) throw consistency_error("per-renewal success probabilities do not sum to 1/N");
    return s;
  }

private:
  int n_;
  double lambda_;
  KernelTable kernels_;
  RenewalSolution renewal_;
  TaggedSolution tagged_;
};

/// Solves Theta_AP = Theta_STA = lambda for (P_A, P_S). Non-convergence is
/// reported through `converged`, not thrown.
inline AnalysisSolution fixed_point(const AnalysisModel& model, const FixedPointOptions& opt = {}) {
  const double lambda = model.lambda_pps();
  if (!(lambda > 0.0)) throw invalid_parameter("fixed point needs a positive arrival rate");
  OccupancyPrior p{opt.initial, opt.initial};
  int pinned = 0;
  AnalysisSolution s;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    s = model.evaluate(p);
    s.iterations = it;
    if (opt.observer) opt.observer(s);
    const double ra = s.theta_ap / lambda - 1.0;
    const double rs = s.theta_sta / lambda - 1.0;
    if (std::abs(ra) < opt.tolerance && std::abs(rs) < opt.tolerance) {
      s.converged = true;
      return s;
    }
    const auto step = [&](double x, double theta) {
      return std::clamp(x * std::pow(lambda / theta, opt.gamma), opt.eps, 1.0 - opt.eps);
    };
    p = OccupancyPrior{step(p.p_a, s.theta_ap), step(p.p_s, s.theta_sta)};
    pinned = (p.p_a >= 1.0 - opt.eps || p.p_s >= 1.0 - opt.eps) ? pinned + 1 : 0;
    if (pinned >= opt.pinned_limit) break;
  }
  s.converged = false;
  return s;
}

inline AnalysisSolution fixed_point(double lambda_pps, const Scenario& sc, const FixedPointOptions& opt = {}) {
  if (!(lambda_pps > 0.0)) throw invalid_parameter("fixed point needs a positive arrival rate");
  return fixed_point(AnalysisModel(sc, lambda_pps), opt);
}

struct CapacityResult {
  std::optional<double> capacity_pps;
  std::vector<AnalysisSolution> table;
};

/// Largest grid rate at which the fixed point converges.
inline CapacityResult capacity_search(const Scenario& sc, const std::vector<double>& lambda_grid,
                                      const FixedPointOptions& opt = {}) {
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end()))
    throw invalid_parameter("lambda grid must be ascending");
  CapacityResult r;
  for (double lambda : lambda_grid) {
    r.table.push_back(fixed_point(lambda, sc, opt));
    if (r.table.back().converged) r.capacity_pps = lambda;
  }
  return r;
}

inline const char* analysis_csv_header() {
  return "lambda_pps,p_a,p_s,expected_renewal_us,pbar_a,pbar_s,theta_ap_pps,theta_sta_pps,converged,iterations";
}

inline void write_csv_row(std::ostream& os, const AnalysisSolution& s) {
  os << s.lambda_pps << ',' << s.p_a << ',' << s.p_s << ',' << s.expected_renewal_us << ',' << s.pbar_a << ','
     << s.pbar_s << ',' << s.theta_ap << ',' << s.theta_sta << ',' << (s.converged ? 1 : 0) << ',' << s.iterations
     << '\n';
}

inline nlohmann::json to_json(const AnalysisSolution& s) {
  return {{"lambda_pps", s.lambda_pps},
          {"p_a", s.p_a},
          {"p_s", s.p_s},
          {"expected_renewal_us", s.expected_renewal_us},
          {"pbar_a", s.pbar_a},
          {"pbar_s", s.pbar_s},
          {"theta_ap_pps", s.theta_ap},
          {"theta_sta_pps", s.theta_sta},
          {"converged", s.converged},
          {"iterations", s.iterations}};
}

}  // namespace oppwlan
