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
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oppwlan/contention.hpp"
#include "oppwlan/expctl/commands.hpp"
#include "oppwlan/fixed_point.hpp"
#include "oppwlan/sim/dcf.hpp"
#include "oppwlan/sim/opportunistic.hpp"
#include "support/oracle.hpp"

using namespace oppwlan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

std::string pct(double x) { return num(100.0 * x, 3) + "%"; }

/// Uniform channel, unlimited retries.
Scenario uniform_scenario(int n) {
  Scenario sc;
  sc.config.n_stations = n;
  sc.config.retry_limit = std::nullopt;
  return sc;
}

/// Rayleigh fading at 20 dB mean.
Scenario fading_scenario() {
  Scenario sc;
  sc.config.channel_mode = RayleighChannel{20.0};
  return sc;
}

sim::SimReport simulate(Scenario sc, double lambda, const sim::RunBudget& budget, std::uint64_t seed = 1) {
  sc.config.lambda_pps = lambda;
  sc.config.seed = seed;
  return sim::run_opportunistic(sc, budget);
}

sim::SimReport simulate_dcf(Scenario sc, double lambda, sim::RateAdaptation a, const sim::RunBudget& budget) {
  sc.config.lambda_pps = lambda;
  sim::DcfOptions o;
  o.adaptation = a;
  return sim::run_dcf(sc, budget, o);
}

sim::RunBudget saturated(double seconds) {
  auto b = sim::RunBudget::for_duration(seconds * 1e6);
  b.saturated = true;
  return b;
}

Outcome criterion1() {
  Outcome o{true, ""};
  std::ostringstream d;
  auto check = [&](int n, double lambda, double tolerance, const sim::RunBudget& budget) {
    const auto sc = uniform_scenario(n);
    const auto a = fixed_point(lambda, sc);
    const auto r = simulate(sc, lambda, budget);
    d << " N=" << n << ",lambda=" << num(lambda) << ":";
    if (!a.converged) {
      d << "analysis-diverged";
      o.pass = false;
      return;
    }
    const double ea = std::abs(r.p_a_hat / a.p_a - 1.0);
    const double es = std::abs(r.p_s_hat / a.p_s - 1.0);
    const double er = std::abs(*r.mean_renewal_us / a.expected_renewal_us - 1.0);
    const double worst = std::max({ea, es, er});
    d << "P_A " << pct(ea) << " P_S " << pct(es) << " E[R] " << pct(er) << (worst <= tolerance ? "" : "(>" + pct(tolerance) + ")");
    if (!(worst <= tolerance)) o.pass = false;
  };
  for (double lambda : {20.0, 40.0, 60.0, 80.0}) check(7, lambda, 0.10, sim::RunBudget::for_duration(300e6));
  for (double lambda : {20.0, 40.0, 60.0, 80.0}) check(2, lambda, 0.02, sim::RunBudget::for_renewals(1000000));
  o.detail = d.str();
  return o;
}

Outcome criterion2() {
  const auto sc = uniform_scenario(7);
  std::ostringstream d;
  const auto at80 = fixed_point(80.0, sc);
  d << " analysis lambda=80 " << (at80.converged ? "converged" : "diverged") << ";";
  std::optional<double> boundary;
  std::optional<double> first_failure;
  for (double lambda = 5.0; lambda <= 100.0; lambda += 5.0) {
    const bool ok = fixed_point(lambda, sc).converged;
    if (!ok && !first_failure) first_failure = lambda;
    if (lambda >= 85.0 && !ok && !boundary) boundary = lambda;
  }
  d << " first failure on 5..100 grid: " << (first_failure ? num(*first_failure) : "none") << ";";
  d << " first failure in [85,100]: " << (boundary ? num(*boundary) : "none") << ";";
  bool growth_ok = true;
  d << " sim backlog growth (pps):";
  for (double lambda : {80.0, 90.0, 100.0}) {
    const auto r = simulate(sc, lambda, sim::RunBudget::for_duration(200e6));
    const double g = r.backlog_growth_pps();
    const double offered = 2.0 * 7 * lambda;
    d << " lambda=" << num(lambda) << ":" << num(g) << "(" << pct(g / offered) << " of offered)";
    if (lambda >= 90.0 && !(g > 0.01 * offered)) growth_ok = false;
  }
  return {at80.converged && boundary.has_value() && !(first_failure && *first_failure < *boundary) && growth_ok, d.str()};
}

Outcome criterion3() {
  const auto sc = fading_scenario();
  const auto budget = saturated(60.0);
  const auto opp = simulate(sc, 1.0, budget);
  const auto arf = simulate_dcf(sc, 1.0, sim::RateAdaptation::arf, budget);
  const auto thr = simulate_dcf(sc, 1.0, sim::RateAdaptation::threshold, budget);
  const double best = std::max(arf.system_pps, thr.system_pps);
  const double ratio = opp.system_pps / best;
  std::ostringstream d;
  d << " saturated system pps: opportunistic " << num(opp.system_pps) << ", dcf-arf " << num(arf.system_pps)
    << ", dcf-threshold " << num(thr.system_pps) << "; ratio " << num(ratio, 3) << " (need >= 1.3)";
  return {ratio >= 1.3, d.str()};
}

Outcome criterion4() {
  const auto sc = fading_scenario();
  std::ostringstream d;
  bool pass = true;

  for (auto a : {sim::RateAdaptation::arf, sim::RateAdaptation::threshold}) {
    const auto r = simulate_dcf(sc, 1.0, a, saturated(60.0));
    const double share = r.downlink_pps / r.system_pps;
    d << " " << sim::to_string(a) << " saturated AP share " << num(share, 4) << ";";
    if (!(std::abs(share - 0.125) <= 0.01)) pass = false;
  }

  const auto budget = sim::RunBudget::for_duration(60e6);
  std::vector<double> grid;
  for (double l = 10.0; l <= 120.0; l += 5.0) grid.push_back(l);
  const std::pair<sim::RateAdaptation, double> peaks[] = {{sim::RateAdaptation::arf, 50.0}, {sim::RateAdaptation::threshold, 60.0}};
  for (const auto& [a, target] : peaks) {
    double best = -1.0, at = 0.0;
    for (double l : grid) {
      const auto r = simulate_dcf(sc, l, a, budget);
      if (r.downlink_pps > best) {
        best = r.downlink_pps;
        at = l;
      }
    }
    d << " " << sim::to_string(a) << " downlink peak " << num(best) << " pps at lambda=" << num(at) << " (target "
      << num(target) << "+-15);";
    if (!(std::abs(at - target) <= 15.0)) pass = false;
  }

  double lo = 1e9, hi = -1e9, lo_at = 0, hi_at = 0;
  for (double l : grid) {
    const auto r = simulate(sc, l, budget);
    const double ratio = r.uplink_pps / r.downlink_pps;
    if (ratio < lo) lo = ratio, lo_at = l;
    if (ratio > hi) hi = ratio, hi_at = l;
  }
  d << " opportunistic UL/DL in [" << num(lo, 4) << " at " << num(lo_at) << ", " << num(hi, 4) << " at " << num(hi_at)
    << "]";
  if (!(lo >= 0.9 && hi <= 1.1)) pass = false;
  return {pass, d.str()};
}

Outcome criterion5() {
  std::ostringstream d;
  const std::vector<std::vector<double>> pis{{0.25, 0.25, 0.25, 0.25}, {0.1, 0.2, 0.3, 0.4}, {0.5, 0.3, 0.15, 0.05}};
  const std::vector<double> per{0.1, 0.2, 0.05, 0.3};
  const std::vector<std::vector<PairState>> censuses{{PairState::s1, PairState::s2, PairState::s3},
                                                     {PairState::s3, PairState::s3, PairState::s3},
                                                     {PairState::s0, PairState::s1, PairState::s3},
                                                     {PairState::s2, PairState::s0}};
  const std::vector<double> lambdas{50.0, 2000.0, 20000.0};
  const std::vector<double> ps{0.5, 0.8};

  std::vector<oracle::Check> all;
  std::uint64_t seed = 1;
  for (const auto& pi : pis)
    for (double lambda : lambdas)
      for (double p : ps)
        for (const auto& c : censuses) {
          const oracle::Setup s{c, pi, lambda, p, 9.0, per};
          const auto checks = oracle::compare(s, oracle::run(s, 1000000, seed++));
          all.insert(all.end(), checks.begin(), checks.end());
        }

  const CensusSpace space3(3);
  for (double d_us : {9.0, 1078.0})
    for (double lambda : {50.0, 400.0}) {
      const SystemCensus from(1, 1, 0, 3);
      const auto hits = oracle::transition_counts(from, d_us, lambda, 1000000, seed++, space3);
      std::vector<double> analytic(space3.size(), 0.0);
      for (const auto& [next, pr] : census_successors(from, d_us, lambda)) analytic[space3.index_of(next)] += pr;
      for (std::size_t i = 0; i < space3.size(); ++i)
        all.push_back({"transition", analytic[i], static_cast<double>(hits[i]) / 1e6, oracle::z_score(hits[i], 1000000, analytic[i]),
                       oracle::p_value(hits[i], 1000000, analytic[i])});
    }
  const auto v = oracle::judge(all);

  double worst_sum = 0.0;
  for (const auto& pi : pis)
    for (double lambda : lambdas)
      for (double p : ps) {
        const auto kt = build_kernels(TimerPolicy(p, 9.0, 4), pi, lambda);
        for (auto s : all_pair_states) {
          double total = 0.0;
          for (int k = 0; k <= kt.t_max(); ++k)
            for (int l = 0; l <= k; ++l) total += kt.ap(s, k, l) + kt.sta(s, k, l) + kt.both(s, k, l);
          worst_sum = std::max(worst_sum, std::abs(total + kt.survival(s, kt.t_max()) - 1.0));
        }
        for (int n : {1, 2, 3}) {
          const CensusSpace space(n);
          for (const auto& c : space.states()) {
            if (c.empty()) continue;
            double total = 0.0;
            for (int k = 0; k <= kt.t_max(); ++k) total += success_at(k, c, kt) + p_col(k, c, kt);
            worst_sum = std::max(worst_sum, std::abs(total - 1.0));
            double moves = 0.0;
            for (const auto& [next, pr] : census_successors(c, 1078.0, lambda)) moves += pr;
            worst_sum = std::max(worst_sum, std::abs(moves - 1.0));
          }
        }
      }

  d << " " << v.checks << " probabilities at 1e6 trials: " << v.beyond_3se << " beyond 3 SE, " << v.significant_3se
    << " significant at the 3-SE level (chance allows " << v.allowed << "), min p " << num(v.min_p_value, 3)
    << " vs Bonferroni " << num(v.bonferroni_level, 3) << " (" << v.worst << "); worst sum-rule error "
    << num(worst_sum, 3);
  return {v.pass && worst_sum <= 1e-9, d.str()};
}

Outcome criterion6() {
  std::int64_t evaluations = 0;
  double worst = 0.0;
  std::string failure;
  FixedPointOptions opt;
  opt.observer = [&](const AnalysisSolution& s) {
    ++evaluations;
    worst = std::max(worst, s.identity_error);
  };
  for (int n : {1, 2, 3, 7})
    for (const auto& mode : std::vector<ChannelMode>{ExplicitChannel{{0.25, 0.25, 0.25, 0.25}},
                                                     ExplicitChannel{{0.5, 0.3, 0.15, 0.05}}, RayleighChannel{20.0}})
      for (double lambda : {5.0, 20.0, 40.0, 60.0, 80.0, 100.0, 300.0}) {
        Scenario sc;
        sc.config.n_stations = n;
        sc.config.channel_mode = mode;
        try {
          fixed_point(lambda, sc, opt);
        } catch (const std::exception& e) {
          failure = e.what();
        }
      }
  std::ostringstream d;
  d << " " << evaluations << " evaluations, max |N(Pbar_A+Pbar_S)-1| = " << num(worst, 3);
  if (!failure.empty()) d << "; " << failure;
  return {failure.empty() && worst <= 1e-6 && evaluations > 0, d.str()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) {
      std::ifstream is(e.path(), std::ios::binary);
      std::ostringstream os;
      os << is.rdbuf();
      out[fs::relative(e.path(), dir).string()] = os.str();
    }
  return out;
}

Outcome criterion7() {
  auto spec = expctl::load_spec_text(
      "n_stations: 7\nlambda: [20, 60]\nschemes: [opportunistic, dcf-arf, dcf-threshold, analysis]\n"
      "duration_s: 20\nreps: 2\nseed: 11\n");
  const auto base = fs::temp_directory_path() / "oppwlan_acceptance_c7";
  fs::remove_all(base);
  std::vector<std::map<std::string, std::string>> snaps;
  std::ostringstream log;
  for (const char* run : {"a", "b"}) {
    spec.out_dir = (base / run).string();
    expctl::cmd_simulate(spec, log);
    expctl::cmd_analyze(spec, log);
    snaps.push_back(snapshot(base / run));
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : snaps[0])
    if (!snaps[1].count(name) || snaps[1].at(name) != bytes) ++differing;
  if (snaps[0].size() != snaps[1].size()) ++differing;
  std::ostringstream d;
  d << " " << snaps[0].size() << " files per run, " << differing << " differing";
  fs::remove_all(base);
  return {differing == 0 && !snaps[0].empty(), d.str()};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
    {"analysis vs simulation error", criterion1}, {"stability boundary", criterion2},
    {"saturated throughput gain", criterion3},    {"fairness and throughput shape", criterion4},
    {"kernel Monte-Carlo oracles", criterion5},   {"per-renewal identity", criterion6},
    {"byte-identical reruns", criterion7}};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) selected.push_back(std::atoi(argv[++i]));
    else {
      std::cerr << "usage: oppwlan_acceptance [--criterion N]...\n";
      return 2;
    }
  }
  if (selected.empty())
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);

  bool all = true;
  for (int id : selected) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::cerr << "no criterion " << id << '\n';
      return 2;
    }
    const auto& [name, fn] = criteria[static_cast<std::size_t>(id - 1)];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string(" exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << id << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << " |" << o.detail << " ("
              << num(secs, 3) << " s)" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
