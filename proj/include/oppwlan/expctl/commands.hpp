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
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oppwlan/expctl/experiment.hpp"
#include "oppwlan/fixed_point.hpp"
#include "oppwlan/sim/dcf.hpp"
#include "oppwlan/sim/opportunistic.hpp"

namespace oppwlan::expctl {

inline constexpr int exit_ok = 0;
inline constexpr int exit_breach = 1;
inline constexpr int exit_config = 2;

struct CommandResult {
  int exit_code = exit_ok;
  std::vector<std::string> files;
};

/// Mean and, with at least two samples, the standard error of the mean.
struct Stat {
  double mean = 0.0;
  std::optional<double> stderr_;
};

inline Stat summarize(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return s;
}

inline std::string fmt(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

inline std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

/// First line of every output file.
inline void write_preamble(std::ostream& os, const std::string& schema, const ExperimentSpec& spec) {
  os << "# oppwlan " << schema << " config_hash=" << config_hash(spec) << " units: rates pps, times us\n";
}

struct SimRun {
  Scheme scheme = Scheme::opportunistic;
  double lambda_pps = 0.0;
  int rep = 0;
  sim::SimReport report;
};

inline sim::SimReport run_scheme(Scheme scheme, const Scenario& sc, const ExperimentSpec& spec) {
  switch (scheme) {
    case Scheme::opportunistic: return sim::run_opportunistic(sc, spec.budget);
    case Scheme::dcf_arf: {
      auto o = spec.dcf;
      o.adaptation = sim::RateAdaptation::arf;
      return sim::run_dcf(sc, spec.budget, o);
    }
    case Scheme::dcf_threshold: {
      auto o = spec.dcf;
      o.adaptation = sim::RateAdaptation::threshold;
      return sim::run_dcf(sc, spec.budget, o);
    }
    case Scheme::analysis: break;
  }
  throw invalid_parameter("analysis is not a simulated scheme");
}

/// Runs scheme x lambda x replication on a worker pool. Replication r uses
/// seed base+r; results come back in a fixed order regardless of scheduling.
inline std::vector<SimRun> run_simulations(const ExperimentSpec& spec, const std::vector<Scheme>& schemes) {
  std::vector<SimRun> jobs;
  for (Scheme s : schemes)
    for (double l : spec.lambdas)
      for (int r = 0; r < spec.reps; ++r) jobs.push_back({s, l, r, {}});
  const Scenario base = spec.sim_scenario();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      Scenario sc = base;
      sc.config.lambda_pps = jobs[i].lambda_pps;
      sc.config.seed = spec.seed + static_cast<std::uint64_t>(jobs[i].rep);
      jobs[i].report = run_scheme(jobs[i].scheme, sc, spec);
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min<std::size_t>(hw, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return jobs;
}

inline std::vector<Scheme> simulated(const std::vector<Scheme>& schemes) {
  std::vector<Scheme> out;
  for (Scheme s : schemes)
    if (s != Scheme::analysis) out.push_back(s);
  return out;
}

/// Fixed point at one rate; a zero rate is the trivial empty system.
inline AnalysisSolution analyze_point(const ExperimentSpec& spec, double lambda) {
  if (lambda <= 0.0) {
    AnalysisSolution s;
    s.expected_renewal_us = std::numeric_limits<double>::infinity();
    s.converged = true;
    return s;
  }
  return fixed_point(lambda, spec.scenario, spec.fixed_point);
}

inline std::vector<AnalysisSolution> analyze_grid(const ExperimentSpec& spec) {
  std::vector<AnalysisSolution> out(spec.lambdas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < out.size(); i = next++) out[i] = analyze_point(spec, spec.lambdas[i]);
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min<std::size_t>(hw, out.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

inline std::filesystem::path prepare_out(const ExperimentSpec& spec) {
  std::filesystem::path dir(spec.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw config_error("out", "cannot create '" + spec.out_dir + "': " + ec.message());
  return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw config_error("out", "cannot write '" + p.string() + "'");
  return os;
}

inline void write_analysis_csv(std::ostream& os, const ExperimentSpec& spec, const std::vector<AnalysisSolution>& rows) {
  write_preamble(os, "analysis/v1", spec);
  os << analysis_csv_header() << '\n';
  for (const auto& s : rows)
    os << fmt(s.lambda_pps) << ',' << fmt(s.p_a) << ',' << fmt(s.p_s) << ',' << fmt(s.expected_renewal_us) << ','
       << fmt(s.pbar_a) << ',' << fmt(s.pbar_s) << ',' << fmt(s.theta_ap) << ',' << fmt(s.theta_sta) << ','
       << (s.converged ? 1 : 0) << ',' << s.iterations << '\n';
}

/// Fixed point per rate; non-convergent rows are kept and marked.
inline CommandResult cmd_analyze(const ExperimentSpec& spec, std::ostream& log) {
  const auto dir = prepare_out(spec);
  const auto rows = analyze_grid(spec);
  const auto path = dir / "analysis.csv";
  auto os = open_out(path);
  write_analysis_csv(os, spec, rows);
  for (const auto& s : rows)
    log << "lambda=" << fmt(s.lambda_pps) << " P_A=" << fmt(s.p_a) << " P_S=" << fmt(s.p_s)
        << " E[R]=" << fmt(s.expected_renewal_us) << "us" << (s.converged ? "" : " (no convergence)") << '\n';
  return {exit_ok, {path.string()}};
}

struct Aggregate {
  Scheme scheme = Scheme::opportunistic;
  double lambda_pps = 0.0;
  int reps = 0;
  Stat system, downlink, uplink, p_a, p_s, renewal, collisions, growth;
  std::int64_t dropped = 0;
};

inline std::vector<Aggregate> aggregate(const ExperimentSpec& spec, const std::vector<SimRun>& runs) {
  std::vector<Aggregate> out;
  for (std::size_t i = 0; i < runs.size(); i += static_cast<std::size_t>(spec.reps)) {
    Aggregate a;
    a.scheme = runs[i].scheme;
    a.lambda_pps = runs[i].lambda_pps;
    a.reps = spec.reps;
    std::vector<double> sys, dl, ul, pa, ps, ren, col, gr;
    for (int r = 0; r < spec.reps; ++r) {
      const auto& rep = runs[i + static_cast<std::size_t>(r)].report;
      sys.push_back(rep.system_pps);
      dl.push_back(rep.downlink_pps);
      ul.push_back(rep.uplink_pps);
      pa.push_back(rep.p_a_hat);
      ps.push_back(rep.p_s_hat);
      if (rep.mean_renewal_us) ren.push_back(*rep.mean_renewal_us);
      col.push_back(rep.duration_us > 0 ? rep.collisions / (rep.duration_us * 1e-6) : 0.0);
      gr.push_back(rep.backlog_growth_pps());
      a.dropped += rep.dropped;
    }
    a.system = summarize(sys);
    a.downlink = summarize(dl);
    a.uplink = summarize(ul);
    a.p_a = summarize(pa);
    a.p_s = summarize(ps);
    a.renewal = ren.size() == sys.size() ? summarize(ren) : Stat{std::numeric_limits<double>::quiet_NaN(), std::nullopt};
    a.collisions = summarize(col);
    a.growth = summarize(gr);
    out.push_back(a);
  }
  return out;
}

inline std::string run_file_name(const SimRun& r) {
  std::ostringstream os;
  os << to_string(r.scheme) << "_lambda" << fmt(r.lambda_pps) << "_rep" << r.rep << ".json";
  return os.str();
}

/// Per-run JSON reports plus a mean/stderr table over replications.
inline CommandResult cmd_simulate(const ExperimentSpec& spec, std::ostream& log) {
  const auto dir = prepare_out(spec);
  const auto schemes = simulated(spec.schemes);
  const auto runs = run_simulations(spec, schemes);
  CommandResult res;
  std::filesystem::create_directories(dir / "runs");
  const std::string hash = config_hash(spec);
  for (const auto& r : runs) {
    const auto p = dir / "runs" / run_file_name(r);
    auto os = open_out(p);
    nlohmann::json j = sim::to_json(r.report);
    j["config_hash"] = hash;
    j["units"] = {{"rates", "pps"}, {"times", "us"}};
    os << j.dump(2) << '\n';
    res.files.push_back(p.string());
  }
  const auto path = dir / "simulate.csv";
  auto os = open_out(path);
  write_preamble(os, "simulate/v1", spec);
  os << "scheme,lambda_pps,reps,system_pps,system_pps_se,downlink_pps,downlink_pps_se,uplink_pps,uplink_pps_se,"
        "p_a,p_a_se,p_s,p_s_se,mean_renewal_us,mean_renewal_us_se,collisions_per_s,collisions_per_s_se,"
        "backlog_growth_pps,backlog_growth_pps_se,dropped\n";
  for (const auto& a : aggregate(spec, runs)) {
    os << to_string(a.scheme) << ',' << fmt(a.lambda_pps) << ',' << a.reps;
    for (const Stat* s : {&a.system, &a.downlink, &a.uplink, &a.p_a, &a.p_s, &a.renewal, &a.collisions, &a.growth})
      os << ',' << fmt(s->mean) << ',' << fmt(s->stderr_);
    os << ',' << a.dropped << '\n';
    log << to_string(a.scheme) << " lambda=" << fmt(a.lambda_pps) << " system=" << fmt(a.system.mean)
        << "pps downlink=" << fmt(a.downlink.mean) << "pps uplink=" << fmt(a.uplink.mean) << "pps\n";
  }
  res.files.push_back(path.string());
  return res;
}

inline double relative_error(double sim, double ana) {
  if (sim == ana) return 0.0;
  return std::abs(sim - ana) / std::abs(ana);
}

struct ValidationRow {
  double lambda_pps = 0.0;
  AnalysisSolution analysis;
  Aggregate sim;
  double err_p_a = 0.0, err_p_s = 0.0, err_renewal = 0.0;
  bool breach = false;
};

/// Analysis against opportunistic simulation on the same scenario.
inline std::vector<ValidationRow> validation_rows(const ExperimentSpec& spec) {
  ExperimentSpec sim_spec = spec;
  sim_spec.schemes = {Scheme::opportunistic};
  const auto runs = run_simulations(sim_spec, sim_spec.schemes);
  const auto agg = aggregate(sim_spec, runs);
  const auto ana = analyze_grid(spec);
  std::vector<ValidationRow> rows;
  for (std::size_t i = 0; i < spec.lambdas.size(); ++i) {
    ValidationRow r;
    r.lambda_pps = spec.lambdas[i];
    r.analysis = ana[i];
    r.sim = agg[i];
    if (r.lambda_pps > 0.0) {
      r.err_p_a = relative_error(r.sim.p_a.mean, r.analysis.p_a);
      r.err_p_s = relative_error(r.sim.p_s.mean, r.analysis.p_s);
      r.err_renewal = std::isnan(r.sim.renewal.mean) ? std::numeric_limits<double>::infinity()
                                                     : relative_error(r.sim.renewal.mean, r.analysis.expected_renewal_us);
      r.breach = !r.analysis.converged || r.err_p_a > spec.tolerance || r.err_p_s > spec.tolerance ||
                 r.err_renewal > spec.tolerance;
    }
    rows.push_back(r);
  }
  return rows;
}

inline CommandResult cmd_validate(const ExperimentSpec& spec, std::ostream& log) {
  const auto dir = prepare_out(spec);
  const auto rows = validation_rows(spec);
  const auto path = dir / "validate.csv";
  auto os = open_out(path);
  write_preamble(os, "validate/v1", spec);
  os << "lambda_pps,converged,p_a_analysis,p_a_sim,p_a_rel_err,p_s_analysis,p_s_sim,p_s_rel_err,"
        "renewal_analysis_us,renewal_sim_us,renewal_rel_err,tolerance,breach\n";
  CommandResult res;
  for (const auto& r : rows) {
    os << fmt(r.lambda_pps) << ',' << (r.analysis.converged ? 1 : 0) << ',' << fmt(r.analysis.p_a) << ','
       << fmt(r.sim.p_a.mean) << ',' << fmt(r.err_p_a) << ',' << fmt(r.analysis.p_s) << ',' << fmt(r.sim.p_s.mean) << ','
       << fmt(r.err_p_s) << ',' << fmt(r.analysis.expected_renewal_us) << ',' << fmt(r.sim.renewal.mean) << ','
       << fmt(r.err_renewal) << ',' << fmt(spec.tolerance) << ',' << (r.breach ? 1 : 0) << '\n';
    log << "lambda=" << fmt(r.lambda_pps) << " err P_A=" << fmt(r.err_p_a) << " P_S=" << fmt(r.err_p_s)
        << " E[R]=" << fmt(r.err_renewal) << (r.breach ? "  BREACH" : "") << '\n';
    if (r.breach) res.exit_code = exit_breach;
  }
  res.files.push_back(path.string());
  return res;
}

/// Long-format throughput table: one row per (scheme, lambda, metric).
inline CommandResult cmd_compare(const ExperimentSpec& spec, std::ostream& log) {
  const auto dir = prepare_out(spec);
  const auto path = dir / "compare.csv";
  auto os = open_out(path);
  write_preamble(os, "compare/v1", spec);
  os << "scheme,lambda_pps,metric,value_pps,stderr_pps\n";
  const auto agg = aggregate(spec, run_simulations(spec, simulated(spec.schemes)));
  for (const auto& a : agg) {
    const std::pair<const char*, const Stat*> metrics[] = {{"downlink", &a.downlink}, {"uplink", &a.uplink}, {"system", &a.system}};
    for (const auto& [name, s] : metrics)
      os << to_string(a.scheme) << ',' << fmt(a.lambda_pps) << ',' << name << ',' << fmt(s->mean) << ',' << fmt(s->stderr_) << '\n';
    log << to_string(a.scheme) << " lambda=" << fmt(a.lambda_pps) << " downlink=" << fmt(a.downlink.mean)
        << " system=" << fmt(a.system.mean) << '\n';
  }
  if (std::find(spec.schemes.begin(), spec.schemes.end(), Scheme::analysis) != spec.schemes.end()) {
    const double n = spec.scenario.config.n_stations;
    for (const auto& s : analyze_grid(spec)) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      const double dl = s.converged ? n * s.theta_ap : nan;
      const double ul = s.converged ? n * s.theta_sta : nan;
      const std::pair<const char*, double> metrics[] = {{"downlink", dl}, {"uplink", ul}, {"system", dl + ul}};
      for (const auto& [name, v] : metrics) os << "analysis," << fmt(s.lambda_pps) << ',' << name << ',' << fmt(v) << ",\n";
    }
  }
  return {exit_ok, {path.string()}};
}

}  // namespace oppwlan::expctl
