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
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "oppwlan/expctl/commands.hpp"

int main(int argc, char** argv) {
  using namespace oppwlan::expctl;
  CLI::App app{"Opportunistic uplink/downlink WLAN scheduling: analysis and simulation"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Overrides o;
  std::string config;
  int reps = 0;
  std::uint64_t seed = 0;
  std::string out;
  double tolerance = 0.0;
  app.add_option("--config", config, "YAML config file")->check(CLI::ExistingFile);
  app.add_option("--lambda", o.lambdas, "arrival rate grid, pkts/s per queue (comma separated)")->delimiter(',');
  app.add_option("--scheme", o.schemes, "opportunistic, dcf-arf, dcf-threshold, analysis (comma separated)")->delimiter(',');
  auto* reps_opt = app.add_option("--reps", reps, "replications per point")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "base seed; replication r uses seed+r");
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* tol_opt = app.add_option("--tolerance", tolerance, "relative error tolerance for validate")->check(CLI::PositiveNumber);

  auto* analyze = app.add_subcommand("analyze", "fixed point per arrival rate");
  auto* simulate = app.add_subcommand("simulate", "simulation sweep with replications");
  auto* validate = app.add_subcommand("validate", "analysis against simulation; exit 1 on breach");
  auto* compare = app.add_subcommand("compare", "throughput curves per scheme");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  if (!config.empty()) o.config_path = config;
  o.lambdas_set = app.count("--lambda") > 0;
  if (*reps_opt) o.reps = reps;
  if (*seed_opt) o.seed = seed;
  if (*out_opt) o.out_dir = out;
  if (*tol_opt) o.tolerance = tolerance;

  try {
    const ExperimentSpec spec = load_spec(o);
    CommandResult r;
    if (*analyze) r = cmd_analyze(spec, std::cout);
    else if (*simulate) r = cmd_simulate(spec, std::cout);
    else if (*validate) r = cmd_validate(spec, std::cout);
    else if (*compare) r = cmd_compare(spec, std::cout);
    for (const auto& f : r.files)
      if (f.size() < 5 || f.compare(f.size() - 5, 5, ".json") != 0) std::cout << "wrote " << f << '\n';
    return r.exit_code;
  } catch (const oppwlan::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  }
}
