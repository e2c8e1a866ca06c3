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

#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "oppwlan/config.hpp"
#include "oppwlan/error.hpp"
#include "oppwlan/fixed_point.hpp"
#include "oppwlan/sim/common.hpp"
#include "oppwlan/sim/dcf.hpp"

namespace oppwlan::expctl {

enum class Scheme { opportunistic, dcf_arf, dcf_threshold, analysis };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::opportunistic: return "opportunistic";
    case Scheme::dcf_arf: return "dcf-arf";
    case Scheme::dcf_threshold: return "dcf-threshold";
    case Scheme::analysis: return "analysis";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& s) {
  for (Scheme x : {Scheme::opportunistic, Scheme::dcf_arf, Scheme::dcf_threshold, Scheme::analysis})
    if (s == to_string(x)) return x;
  return std::nullopt;
}

/// Everything a subcommand needs. Built from defaults, then the config file,
/// then command-line overrides.
struct ExperimentSpec {
  Scenario scenario;
  std::vector<Scheme> schemes{Scheme::opportunistic, Scheme::analysis};
  std::vector<double> lambdas{20.0, 40.0, 60.0, 80.0};
  int reps = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  double tolerance = 0.10;
  sim::RunBudget budget = sim::RunBudget::for_duration(100e6);
  FixedPointOptions fixed_point;
  sim::DcfOptions dcf;
  /// Payload seen by the simulators only; differs from the analysis payload
  /// solely when deliberately mismatching the two sides.
  std::optional<int> sim_payload_bytes;

  void validate() const {
    if (schemes.empty()) throw config_error("schemes", "scheme list is empty");
    if (reps < 1) throw config_error("reps", "needs at least one replication");
    for (double l : lambdas)
      if (!(l >= 0.0)) throw config_error("lambda", "arrival rates must be nonnegative");
    if (!(tolerance > 0.0)) throw config_error("tolerance", "must be positive");
    const auto& c = scenario.config;
    if (c.n_stations < 1 || c.n_stations > 63) throw config_error("n_stations", "must lie in [1,63]");
    if (!(scenario.timer_p >= 0.0 && scenario.timer_p <= 1.0)) throw config_error("timer_p", "must lie in [0,1]");
    if (c.retry_limit && *c.retry_limit < 0) throw config_error("retry_limit", "must be nonnegative or 'unlimited'");
    if (!(budget.warmup_fraction >= 0.0 && budget.warmup_fraction < 1.0)) throw config_error("warmup_fraction", "must lie in [0,1)");
    if (budget.duration_us && !(*budget.duration_us > 0.0)) throw config_error("duration_s", "must be positive");
    if (budget.renewals && *budget.renewals < 1) throw config_error("renewals", "must be positive");
    if (sim_payload_bytes && *sim_payload_bytes < 1) throw config_error("sim_payload_bytes", "must be positive");
    try {
      scenario.validate();
      budget.validate();
    } catch (const invalid_parameter& e) {
      throw config_error("scenario", e.what());
    }
  }

  Scenario sim_scenario() const {
    Scenario s = scenario;
    if (sim_payload_bytes) {
      s.timing.payload_bytes = *sim_payload_bytes;
      s.timing.recompute(s.space);
    }
    return s;
  }
};

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Canonical form of every setting that can change results.
inline nlohmann::json resolved_json(const ExperimentSpec& spec) {
  const auto& sc = spec.scenario;
  const auto& c = sc.config;
  nlohmann::json channel;
  if (const auto* ex = std::get_if<ExplicitChannel>(&c.channel_mode))
    channel = {{"mode", "explicit"}, {"pi", ex->pi}};
  else
    channel = {{"mode", "rayleigh"}, {"mean_db", std::get<RayleighChannel>(c.channel_mode).mean_ebn0_db}};
  std::vector<std::string> schemes;
  for (Scheme s : spec.schemes) schemes.emplace_back(to_string(s));
  nlohmann::json j{
      {"n_stations", c.n_stations},
      {"per", c.per_state_per},
      {"channel", channel},
      {"retry_limit", c.retry_limit ? nlohmann::json(*c.retry_limit) : nlohmann::json("unlimited")},
      {"timer_p", sc.timer_p},
      {"thresholds_db", std::vector<double>(sc.space.thresholds_db().begin(), sc.space.thresholds_db().end())},
      {"rates_mbps", std::vector<double>(sc.space.rates_mbps().begin(), sc.space.rates_mbps().end())},
      {"timing",
       {{"slot_us", sc.timing.slot_us},
        {"sifs_us", sc.timing.sifs_us},
        {"difs_us", sc.timing.difs_us},
        {"ack_us", sc.timing.ack_us},
        {"payload_bytes", sc.timing.payload_bytes},
        {"t_suc_us", sc.timing.per_state_tx_us},
        {"t_col_us", sc.timing.collision_us}}},
      {"schemes", schemes},
      {"lambda", spec.lambdas},
      {"reps", spec.reps},
      {"seed", spec.seed},
      {"tolerance", spec.tolerance},
      {"budget",
       {{"duration_us", spec.budget.duration_us ? nlohmann::json(*spec.budget.duration_us) : nlohmann::json()},
        {"renewals", spec.budget.renewals ? nlohmann::json(*spec.budget.renewals) : nlohmann::json()},
        {"warmup_fraction", spec.budget.warmup_fraction},
        {"saturated", spec.budget.saturated}}},
      {"fixed_point",
       {{"gamma", spec.fixed_point.gamma},
        {"tolerance", spec.fixed_point.tolerance},
        {"max_iterations", spec.fixed_point.max_iterations},
        {"initial", spec.fixed_point.initial}}},
      {"uplink", spec.dcf.uplink},
      {"sim_payload_bytes", spec.sim_payload_bytes ? nlohmann::json(*spec.sim_payload_bytes) : nlohmann::json()}};
  return j;
}

inline std::string config_hash(const ExperimentSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(resolved_json(spec).dump())));
  return buf;
}

/// Command-line values; each set field replaces the file value.
struct Overrides {
  std::optional<std::string> config_path;
  std::vector<double> lambdas;
  bool lambdas_set = false;
  std::vector<std::string> schemes;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> tolerance;
};

namespace detail {

template <class T>
T scalar(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) throw config_error(key, "expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw config_error(key, "cannot read value '" + n.Scalar() + "'");
  }
}

/// Accepts a scalar or a sequence.
template <class T>
std::vector<T> list(const YAML::Node& n, const std::string& key) {
  std::vector<T> out;
  if (n.IsScalar()) {
    out.push_back(scalar<T>(n, key));
  } else if (n.IsSequence()) {
    for (const auto& e : n) out.push_back(scalar<T>(e, key));
  } else if (!n.IsNull()) {
    throw config_error(key, "expected a value or a list");
  }
  return out;
}

}  // namespace detail

/// Applies a parsed YAML mapping to `spec`. Unknown keys are errors.
inline void apply_yaml(ExperimentSpec& spec, const YAML::Node& root) {
  using detail::list;
  using detail::scalar;
  if (root.IsNull()) return;
  if (!root.IsMap()) throw config_error("<root>", "config must be a key/value mapping");

  auto& sc = spec.scenario;
  auto& c = sc.config;
  std::optional<std::string> channel;
  std::optional<std::vector<double>> pi, thresholds, rates, per;
  std::optional<double> rayleigh_mean, slot, sifs, difs, collision;
  std::optional<int> payload;
  std::optional<double> duration_s;
  std::optional<std::int64_t> renewals;
  bool collision_auto = false;

  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (key == "n_stations") c.n_stations = scalar<int>(v, key);
    else if (key == "lambda") spec.lambdas = list<double>(v, key);
    else if (key == "timer_p") sc.timer_p = scalar<double>(v, key);
    else if (key == "per") per = list<double>(v, key);
    else if (key == "channel") channel = scalar<std::string>(v, key);
    else if (key == "pi") pi = list<double>(v, key);
    else if (key == "rayleigh_mean_db") rayleigh_mean = scalar<double>(v, key);
    else if (key == "retry_limit") {
      const auto s = scalar<std::string>(v, key);
      if (s == "unlimited") c.retry_limit = std::nullopt;
      else c.retry_limit = scalar<int>(v, key);
    } else if (key == "seed") spec.seed = scalar<std::uint64_t>(v, key);
    else if (key == "reps") spec.reps = scalar<int>(v, key);
    else if (key == "schemes") {
      spec.schemes.clear();
      for (const auto& s : list<std::string>(v, key)) {
        auto x = parse_scheme(s);
        if (!x) throw config_error(key, "unknown scheme '" + s + "'");
        spec.schemes.push_back(*x);
      }
    } else if (key == "duration_s") duration_s = scalar<double>(v, key);
    else if (key == "renewals") renewals = scalar<std::int64_t>(v, key);
    else if (key == "warmup_fraction") spec.budget.warmup_fraction = scalar<double>(v, key);
    else if (key == "saturated") spec.budget.saturated = scalar<bool>(v, key);
    else if (key == "uplink") spec.dcf.uplink = scalar<bool>(v, key);
    else if (key == "payload_bytes") payload = scalar<int>(v, key);
    else if (key == "sim_payload_bytes") spec.sim_payload_bytes = scalar<int>(v, key);
    else if (key == "slot_us") slot = scalar<double>(v, key);
    else if (key == "sifs_us") sifs = scalar<double>(v, key);
    else if (key == "difs_us") difs = scalar<double>(v, key);
    else if (key == "collision_us") {
      if (scalar<std::string>(v, key) == "auto") collision_auto = true;
      else collision = scalar<double>(v, key);
    } else if (key == "thresholds_db") thresholds = list<double>(v, key);
    else if (key == "rates_mbps") rates = list<double>(v, key);
    else if (key == "fp_gamma") spec.fixed_point.gamma = scalar<double>(v, key);
    else if (key == "fp_tolerance") spec.fixed_point.tolerance = scalar<double>(v, key);
    else if (key == "fp_max_iterations") spec.fixed_point.max_iterations = scalar<int>(v, key);
    else if (key == "fp_initial") spec.fixed_point.initial = scalar<double>(v, key);
    else if (key == "out") spec.out_dir = scalar<std::string>(v, key);
    else if (key == "tolerance") spec.tolerance = scalar<double>(v, key);
    else throw config_error(key, "unknown key");
  }

  try {
    if (thresholds || rates) {
      const auto t0 = sc.space.thresholds_db();
      const auto r0 = sc.space.rates_mbps();
      sc.space = ChannelSpace(thresholds.value_or(std::vector<double>(t0.begin(), t0.end())),
                              rates.value_or(std::vector<double>(r0.begin(), r0.end())));
    }
  } catch (const invalid_parameter& e) {
    throw config_error(thresholds ? "thresholds_db" : "rates_mbps", e.what());
  }
  const int states = sc.space.num_states();

  if (channel) {
    if (*channel == "uniform") c.channel_mode = ExplicitChannel{std::vector<double>(static_cast<std::size_t>(states), 1.0 / states)};
    else if (*channel == "explicit") {
      if (!pi) throw config_error("pi", "required when channel is explicit");
      c.channel_mode = ExplicitChannel{*pi};
    } else if (*channel == "rayleigh") c.channel_mode = RayleighChannel{rayleigh_mean.value_or(RayleighChannel{}.mean_ebn0_db)};
    else throw config_error("channel", "expected uniform, explicit or rayleigh");
  } else if (pi) {
    c.channel_mode = ExplicitChannel{*pi};
  } else if (thresholds || rates) {
    c.channel_mode = ExplicitChannel{std::vector<double>(static_cast<std::size_t>(states), 1.0 / states)};
  }
  if (rayleigh_mean && !std::holds_alternative<RayleighChannel>(c.channel_mode))
    throw config_error("rayleigh_mean_db", "only meaningful with channel: rayleigh");
  if (const auto* ex = std::get_if<ExplicitChannel>(&c.channel_mode)) {
    try {
      validate_distribution(ex->pi, states);
    } catch (const invalid_parameter& e) {
      throw config_error("pi", e.what());
    }
  }
  if (per && per->size() == 1) per->assign(static_cast<std::size_t>(states), per->front());
  c.per_state_per = per.value_or(std::vector<double>(static_cast<std::size_t>(states), 0.1));
  if (static_cast<int>(c.per_state_per.size()) != states) throw config_error("per", "needs one entry per channel state");
  for (double e : c.per_state_per)
    if (!(e >= 0.0 && e <= 1.0)) throw config_error("per", "entries must lie in [0,1]");

  if (duration_s && renewals) throw config_error("renewals", "give either duration_s or renewals, not both");
  if (duration_s) {
    spec.budget.duration_us = *duration_s * 1e6;
    spec.budget.renewals.reset();
  }
  if (renewals) {
    spec.budget.renewals = *renewals;
    spec.budget.duration_us.reset();
  }

  try {
    MacTiming t = MacTiming::ieee80211a(sc.space, payload.value_or(sc.timing.payload_bytes));
    if (slot) t.slot_us = *slot;
    if (sifs) t.sifs_us = *sifs;
    if (difs) t.difs_us = *difs;
    t.recompute(sc.space);
    if (collision && !collision_auto) t.collision_us = *collision;
    t.validate();
    sc.timing = t;
  } catch (const invalid_parameter& e) {
    throw config_error(collision ? "collision_us" : "payload_bytes", e.what());
  }
}

inline void apply_overrides(ExperimentSpec& spec, const Overrides& o) {
  if (o.lambdas_set) spec.lambdas = o.lambdas;
  if (!o.schemes.empty()) {
    spec.schemes.clear();
    for (const auto& s : o.schemes) {
      auto x = parse_scheme(s);
      if (!x) throw config_error("scheme", "unknown scheme '" + s + "'");
      spec.schemes.push_back(*x);
    }
  }
  if (o.reps) spec.reps = *o.reps;
  if (o.seed) spec.seed = *o.seed;
  if (o.out_dir) spec.out_dir = *o.out_dir;
  if (o.tolerance) spec.tolerance = *o.tolerance;
}

/// Defaults, then the YAML text, then overrides; validated.
inline ExperimentSpec load_spec_text(const std::string& yaml_text, const Overrides& o = {}) {
  ExperimentSpec spec;
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw config_error("<syntax>", e.what());
  }
  apply_yaml(spec, root);
  apply_overrides(spec, o);
  spec.validate();
  return spec;
}

inline ExperimentSpec load_spec(const Overrides& o) {
  ExperimentSpec spec;
  if (o.config_path) {
    YAML::Node root;
    try {
      root = YAML::LoadFile(*o.config_path);
    } catch (const YAML::BadFile&) {
      throw config_error("config", "cannot open '" + *o.config_path + "'");
    } catch (const YAML::Exception& e) {
      throw config_error("<syntax>", e.what());
    }
    apply_yaml(spec, root);
  }
  apply_overrides(spec, o);
  spec.validate();
  return spec;
}

}  // namespace oppwlan::expctl
