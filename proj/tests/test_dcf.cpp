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
#include <cmath>

#include <gtest/gtest.h>

#include "oppwlan/sim/dcf.hpp"

namespace oppwlan::sim {
namespace {

Scenario base(int n, double lambda, std::uint64_t seed = 1) {
  Scenario sc;
  sc.config.n_stations = n;
  sc.config.lambda_pps = lambda;
  sc.config.seed = seed;
  return sc;
}

DcfOptions with(RateAdaptation a) {
  DcfOptions o;
  o.adaptation = a;
  return o;
}

TEST(Dcf, AccessPointAloneSaturatesAtBestRate) {
  // One destination whose channel is always in the top state, no uplink.
  auto sc = base(1, 0.0);
  sc.config.channel_mode = ExplicitChannel{{0.0, 0.0, 0.0, 1.0}};
  sc.config.per_state_per = {0.0, 0.0, 0.0, 0.0};
  auto b = RunBudget::for_duration(100e6);
  b.saturated = true;
  auto o = with(RateAdaptation::threshold);
  o.uplink = false;
  const auto r = run_dcf(sc, b, o);
  EXPECT_EQ(r.collisions, 0);
  EXPECT_EQ(r.uplink_pps, 0.0);
  // Each packet costs T_suc(3) plus a mean backoff of CW_min/2 slots.
  const double cycle = t_suc(sc.timing, 3) + 7.5 * sc.timing.slot_us;
  EXPECT_NEAR(r.downlink_pps, 1e6 / cycle, 1e6 / cycle * 0.01);
}

TEST(Dcf, ArfClimbsToTheSupportedRate) {
  auto sc = base(1, 0.0);
  sc.config.channel_mode = ExplicitChannel{{0.0, 0.0, 0.0, 1.0}};
  sc.config.per_state_per = {0.0, 0.0, 0.0, 0.0};
  auto b = RunBudget::for_duration(50e6);
  b.saturated = true;
  auto o = with(RateAdaptation::arf);
  o.uplink = false;
  const auto r = run_dcf(sc, b, o);
  EXPECT_GT(r.success_states[3], r.successes * 0.99);
}

TEST(Dcf, ArfStepsDownOnUnsupportedRates) {
  // Channel always in state 1: attempts at 48/54 Mbps fail, ARF oscillates
  // between 24 and 48 Mbps.
  auto sc = base(1, 0.0);
  sc.config.channel_mode = ExplicitChannel{{0.0, 1.0, 0.0, 0.0}};
  sc.config.per_state_per = {0.0, 0.0, 0.0, 0.0};
  auto b = RunBudget::for_duration(50e6);
  b.saturated = true;
  auto o = with(RateAdaptation::arf);
  o.uplink = false;
  const auto r = run_dcf(sc, b, o);
  EXPECT_EQ(r.success_states[2] + r.success_states[3], 0);
  EXPECT_GT(r.failed_transmissions, 0);
  EXPECT_GT(r.success_states[1], r.successes * 0.9);
}

TEST(Dcf, EqualAccessAtSaturation) {
  auto b = RunBudget::for_duration(200e6);
  b.saturated = true;
  const auto r = run_dcf(base(7, 0.0), b, with(RateAdaptation::threshold));
  EXPECT_NEAR(static_cast<double>(r.ap_successes) / r.successes, 1.0 / 8.0, 0.01);
  EXPECT_GT(r.collisions, 0);
}

TEST(Dcf, DeterministicAndConserving) {
  const auto a = run_dcf(base(4, 60.0, 5), RunBudget::for_duration(20e6), with(RateAdaptation::arf));
  const auto b = run_dcf(base(4, 60.0, 5), RunBudget::for_duration(20e6), with(RateAdaptation::arf));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  for (const auto& q : a.queues) EXPECT_EQ(q.arrivals, q.delivered + q.dropped + q.backlog_end);
}

TEST(Dcf, LightLoadCarriesOfferedTraffic) {
  const auto r = run_dcf(base(7, 10.0), RunBudget::for_duration(100e6), with(RateAdaptation::threshold));
  EXPECT_NEAR(r.downlink_pps, 70.0, 70.0 * 0.05);
  EXPECT_NEAR(r.uplink_pps, 70.0, 70.0 * 0.05);
}

TEST(Dcf, ZeroLoad) {
  const auto r = run_dcf(base(3, 0.0), RunBudget::for_duration(1e6), with(RateAdaptation::arf));
  EXPECT_EQ(r.system_pps, 0.0);
  EXPECT_EQ(r.collisions, 0);
}

TEST(Dcf, RejectsBadWindows) {
  DcfOptions o;
  o.cw_max = 3;
  EXPECT_THROW(run_dcf(base(2, 1.0), RunBudget::for_duration(1e6), o), invalid_parameter);
}

}  // namespace
}  // namespace oppwlan::sim
