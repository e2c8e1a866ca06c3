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
#include <cmath>
#include <string>
#include <sstream>

#include <gtest/gtest.h>

#include "oppwlan/fixed_point.hpp"

namespace oppwlan {
namespace {

TEST(FixedPoint, ConvergesAtLightLoadWithThroughputEqualToLoad) {
  Scenario sc;
  for (double lambda : {5.0, 20.0, 40.0}) {
    const auto s = fixed_point(lambda, sc);
    ASSERT_TRUE(s.converged) << lambda;
    EXPECT_NEAR(s.theta_ap / lambda, 1.0, 1e-4);
    EXPECT_NEAR(s.theta_sta / lambda, 1.0, 1e-4);
    EXPECT_GT(s.p_a, 0.0);
    EXPECT_LT(s.p_a, 1.0);
    // At the fixed point E[R] = 1/(2 N lambda).
    EXPECT_NEAR(s.expected_renewal_us, 1e6 / (2 * 7 * lambda), 1e6 / (2 * 7 * lambda) * 2e-4);
  }
}

TEST(FixedPoint, OccupancyIncreasesWithLoad) {
  Scenario sc;
  double prev = 0.0;
  for (double lambda : {5.0, 15.0, 30.0, 45.0}) {
    const auto s = fixed_point(lambda, sc);
    ASSERT_TRUE(s.converged);
    EXPECT_GT(s.p_s, prev);
    prev = s.p_s;
  }
}

TEST(FixedPoint, SymmetricPolicyGivesSymmetricOccupancy) {
  Scenario sc;
  sc.config.n_stations = 3;
  const auto s = fixed_point(30.0, sc);
  ASSERT_TRUE(s.converged);
  EXPECT_NEAR(s.p_a, s.p_s, 0.05 * s.p_s);
}

TEST(FixedPoint, ReportsDivergenceWithoutThrowing) {
  Scenario sc;
  const auto s = fixed_point(400.0, sc);
  EXPECT_FALSE(s.converged);
  EXPECT_GT(s.iterations, 0);
}

TEST(FixedPoint, ObserverSeesEveryEvaluationAndIdentityHolds) {
  Scenario sc;
  FixedPointOptions opt;
  int calls = 0;
  double worst = 0.0;
  opt.observer = [&](const AnalysisSolution& s) {
    ++calls;
    worst = std::max(worst, s.identity_error);
  };
  const auto s = fixed_point(30.0, sc, opt);
  EXPECT_EQ(calls, s.iterations);
  EXPECT_LT(worst, 1e-6);
}

TEST(FixedPoint, RejectsNonPositiveRate) {
  Scenario sc;
  EXPECT_THROW(fixed_point(0.0, sc), invalid_parameter);
}

TEST(CapacitySearch, FindsLargestConvergentRate) {
  Scenario sc;
  const auto r = capacity_search(sc, {10.0, 30.0, 300.0});
  ASSERT_TRUE(r.capacity_pps.has_value());
  EXPECT_EQ(*r.capacity_pps, 30.0);
  EXPECT_EQ(r.table.size(), 3u);
  EXPECT_THROW(capacity_search(sc, {30.0, 10.0}), invalid_parameter);
}

TEST(AnalysisOutput, CsvAndJson) {
  Scenario sc;
  const auto s = fixed_point(20.0, sc);
  std::ostringstream os;
  write_csv_row(os, s);
  const std::string row = os.str();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 9);
  const auto j = to_json(s);
  EXPECT_EQ(j["converged"], true);
  EXPECT_DOUBLE_EQ(j["lambda_pps"].get<double>(), 20.0);
}

}  // namespace
}  // namespace oppwlan
