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

#include "oppwlan/contention.hpp"
#include "oppwlan/kernels.hpp"
#include "support/oracle.hpp"

namespace oppwlan {
namespace {

const std::vector<double> uniform{0.25, 0.25, 0.25, 0.25};
const std::vector<double> skewed{0.1, 0.2, 0.3, 0.4};
const std::vector<double> per{0.1, 0.2, 0.05, 0.3};

KernelTable table(const std::vector<double>& pi, double lambda, double p) {
  return build_kernels(TimerPolicy(p, 9.0, 4), pi, lambda);
}

TEST(Kernels, NonemptyPairsExpireBeforeTmax) {
  for (double p : {0.5, 0.8})
    for (double lambda : {0.0, 50.0, 5000.0}) {
      const auto kt = table(skewed, lambda, p);
      for (auto s : {PairState::s1, PairState::s2, PairState::s3}) EXPECT_NEAR(kt.survival(s, kt.t_max()), 0.0, 1e-12);
      if (lambda == 0.0) { EXPECT_DOUBLE_EQ(kt.survival(PairState::s0, kt.t_max()), 1.0); }
    }
}

TEST(Kernels, SurvivalIdentity) {
  const auto kt = table(skewed, 2000.0, 0.8);
  for (auto s : all_pair_states) {
    EXPECT_DOUBLE_EQ(kt.survival(s, -1), 1.0);
    double cum = 0.0;
    for (int k = 0; k <= kt.t_max(); ++k) {
      for (int l = 0; l <= k; ++l) cum += kt.ap(s, k, l) + kt.sta(s, k, l) + kt.both(s, k, l);
      EXPECT_NEAR(kt.survival(s, k), 1.0 - cum, 1e-12);
      EXPECT_LE(kt.survival(s, k), kt.survival(s, k - 1) + 1e-15);
    }
  }
}

TEST(Kernels, SinglePairClosedForms) {
  // s1 with p = 1: only the AP queue is set; it expires at its even base slot.
  const auto kt = table(skewed, 0.0, 1.0);
  for (int state = 0; state < 4; ++state) {
    const int b = 2 * (3 - state);
    EXPECT_DOUBLE_EQ(kt.ap(PairState::s1, b, b), skewed[static_cast<std::size_t>(state)]);
    EXPECT_DOUBLE_EQ(kt.sta(PairState::s2, b + 1, b + 1), skewed[static_cast<std::size_t>(state)]);
    // Both queues backlogged: AP even, STA odd, so the AP always expires first.
    EXPECT_DOUBLE_EQ(kt.ap(PairState::s3, b, b), skewed[static_cast<std::size_t>(state)]);
    EXPECT_DOUBLE_EQ(kt.both(PairState::s3, b, b), 0.0);
  }
  // p = 0.5, s3: the two queues tie with probability one half.
  const auto half = table(uniform, 0.0, 0.5);
  double ties = 0.0;
  for (int k = 0; k <= half.t_max(); ++k)
    for (int l = 0; l <= k; ++l) ties += half.both(PairState::s3, k, l);
  EXPECT_NEAR(ties, 0.5, 1e-15);
}

TEST(Contention, SuccessPlusCollisionIsOne) {
  for (double p : {0.5, 0.8})
    for (double lambda : {20.0, 3000.0}) {
      const auto kt = table(skewed, lambda, p);
      for (int n : {1, 2, 3, 7}) {
        const CensusSpace space(n);
        for (std::size_t i = 0; i < space.size(); ++i) {
          const auto& c = space[i];
          if (c.empty()) continue;
          double total = 0.0;
          for (int k = 0; k <= kt.t_max(); ++k) total += success_at(k, c, kt) + p_col(k, c, kt);
          EXPECT_NEAR(total, 1.0, 1e-9) << "n=" << n << " census index " << i;
        }
      }
    }
}

TEST(Contention, ClosedFormAgreesWithConfigurationSum) {
  const auto kt = table(skewed, 3000.0, 0.5);
  for (int n : {2, 3, 5}) {
    const CensusSpace space(n);
    for (std::size_t i = 0; i < space.size(); ++i)
      for (auto s : all_pair_states)
        for (int k = 0; k <= kt.t_max(); ++k)
          for (int l = 0; l <= k; ++l)
            EXPECT_NEAR(p_suc_ap(s, k, l, space[i], kt), p_suc_ap_by_configuration(s, k, l, space[i], kt), 1e-14);
  }
}

TEST(Contention, NoCollisionsWithOnePairAndStrictParity) {
  const auto kt = table(skewed, 0.0, 1.0);
  const SystemCensus c(0, 0, 1, 1);
  for (int k = 0; k <= kt.t_max(); ++k) EXPECT_DOUBLE_EQ(p_col(k, c, kt), 0.0);
}

TEST(Contention, RejectsOutOfRangeSlots) {
  const auto kt = table(uniform, 20.0, 0.5);
  const SystemCensus c(1, 0, 0, 2);
  EXPECT_THROW(p_suc_ap(PairState::s1, 8, 0, c, kt), invalid_parameter);
  EXPECT_THROW(p_suc_sta(PairState::s1, 2, 3, c, kt), invalid_parameter);
  EXPECT_THROW(p_col(-1, c, kt), invalid_parameter);
}

TEST(Transitions, MassesSumToOne) {
  for (int n : {1, 3, 7}) {
    const CensusSpace space(n);
    for (std::size_t i = 0; i < space.size(); ++i)
      for (double d : {9.0, 1078.0, 1e5}) {
        double total = 0.0;
        for (const auto& [next, pr] : census_successors(space[i], d, 80.0)) total += pr;
        EXPECT_NEAR(total, 1.0, 1e-9);
      }
  }
  for (auto s : all_pair_states) {
    const auto t = pair_transition(s, 500.0, 300.0);
    EXPECT_NEAR(t[0] + t[1] + t[2] + t[3], 1.0, 1e-12);
  }
  EXPECT_THROW(transition_prob(SystemCensus(1, 0, 0, 2), CensusDelta{2, 0, 0, 0, 0}, 10.0, 1.0), invalid_parameter);
}

TEST(Transitions, MatchArrivalSampling) {
  const SystemCensus from(1, 1, 0, 3);
  const CensusSpace space(3);
  const std::int64_t trials = 1000000;
  const double d = 1078.0, lambda = 400.0;
  const auto hits = oracle::transition_counts(from, d, lambda, trials, 5, space);
  std::vector<double> analytic(space.size(), 0.0);
  for (const auto& [next, pr] : census_successors(from, d, lambda)) analytic[space.index_of(next)] += pr;
  std::vector<oracle::Check> checks;
  for (std::size_t i = 0; i < space.size(); ++i)
    checks.push_back({"census " + std::to_string(i), analytic[i], static_cast<double>(hits[i]) / trials,
                      oracle::z_score(hits[i], trials, analytic[i]), oracle::p_value(hits[i], trials, analytic[i])});
  const auto v = oracle::judge(checks);
  EXPECT_TRUE(v.pass) << "worst " << v.worst << " p=" << v.min_p_value;
}

TEST(ContentionOracle, MatchesMonteCarlo) {
  std::vector<oracle::Check> all;
  std::uint64_t seed = 100;
  for (const auto& pairs : std::vector<std::vector<PairState>>{{PairState::s1, PairState::s2, PairState::s3},
                                                               {PairState::s0, PairState::s3}}) {
    const oracle::Setup s{pairs, skewed, 2000.0, 0.5, 9.0, per};
    const auto counts = oracle::run(s, 1000000, seed++);
    const auto checks = oracle::compare(s, counts);
    all.insert(all.end(), checks.begin(), checks.end());
  }
  const auto v = oracle::judge(all);
  EXPECT_TRUE(v.pass) << v.checks << " checks, " << v.significant_3se << " beyond 3 SE (allowed " << v.allowed
                      << "), worst " << v.worst << " p=" << v.min_p_value;
}

TEST(ContentionOracle, DetectsDoubleCountedApSuccess) {
  // Negative control: the AP success term with an extra n_i factor.
  const std::vector<PairState> pairs{PairState::s1, PairState::s1, PairState::s3};
  const oracle::Setup s{pairs, uniform, 50.0, 0.5, 9.0, per};
  const auto counts = oracle::run(s, 200000, 9);
  const auto kt = table(uniform, 50.0, 0.5);
  const SystemCensus census(2, 0, 1, 3);
  std::vector<oracle::Check> checks;
  for (int k = 0; k <= kt.t_max(); ++k)
    for (int l = 0; l <= k; ++l) {
      const double wrong = census.count(PairState::s1) * p_suc_ap(PairState::s1, k, l, census, kt);
      const auto hits = counts.suc_ap[counts.ikl(1, k, l)];
      checks.push_back({"", wrong, 0.0, oracle::z_score(hits, counts.trials, wrong), oracle::p_value(hits, counts.trials, wrong)});
    }
  EXPECT_FALSE(oracle::judge(checks).pass);
}

TEST(MinislotSuccess, TaggedProbabilitiesBounded) {
  const auto kt = table(skewed, 500.0, 0.5);
  for (int n : {1, 2, 4}) {
    const TaggedSpace space(n);
    for (std::size_t i = 0; i < space.size(); ++i) {
      const double a = p_hat_minislot(Side::ap, space[i], kt, per);
      const double b = p_hat_minislot(Side::sta, space[i], kt, per);
      EXPECT_GE(a, 0.0);
      EXPECT_GE(b, 0.0);
      EXPECT_LE(a + b, 1.0 + 1e-12);
    }
  }
}

}  // namespace
}  // namespace oppwlan
