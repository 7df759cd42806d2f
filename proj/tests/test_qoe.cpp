// Copyright 2026 The diffmatch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "diffmatch/classical.hpp"
#include "diffmatch/scenario.hpp"

namespace dm = diffmatch;

namespace {

dm::RateReport flat_rates(int users, double r) {
  dm::RateReport rep;
  rep.r_private.assign(users, r);
  rep.r_user_total.assign(users, r);
  return rep;
}

dm::Scenario small_scenario(int users, int experts, int quota, std::uint64_t seed) {
  dm::Scenario s;
  s.num_users = users;
  s.num_experts = experts;
  s.quota = quota;
  dm::Rng rng = dm::make_rng(seed, 1);
  s.affinity = dm::sample_affinity(rng, users, experts);
  return s;
}

}  // namespace

TEST(Affinity, BoundedAndSeeded) {
  dm::Rng a = dm::make_rng(1, 1), b = dm::make_rng(1, 1);
  auto x = dm::sample_affinity(a, 15, 6);
  EXPECT_EQ(x, dm::sample_affinity(b, 15, 6));
  EXPECT_GE(x.minCoeff(), 0.2);
  EXPECT_LE(x.maxCoeff(), 1.0);
}

TEST(Qoe, SaturatesAtFullAffinityAndRate) {
  dm::MatchingState m(3, 2, 1);
  for (int u = 0; u < 3; ++u) m.set(u, u % 2, true);
  auto q = dm::per_user_qoe(m, dm::AffinityMatrix::Ones(3, 2), flat_rates(3, 0.7), 0.5);
  for (double x : q) EXPECT_EQ(x, 1.0);
}

TEST(Qoe, ZeroRateGivesZero) {
  dm::MatchingState m(2, 2, 1);
  m.set(0, 0, true);
  m.set(1, 1, true);
  auto q = dm::per_user_qoe(m, dm::AffinityMatrix::Ones(2, 2), flat_rates(2, 0.0), 0.5);
  EXPECT_EQ(q[0], 0.0);
  EXPECT_EQ(q[1], 0.0);
}

TEST(Qoe, ContentTimesDelivery) {
  dm::MatchingState m(1, 2, 2);
  m.set(0, 0, true);
  m.set(0, 1, true);
  dm::AffinityMatrix a(1, 2);
  a << 0.8, 0.4;
  auto q = dm::per_user_qoe(m, a, flat_rates(1, 0.25), 0.5);
  EXPECT_NEAR(q[0], 0.30, 1e-15);
}

TEST(Qoe, RejectsInfeasibleAndBadThreshold) {
  dm::MatchingState m(1, 2, 1);
  EXPECT_THROW(dm::per_user_qoe(m, dm::AffinityMatrix::Ones(1, 2), flat_rates(1, 1.0), 0.5),
               dm::ContractError);
  m.set(0, 0, true);
  EXPECT_THROW(dm::per_user_qoe(m, dm::AffinityMatrix::Ones(1, 2), flat_rates(1, 1.0), 0.0),
               dm::ContractError);
}

TEST(Reward, EmptyActivityIsZero) {
  dm::MatchingState m(1, 1, 1);
  m.set(0, 0, true);
  dm::StreamPartition none;
  auto r = dm::reward(m, {0.0}, none, flat_rates(1, 0.0), 1.0, dm::RewardWeights{});
  EXPECT_EQ(r.total, 0.0);
  EXPECT_EQ(r.energy_cost, 0.0);
}

TEST(Reward, PerfectQoeMinusComputeCost) {
  dm::MatchingState m(15, 6, 2);
  for (int u = 0; u < 15; ++u) {
    m.set(u, u % 6, true);
    m.set(u, (u + 1) % 6, true);
  }
  auto part = dm::derive_streams(m);
  ASSERT_EQ(part.active_experts(), 6);
  dm::RewardWeights w;
  w.lambda_energy = 0.0;
  auto r = dm::reward(m, std::vector<double>(15, 1.0), part, flat_rates(15, 1.0), 1.0, w);
  EXPECT_NEAR(r.total, 14.4, 1e-12);
  EXPECT_EQ(r.compute_cost, 6.0);
}

TEST(Reward, EnergyUsesSlowestPositiveRate) {
  dm::RateReport rep;
  rep.r_user_total = {0.0, 2.0, 0.5, 4.0};
  dm::RewardWeights w;
  EXPECT_NEAR(dm::transmit_energy(rep, 2.0, w), 2.0 * 1e6 / (1e7 * 0.5), 1e-15);
}

TEST(Reward, BreakdownIdentityAndQoeRange) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto s = small_scenario(15, 6, 2, seed);
    dm::Rng rng = dm::make_rng(seed, 2);
    auto chan = dm::sample_drop(s, -10.0 + 2.0 * seed, rng);
    auto ev = dm::evaluate(s, chan, dm::random_matching(rng, 15, 6, 2));
    const auto& r = ev.reward;
    EXPECT_EQ(r.total, r.qoe_sum - s.weights.lambda_energy * r.energy_cost -
                           s.weights.lambda_compute * r.compute_cost - r.violation_penalty);
    EXPECT_GE(r.qoe_sum, 0.0);
    EXPECT_LE(r.qoe_sum, 15.0);
    for (double q : ev.qoe) {
      EXPECT_GE(q, 0.0);
      EXPECT_LE(q, 1.0);
    }
  }
}

TEST(Reward, MonotoneInSnrEndToEnd) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = small_scenario(15, 6, 2, seed);
    dm::Rng rng = dm::make_rng(seed, 3);
    auto base = dm::sample_drop(s, 0.0, rng);
    auto m = dm::random_matching(rng, 15, 6, 2);
    double prev = -1e300;
    for (double snr = -10.0; snr <= 30.0; snr += 5.0) {
      double r = dm::evaluate_total(s, dm::with_snr(base, s.radio, snr), m);
      EXPECT_GE(r, prev) << "seed " << seed << " snr " << snr;
      prev = r;
    }
  }
}

TEST(Reward, AnyFeasibleBeatsAnyInfeasible) {
  auto s = small_scenario(3, 2, 1, 4);
  dm::Rng rng = dm::make_rng(4, 2);
  auto chan = dm::sample_drop(s, 10.0, rng);
  double worst_feasible = 1e300;
  dm::brute_force_best(
      [&](const dm::MatchingState& m) {
        worst_feasible = std::min(worst_feasible, dm::evaluate_total(s, chan, m));
        return 0.0;
      },
      3, 2, 1);
  dm::MatchingState bad(3, 2, 1);
  bad.set(0, 0, true);
  bad.set(1, 1, true);  // row 2 empty
  auto r = dm::score_unrepaired(s, chan, bad);
  EXPECT_EQ(r.violation_penalty, 30.0);
  EXPECT_LT(r.total, worst_feasible);
  bad.set(0, 1, true);  // row 0 now over quota as well
  EXPECT_EQ(dm::score_unrepaired(s, chan, bad).violation_penalty, 60.0);
}

// Scaling the cost weights is not argmax-preserving in general; when the
// optimum moves, the two optima must differ in their cost terms.
TEST(Reward, DoubledCostWeightsOnlyMoveArgmaxThroughCosts) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = small_scenario(3, 2, 1, seed);
    dm::Rng rng = dm::make_rng(seed, 5);
    auto chan = dm::sample_drop(s, 0.0, rng);
    auto doubled = s;
    doubled.weights.lambda_energy *= 2.0;
    doubled.weights.lambda_compute *= 2.0;
    auto a = dm::brute_force_best(
        [&](const dm::MatchingState& m) { return dm::evaluate_total(s, chan, m); }, 3, 2, 1);
    auto b = dm::brute_force_best(
        [&](const dm::MatchingState& m) { return dm::evaluate_total(doubled, chan, m); }, 3, 2, 1);
    if (a.best == b.best) continue;
    auto ra = dm::evaluate(s, chan, a.best).reward;
    auto rb = dm::evaluate(s, chan, b.best).reward;
    auto cost = [&](const dm::RewardBreakdown& r) {
      return s.weights.lambda_energy * r.energy_cost + s.weights.lambda_compute * r.compute_cost;
    };
    const double cost_a = cost(ra), cost_b = cost(rb);
    EXPECT_GT(cost_a, cost_b);
    EXPECT_GE(ra.qoe_sum, rb.qoe_sum);
  }
}
