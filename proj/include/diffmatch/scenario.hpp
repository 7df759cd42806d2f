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

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "diffmatch/channel.hpp"
#include "diffmatch/errors.hpp"
#include "diffmatch/matchgraph.hpp"
#include "diffmatch/qoe.hpp"
#include "diffmatch/rng.hpp"

namespace diffmatch {

// Fixed standardization constants for condition features.
struct FeatureScaling {
  double gain_db_mean = -65.0;
  double gain_db_scale = 5.0;
  double snr_db_mean = 10.0;
  double snr_db_scale = 15.0;
  double affinity_mean = 0.6;
  double affinity_scale = 0.25;

  friend bool operator==(const FeatureScaling&, const FeatureScaling&) = default;
};

inline constexpr int kMaxQuota = 3;

/// Everything needed to score a matching on a channel drop.
struct Scenario {
  int num_users = 15;
  int num_experts = 6;
  int quota = 2;
  ScenarioRadio radio;
  RewardWeights weights;
  AffinityMatrix affinity;
  FeatureScaling features;

  void validate() const {
    if (num_users < 1 || num_experts < 1) throw ConfigError("scenario needs users and experts");
    if (quota < 1 || quota > num_experts || quota > kMaxQuota)
      throw ConfigError("quota must lie in [1, min(num_experts, 3)]");
    if (affinity.rows() != num_users || affinity.cols() != num_experts)
      throw ConfigError("affinity matrix shape does not match the scenario");
    radio.validate();
  }
};

struct Evaluation {
  RewardBreakdown reward;
  std::vector<double> qoe;
  RateReport rates;
};

inline Evaluation evaluate(const Scenario& s, const ChannelRealization& chan,
                           const MatchingState& m) {
  Evaluation ev;
  StreamPartition part = derive_streams(m);
  ev.rates = compute_rates(chan, part, s.radio);
  ev.qoe = per_user_qoe(m, s.affinity, ev.rates, s.weights.r_req);
  ev.reward = reward(m, ev.qoe, part, ev.rates, chan.tx_power, s.weights);
  return ev;
}

inline double evaluate_total(const Scenario& s, const ChannelRealization& chan,
                             const MatchingState& m) {
  return evaluate(s, chan, m).reward.total;
}

/// Scores a graph that may break the quota. Infeasible graphs earn no QoE and
/// pay the violation penalty per offending row.
inline RewardBreakdown score_unrepaired(const Scenario& s, const ChannelRealization& chan,
                                        const MatchingState& m) {
  if (is_feasible(m)) return evaluate(s, chan, m).reward;
  RewardBreakdown r;
  int active = 0;
  for (int e = 0; e < m.num_experts(); ++e)
    if (m.column_sum(e) > 0) ++active;
  r.compute_cost = active;
  for (int u = 0; u < m.num_users(); ++u)
    if (m.row_sum(u) != m.quota()) r.violation_penalty += violation_per_row(m.num_users());
  r.total = -s.weights.lambda_compute * r.compute_cost - r.violation_penalty;
  return r;
}

/// Total reward of the sub-instance formed by the first `rows` users.
inline double evaluate_prefix(const Scenario& s, const ChannelRealization& chan,
                              const MatchingState& m, int rows) {
  MatchingState sub(rows, m.num_experts(), m.quota());
  for (int u = 0; u < rows; ++u)
    for (int e = 0; e < m.num_experts(); ++e) sub.set(u, e, m.at(u, e));
  ChannelRealization sc = chan;
  sc.h = chan.h.topRows(rows);
  sc.distances.resize(rows);
  Scenario ss = s;
  ss.num_users = rows;
  ss.affinity = s.affinity.topRows(rows);
  return evaluate_total(ss, sc, sub);
}

/// Channel drop for the scenario, resampled until the full user channel
/// matrix is well conditioned (then every zero-forcing subset is too).
inline ChannelRealization sample_drop(const Scenario& s, double snr_db, Rng& rng) {
  std::vector<int> all(s.num_users);
  for (int u = 0; u < s.num_users; ++u) all[u] = u;
  const bool check = s.num_users <= s.radio.num_antennas;
  for (int attempt = 0; attempt < 100; ++attempt) {
    ChannelRealization chan = sample_channel(rng, s.radio, s.num_users);
    if (!check || channel_condition_number(chan, all) <= kMaxConditionNumber)
      return with_snr(std::move(chan), s.radio, snr_db);
  }
  throw DegenerateChannelError("no well-conditioned drop after 100 attempts");
}

// Per-epoch training summary shared by the learned matchers.
struct EpochStats {
  double mean_reward = 0.0;
  double max_reward = 0.0;
  double grad_norm = 0.0;
  double mean_qoe = 0.0;
};

using DropSampler = std::function<ChannelRealization(Rng&)>;

inline int condition_length(const Scenario& s) {
  return s.num_users + s.num_users * s.num_experts + 1 + kMaxQuota;
}

/// Standardized per-user channel energy (dB), affinities, SNR and a quota
/// one-hot, in that order.
inline Eigen::VectorXd condition_vector(const Scenario& s, const ChannelRealization& chan) {
  Eigen::VectorXd c(condition_length(s));
  int k = 0;
  const auto& f = s.features;
  for (int u = 0; u < s.num_users; ++u)
    c[k++] = (linear_to_db(chan.h.row(u).squaredNorm()) - f.gain_db_mean) / f.gain_db_scale;
  for (int u = 0; u < s.num_users; ++u)
    for (int e = 0; e < s.num_experts; ++e)
      c[k++] = (s.affinity(u, e) - f.affinity_mean) / f.affinity_scale;
  c[k++] = (chan.snr_db - f.snr_db_mean) / f.snr_db_scale;
  for (int q = 1; q <= kMaxQuota; ++q) c[k++] = q == s.quota ? 1.0 : 0.0;
  return c;
}

}  // namespace diffmatch
