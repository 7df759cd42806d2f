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

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "diffmatch/channel.hpp"
#include "diffmatch/errors.hpp"
#include "diffmatch/matchgraph.hpp"
#include "diffmatch/rng.hpp"

namespace diffmatch {

// How well expert e's output suits user u, in [0, 1].
using AffinityMatrix = Eigen::MatrixXd;

inline AffinityMatrix sample_affinity(Rng& rng, int num_users, int num_experts,
                                      double lo = 0.2, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  AffinityMatrix a(num_users, num_experts);
  for (int u = 0; u < num_users; ++u)
    for (int e = 0; e < num_experts; ++e) a(u, e) = dist(rng);
  return a;
}

struct RewardWeights {
  double lambda_energy = 0.01;
  double lambda_compute = 0.1;
  double payload_bits = 1e6;
  double bandwidth_hz = 1e7;
  double r_req = 0.5;  // bits/s/Hz for full delivery

  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

struct RewardBreakdown {
  double total = 0.0;
  double qoe_sum = 0.0;
  double energy_cost = 0.0;   // joules
  double compute_cost = 0.0;  // active experts
  double violation_penalty = 0.0;

  static const char* csv_header() {
    return "total,qoe_sum,energy_cost,compute_cost,violation_penalty";
  }
};

inline std::ostream& operator<<(std::ostream& os, const RewardBreakdown& r) {
  return os << r.total << ',' << r.qoe_sum << ',' << r.energy_cost << ',' << r.compute_cost
            << ',' << r.violation_penalty;
}

// Penalty per row that misses its quota; exceeds any attainable QoE sum.
inline double violation_per_row(int num_users) { return 10.0 * num_users; }

/// QoE_u = mean affinity of u's experts times min(1, delivered rate / r_req).
inline std::vector<double> per_user_qoe(const MatchingState& m, const AffinityMatrix& a,
                                        const RateReport& rates, double r_req) {
  if (!is_feasible(m)) throw ContractError("per_user_qoe requires a feasible matching");
  if (!(r_req > 0.0)) throw ContractError("r_req must be positive");
  std::vector<double> q(m.num_users(), 0.0);
  for (int u = 0; u < m.num_users(); ++u) {
    double content = 0.0;
    for (int e = 0; e < m.num_experts(); ++e)
      if (m.at(u, e)) content += a(u, e);
    content /= m.quota();
    double delivery = std::min(1.0, rates.r_user_total[u] / r_req);
    q[u] = content * delivery;
  }
  return q;
}

inline double transmit_energy(const RateReport& rates, double tx_power, const RewardWeights& w) {
  double r_min = std::numeric_limits<double>::infinity();
  for (double r : rates.r_user_total)
    if (r > 0.0) r_min = std::min(r_min, r);
  if (!std::isfinite(r_min)) return 0.0;
  return tx_power * w.payload_bits / (w.bandwidth_hz * r_min);
}

/// total = qoe_sum - lambda_energy * energy - lambda_compute * active experts
///         - violation penalty.
inline RewardBreakdown reward(const MatchingState& m, const std::vector<double>& qoe,
                              const StreamPartition& part, const RateReport& rates,
                              double tx_power, const RewardWeights& w) {
  RewardBreakdown r;
  for (double q : qoe) r.qoe_sum += q;
  r.compute_cost = part.active_experts();
  r.energy_cost = transmit_energy(rates, tx_power, w);
  int bad_rows = 0;
  for (int u = 0; u < m.num_users(); ++u)
    if (m.row_sum(u) != m.quota()) ++bad_rows;
  r.violation_penalty = bad_rows * violation_per_row(m.num_users());
  r.total = r.qoe_sum - w.lambda_energy * r.energy_cost - w.lambda_compute * r.compute_cost -
            r.violation_penalty;
  return r;
}

}  // namespace diffmatch
