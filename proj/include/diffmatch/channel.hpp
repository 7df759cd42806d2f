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
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diffmatch/errors.hpp"
#include "diffmatch/matchgraph.hpp"
#include "diffmatch/rng.hpp"

namespace diffmatch {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kMaxConditionNumber = 1e6;

struct ScenarioRadio {
  double carrier_freq_hz = 2.4e9;
  double dist_min_m = 50.0;
  double dist_max_m = 100.0;
  int num_antennas = 16;
  double snr_db = 10.0;
  double path_loss_exponent = 2.0;
  double common_power_fraction = 0.3;
  double tx_power_w = 1.0;

  double wavelength() const { return kSpeedOfLight / carrier_freq_hz; }

  void validate() const {
    if (!(carrier_freq_hz > 0.0)) throw ConfigError("carrier frequency must be positive");
    if (!(dist_min_m > 0.0) || dist_min_m > dist_max_m)
      throw ConfigError("need 0 < dist_min <= dist_max");
    if (num_antennas < 1) throw ConfigError("num_antennas must be >= 1");
    if (!(path_loss_exponent > 0.0)) throw ConfigError("path loss exponent must be positive");
    if (!(common_power_fraction >= 0.0 && common_power_fraction < 1.0))
      throw ConfigError("common_power_fraction must lie in [0, 1)");
    if (!(tx_power_w > 0.0)) throw ConfigError("tx power must be positive");
  }

  friend bool operator==(const ScenarioRadio&, const ScenarioRadio&) = default;
};

// Free-space reference gain at 1 m scaled by d^-exponent. With exponent 2
// this is the Friis gain (lambda / (4 pi d))^2.
inline double path_gain(const ScenarioRadio& radio, double distance_m) {
  double ref = radio.wavelength() / (4.0 * std::numbers::pi);
  return ref * ref * std::pow(distance_m, -radio.path_loss_exponent);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// One drop: row u of `h` is the channel of user u across the antennas.
struct ChannelRealization {
  CMatrix h;
  std::vector<double> distances;
  double noise_power = 1.0;
  double tx_power = 1.0;
  double snr_db = 0.0;

  int num_users() const { return static_cast<int>(h.rows()); }
  int num_antennas() const { return static_cast<int>(h.cols()); }

  // Column vector h_u.
  CVector user(int u) const { return h.row(u).transpose(); }
};

// h_u^H p
inline std::complex<double> effective_gain(const ChannelRealization& chan, int u,
                                            const CVector& p) {
  return chan.user(u).dot(p);
}

// Noise power such that the mean per-antenna receive SNR at dist_min is snr_db.
inline ChannelRealization with_snr(ChannelRealization chan, const ScenarioRadio& radio,
                                   double snr_db) {
  chan.snr_db = snr_db;
  chan.tx_power = radio.tx_power_w;
  chan.noise_power = radio.tx_power_w * path_gain(radio, radio.dist_min_m) / db_to_linear(snr_db);
  return chan;
}

/// Uniform distances, path gain times i.i.d. unit-variance circularly
/// symmetric complex Gaussian fading.
inline ChannelRealization sample_channel(Rng& rng, const ScenarioRadio& radio, int num_users) {
  if (num_users < 1) throw ContractError("sample_channel needs at least one user");
  radio.validate();
  ChannelRealization chan;
  chan.h.resize(num_users, radio.num_antennas);
  chan.distances.resize(num_users);
  std::uniform_real_distribution<double> dist(radio.dist_min_m, radio.dist_max_m);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  for (int u = 0; u < num_users; ++u) {
    double d = radio.dist_min_m == radio.dist_max_m ? radio.dist_min_m : dist(rng);
    chan.distances[u] = d;
    double amp = std::sqrt(path_gain(radio, d));
    for (int k = 0; k < radio.num_antennas; ++k) {
      double re = gauss(rng);
      double im = gauss(rng);
      chan.h(u, k) = amp * std::complex<double>(re, im);
    }
  }
  return with_snr(std::move(chan), radio, radio.snr_db);
}

// Condition number of the stacked channels of `users`.
inline double channel_condition_number(const ChannelRealization& chan,
                                       const std::vector<int>& users) {
  const int k = static_cast<int>(users.size());
  CMatrix hs(chan.num_antennas(), k);
  for (int i = 0; i < k; ++i) hs.col(i) = chan.user(users[i]);
  CMatrix gram = hs.adjoint() * hs;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram, Eigen::EigenvaluesOnly);
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);
}

/// Zero-forcing directions for `active_users`: column i is the unit-norm
/// i-th column of the right pseudo-inverse, so h_u^H p_v = 0 for u != v.
inline CMatrix zf_precoders(const ChannelRealization& chan, const std::vector<int>& active_users) {
  const int k = static_cast<int>(active_users.size());
  if (k == 0) return CMatrix(chan.num_antennas(), 0);
  if (k > chan.num_antennas())
    throw ContractError("zero-forcing needs at least as many antennas as streams");
  CMatrix hs(chan.num_antennas(), k);
  for (int i = 0; i < k; ++i) hs.col(i) = chan.user(active_users[i]);
  CMatrix gram = hs.adjoint() * hs;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram, Eigen::EigenvaluesOnly);
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || std::sqrt(hi / lo) > kMaxConditionNumber) {
    throw DegenerateChannelError("channel submatrix of " + std::to_string(k) +
                                 " users is rank deficient or ill-conditioned");
  }
  CMatrix p = hs * gram.ldlt().solve(CMatrix::Identity(k, k));
  for (int i = 0; i < k; ++i) p.col(i).normalize();
  return p;
}

/// Unit-norm sum of the receivers' channel directions. Opposing directions
/// can cancel; the zero vector is returned when nothing is left.
inline CVector common_precoder(const ChannelRealization& chan, const std::vector<int>& receivers) {
  if (receivers.empty()) throw ContractError("common precoder needs a receiver");
  CVector sum = CVector::Zero(chan.num_antennas());
  for (int u : receivers) sum += chan.user(u).normalized();
  double n = sum.norm();
  if (n < 1e-12) return CVector::Zero(chan.num_antennas());
  return sum / n;
}

struct RateReport {
  double r_common = 0.0;                // bits/s/Hz
  std::vector<double> r_private;        // per user
  std::vector<double> r_user_total;     // private plus apportioned common
  double common_power = 0.0;
  double private_power_each = 0.0;
};

/// One-layer rate splitting. The common stream gets `common_power_fraction`
/// of the budget when any expert is shared (all of it when no private stream
/// exists); private streams split the rest equally and are zero-forced. The
/// common rate is the worst common-stream rate among the users that consume
/// a common expert, treating every private stream as interference. After
/// ideal SIC the private SINR sees only inter-private leakage. User u keeps
/// r_common * c_u / |common experts| of the multicast, c_u being its count
/// of common experts.
inline RateReport compute_rates(const ChannelRealization& chan, const StreamPartition& part,
                                const ScenarioRadio& radio) {
  const int users = chan.num_users();
  if (static_cast<int>(part.common_count.size()) != users)
    throw ContractError("partition and channel disagree on the user count");
  if (static_cast<int>(part.private_users.size()) > chan.num_antennas())
    throw ContractError("more private streams than antennas");

  RateReport rep;
  rep.r_private.assign(users, 0.0);
  rep.r_user_total.assign(users, 0.0);

  const bool has_common = !part.common_experts.empty();
  const int num_private = static_cast<int>(part.private_users.size());
  double p_common = 0.0;
  double p_private_total = chan.tx_power;
  if (has_common) {
    p_common = num_private == 0 ? chan.tx_power : radio.common_power_fraction * chan.tx_power;
    p_private_total = chan.tx_power - p_common;
  }
  const double p_private = num_private > 0 ? p_private_total / num_private : 0.0;
  rep.common_power = p_common;
  rep.private_power_each = p_private;

  CMatrix zf = zf_precoders(chan, part.private_users);

  auto private_interference = [&](int u, int skip) {
    double s = 0.0;
    for (int i = 0; i < num_private; ++i) {
      if (i == skip) continue;
      s += p_private * std::norm(effective_gain(chan, u, zf.col(i)));
    }
    return s;
  };

  for (int i = 0; i < num_private; ++i) {
    int u = part.private_users[i];
    double signal = p_private * std::norm(effective_gain(chan, u, zf.col(i)));
    double sinr = signal / (private_interference(u, i) + chan.noise_power);
    rep.r_private[u] = std::log2(1.0 + sinr);
  }

  if (has_common) {
    CVector pc = common_precoder(chan, part.common_receivers);
    double r = std::numeric_limits<double>::infinity();
    for (int u : part.common_receivers) {
      double signal = p_common * std::norm(effective_gain(chan, u, pc));
      double sinr = signal / (private_interference(u, -1) + chan.noise_power);
      r = std::min(r, std::log2(1.0 + sinr));
    }
    rep.r_common = r;
  }

  const double num_common = static_cast<double>(part.common_experts.size());
  for (int u = 0; u < users; ++u) {
    double share = has_common ? part.common_count[u] / num_common : 0.0;
    rep.r_user_total[u] = rep.r_private[u] + rep.r_common * share;
  }
  return rep;
}

}  // namespace diffmatch
