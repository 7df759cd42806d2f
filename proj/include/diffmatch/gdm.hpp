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
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "diffmatch/errors.hpp"
#include "diffmatch/matchgraph.hpp"
#include "diffmatch/qoe.hpp"
#include "diffmatch/rng.hpp"
#include "diffmatch/scenario.hpp"
#include "diffmatch/scorer.hpp"

namespace diffmatch {

enum class ScheduleKind { kLinear, kConstant };

inline constexpr double kTerminalKeep = 0.05;

/// Per-step flip probabilities of the edge corruption process. Index 0 of
/// `alpha_bar` is the clean graph (1.0); index t is prod_{s<=t} (1 - beta_s).
struct NoiseSchedule {
  int num_steps = 0;
  std::vector<double> beta;       // beta[t - 1] for t = 1..T
  std::vector<double> alpha_bar;  // size T + 1

  double beta_at(int t) const { return beta[t - 1]; }
};

namespace detail {
inline double terminal_keep(const std::vector<double>& beta) {
  double a = 1.0;
  for (double b : beta) a *= 1.0 - b;
  return a;
}
}  // namespace detail

/// Linear: betas ramp 0.15 -> 0.6, uniformly scaled up (bisection) only when
/// needed to bring alpha_bar_T down to 0.05. Constant: equal betas hitting
/// alpha_bar_T = 0.05 exactly.
inline NoiseSchedule build_schedule(int num_steps, ScheduleKind kind = ScheduleKind::kLinear) {
  if (num_steps < 1) throw ConfigError("a noise schedule needs at least one step");
  NoiseSchedule s;
  s.num_steps = num_steps;
  if (kind == ScheduleKind::kConstant) {
    s.beta.assign(num_steps, 1.0 - std::pow(kTerminalKeep, 1.0 / num_steps));
  } else {
    std::vector<double> ramp(num_steps);
    for (int t = 0; t < num_steps; ++t)
      ramp[t] = num_steps == 1 ? 0.6 : 0.15 + (0.6 - 0.15) * t / (num_steps - 1);
    double scale = 1.0;
    auto scaled = [&](double k) {
      std::vector<double> b(ramp);
      for (double& x : b) x *= k;
      return b;
    };
    if (detail::terminal_keep(ramp) > kTerminalKeep) {
      double lo = 1.0, hi = 1.0 / 0.6;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (detail::terminal_keep(scaled(mid)) > kTerminalKeep ? lo : hi) = mid;
      }
      scale = hi;
    }
    s.beta = scaled(scale);
  }
  s.alpha_bar.assign(num_steps + 1, 1.0);
  for (int t = 1; t <= num_steps; ++t) s.alpha_bar[t] = s.alpha_bar[t - 1] * (1.0 - s.beta[t - 1]);
  return s;
}

/// Keeps each edge with probability alpha_bar_t, otherwise draws it
/// uniformly from {0, 1}.
inline OneHotGraph forward_noise(const MatchingState& m0, int t, const NoiseSchedule& sched,
                                 Rng& rng) {
  if (t < 1 || t > sched.num_steps) throw ContractError("diffusion step out of range");
  const double keep = sched.alpha_bar[t];
  OneHotGraph g(m0.num_users(), m0.num_experts());
  for (int u = 0; u < m0.num_users(); ++u) {
    for (int e = 0; e < m0.num_experts(); ++e) {
      bool bit = m0.at(u, e);
      if (uniform01(rng) >= keep) bit = uniform01(rng) < 0.5;
      g.set_edge_prob(u, e, bit ? 1.0 : 0.0);
    }
  }
  return g;
}

inline OneHotGraph uniform_noise_graph(int num_users, int num_experts, Rng& rng) {
  OneHotGraph g(num_users, num_experts);
  for (int u = 0; u < num_users; ++u)
    for (int e = 0; e < num_experts; ++e) g.set_edge_prob(u, e, uniform01(rng) < 0.5 ? 1.0 : 0.0);
  return g;
}

inline int denoiser_input_length(int num_users, int num_experts, int cond_length) {
  return 2 * num_users * num_experts + cond_length + 3;
}

inline std::vector<int> denoiser_dims(const Scenario& s, const std::vector<int>& hidden) {
  std::vector<int> dims{denoiser_input_length(s.num_users, s.num_experts, condition_length(s))};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(2 * s.num_users * s.num_experts);
  return dims;
}

// Graph channels, condition, then the step as t/T plus a sinusoidal pair.
inline Eigen::VectorXd denoiser_input(const OneHotGraph& g, int t, int num_steps,
                                      const Eigen::VectorXd& cond) {
  const int n = static_cast<int>(g.values().size());
  Eigen::VectorXd x(n + cond.size() + 3);
  for (int i = 0; i < n; ++i) x[i] = g.values()[i];
  x.segment(n, cond.size()) = cond;
  const double phase = static_cast<double>(t) / num_steps;
  x[n + cond.size()] = phase;
  x[n + cond.size() + 1] = std::sin(std::numbers::pi * phase);
  x[n + cond.size() + 2] = std::cos(std::numbers::pi * phase);
  return x;
}

/// Per-edge two-way logits; entries 2k and 2k+1 belong to edge k = u*E + e.
inline Eigen::VectorXd denoiser_logits(const ScorerParams& p, const OneHotGraph& g, int t,
                                       int num_steps, const Eigen::VectorXd& cond) {
  Eigen::VectorXd out = forward(p, denoiser_input(g, t, num_steps, cond));
  if (out.size() != 2 * g.num_edges()) throw ContractError("denoiser output has wrong length");
  return out;
}

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

namespace detail {

// q(x_{t-1} = 1 | x_t, x_0) for the uniform-resample kernel.
inline double posterior_one(const NoiseSchedule& s, int t, int xt, int x0) {
  const double beta = s.beta_at(t);
  const double ab_prev = s.alpha_bar[t - 1];
  auto step_lik = [&](int prev) { return (prev == xt ? 1.0 - beta : 0.0) + 0.5 * beta; };
  auto prior = [&](int prev) { return (prev == x0 ? ab_prev : 0.0) + 0.5 * (1.0 - ab_prev); };
  const double w1 = step_lik(1) * prior(1);
  const double w0 = step_lik(0) * prior(0);
  return w1 / (w0 + w1);
}

struct EdgeKernel {
  double p_one;     // P(x_{t-1} = 1)
  double dp_dz;     // derivative of p_one w.r.t. z = logit1 - logit0
  double clean_one; // predicted P(x_0 = 1)
};

inline EdgeKernel edge_kernel(const NoiseSchedule& s, int t, int xt, double logit0,
                              double logit1) {
  const double z = logit1 - logit0;
  const double c = sigmoid(z);
  const double w1 = posterior_one(s, t, xt, 1);
  const double w0 = posterior_one(s, t, xt, 0);
  return {w0 + c * (w1 - w0), c * (1.0 - c) * (w1 - w0), c};
}

inline void check_logits(const Eigen::VectorXd& logits, int t) {
  if (!logits.allFinite())
    throw TrainingError("non-finite denoiser logits at step " + std::to_string(t));
}

}  // namespace detail

/// One reverse transition sampled by the denoiser. `action` holds the
/// sampled bits of x_{t-1}; `clean_prob` the predicted P(x_0 = 1) per edge.
struct ReverseStepResult {
  OneHotGraph next;
  double logp = 0.0;
  std::vector<std::uint8_t> action;
  std::vector<double> clean_prob;
};

/// Samples x_{t-1} per edge from sum_{x0} p_theta(x0 | x_t) q(x_{t-1} | x_t, x0)
/// and returns the log-probability of the sampled graph.
inline ReverseStepResult reverse_step(const ScorerParams& p, const OneHotGraph& g, int t,
                                      const Eigen::VectorXd& cond, const NoiseSchedule& sched,
                                      Rng& rng) {
  if (t < 1 || t > sched.num_steps) throw ContractError("reverse step out of range");
  Eigen::VectorXd logits = denoiser_logits(p, g, t, sched.num_steps, cond);
  detail::check_logits(logits, t);
  ReverseStepResult r;
  r.next = OneHotGraph(g.num_users(), g.num_experts());
  r.action.resize(g.num_edges());
  r.clean_prob.resize(g.num_edges());
  for (int u = 0; u < g.num_users(); ++u) {
    for (int e = 0; e < g.num_experts(); ++e) {
      const int k = u * g.num_experts() + e;
      const int xt = g.edge_prob(u, e) > 0.5 ? 1 : 0;
      auto ker = detail::edge_kernel(sched, t, xt, logits[2 * k], logits[2 * k + 1]);
      const bool bit = uniform01(rng) < ker.p_one;
      r.action[k] = bit ? 1 : 0;
      r.clean_prob[k] = ker.clean_one;
      r.logp += std::log(bit ? ker.p_one : 1.0 - ker.p_one);
      r.next.set_edge_prob(u, e, bit ? 1.0 : 0.0);
    }
  }
  return r;
}

/// Log-density of a given action under the current parameters.
inline double step_log_prob(const ScorerParams& p, const OneHotGraph& g, int t,
                            const Eigen::VectorXd& cond, const NoiseSchedule& sched,
                            const std::vector<std::uint8_t>& action) {
  Eigen::VectorXd logits = denoiser_logits(p, g, t, sched.num_steps, cond);
  double lp = 0.0;
  for (int u = 0; u < g.num_users(); ++u) {
    for (int e = 0; e < g.num_experts(); ++e) {
      const int k = u * g.num_experts() + e;
      const int xt = g.edge_prob(u, e) > 0.5 ? 1 : 0;
      auto ker = detail::edge_kernel(sched, t, xt, logits[2 * k], logits[2 * k + 1]);
      lp += std::log(action[k] ? ker.p_one : 1.0 - ker.p_one);
    }
  }
  return lp;
}

/// Adds scale * d(log p(action))/d(params) to `grads`.
inline void accumulate_step_log_prob_grad(const ScorerParams& p, const OneHotGraph& g, int t,
                                          const Eigen::VectorXd& cond, const NoiseSchedule& sched,
                                          const std::vector<std::uint8_t>& action, double scale,
                                          ScorerGrads& grads) {
  auto acts = forward_trace(p, denoiser_input(g, t, sched.num_steps, cond));
  const Eigen::VectorXd& logits = acts.back();
  Eigen::VectorXd upstream(logits.size());
  for (int u = 0; u < g.num_users(); ++u) {
    for (int e = 0; e < g.num_experts(); ++e) {
      const int k = u * g.num_experts() + e;
      const int xt = g.edge_prob(u, e) > 0.5 ? 1 : 0;
      auto ker = detail::edge_kernel(sched, t, xt, logits[2 * k], logits[2 * k + 1]);
      const double d = action[k] ? ker.dp_dz / ker.p_one : -ker.dp_dz / (1.0 - ker.p_one);
      upstream[2 * k] = -d;
      upstream[2 * k + 1] = d;
    }
  }
  backward_accumulate(p, acts, upstream, scale, grads);
}

struct TrajectoryStep {
  OneHotGraph state;  // x_t fed to the denoiser
  int t = 0;
  std::vector<std::uint8_t> action;
  double logp = 0.0;
};

struct DenoisingTrajectory {
  std::vector<TrajectoryStep> steps;  // t = T, T-1, ..., 1
  OneHotGraph terminal_graph;         // x_0 before projection
  MatchingState terminal;
  RewardBreakdown reward;

  double total_logp() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.logp;
    return s;
  }
};

/// Per row keeps the `quota` best edges ranked by sampled bit, then predicted
/// edge probability, then lower expert index. Feasible graphs pass unchanged.
inline MatchingState project_to_quota(const OneHotGraph& g, const std::vector<double>& edge_score,
                                      int quota) {
  MatchingState m(g.num_users(), g.num_experts(), quota);
  std::vector<int> order(g.num_experts());
  for (int u = 0; u < g.num_users(); ++u) {
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](int e) {
      return std::pair<int, double>(g.edge_prob(u, e) > 0.5 ? 1 : 0,
                                    edge_score[u * g.num_experts() + e]);
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) > key(b); });
    for (int k = 0; k < quota; ++k) m.set(u, order[k], true);
  }
  return m;
}

/// Draws a uniform noisy graph, runs T reverse steps and projects x_0 onto
/// the quota constraint.
inline std::pair<MatchingState, DenoisingTrajectory> sample_matching(
    const ScorerParams& p, const Eigen::VectorXd& cond, const NoiseSchedule& sched, int num_users,
    int num_experts, int quota, Rng& rng) {
  DenoisingTrajectory traj;
  traj.steps.reserve(sched.num_steps);
  OneHotGraph g = uniform_noise_graph(num_users, num_experts, rng);
  std::vector<double> last_clean;
  for (int t = sched.num_steps; t >= 1; --t) {
    auto r = reverse_step(p, g, t, cond, sched, rng);
    traj.steps.push_back({std::move(g), t, std::move(r.action), r.logp});
    g = std::move(r.next);
    last_clean = std::move(r.clean_prob);
  }
  traj.terminal_graph = g;
  traj.terminal = project_to_quota(g, last_clean, quota);
  return {traj.terminal, std::move(traj)};
}

/// One REINFORCE update over the denoising MDP: a fresh drop, `batch`
/// trajectories, advantage = reward - batch mean, ascent direction
/// sum_b sum_t grad log p * advantage_b / batch.
inline EpochStats train_epoch(ScorerParams& p, OptState& opt, const Scenario& scn,
                              const DropSampler& sample_env, int batch,
                              const NoiseSchedule& sched, Rng& rng) {
  if (batch < 2) throw ContractError("policy-gradient training needs batch >= 2");
  ChannelRealization chan = sample_env(rng);
  Eigen::VectorXd cond = condition_vector(scn, chan);

  std::vector<DenoisingTrajectory> trajs;
  trajs.reserve(batch);
  EpochStats st;
  st.max_reward = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < batch; ++b) {
    auto [m, traj] = sample_matching(p, cond, sched, scn.num_users, scn.num_experts, scn.quota, rng);
    traj.reward = evaluate(scn, chan, m).reward;
    if (!std::isfinite(traj.reward.total))
      throw TrainingError("non-finite reward in trajectory " + std::to_string(b));
    st.mean_reward += traj.reward.total / batch;
    st.mean_qoe += traj.reward.qoe_sum / batch;
    st.max_reward = std::max(st.max_reward, traj.reward.total);
    trajs.push_back(std::move(traj));
  }

  // A constant batch carries no signal; rounding in the mean must not leak
  // into a step that Adam would rescale to full size.
  const auto [lo, hi] = std::minmax_element(
      trajs.begin(), trajs.end(),
      [](const auto& a, const auto& b) { return a.reward.total < b.reward.total; });
  if (lo->reward.total == hi->reward.total) return st;

  ScorerGrads grads = zeros_like(p);
  for (const auto& traj : trajs) {
    const double adv = traj.reward.total - st.mean_reward;
    if (adv == 0.0) continue;
    for (const auto& step : traj.steps) {
      // Descent on -adv * log p.
      accumulate_step_log_prob_grad(p, step.state, step.t, cond, sched, step.action,
                                    -adv / batch, grads);
    }
  }
  st.grad_norm = grad_norm(grads);
  if (!std::isfinite(st.grad_norm))
    throw TrainingError("non-finite policy gradient (mean reward " +
                        std::to_string(st.mean_reward) + ")");
  if (st.grad_norm > 0.0) adam_step(p, grads, opt);
  return st;
}

}  // namespace diffmatch
