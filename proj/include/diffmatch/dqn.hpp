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
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diffmatch/errors.hpp"
#include "diffmatch/matchgraph.hpp"
#include "diffmatch/rng.hpp"
#include "diffmatch/scenario.hpp"
#include "diffmatch/scorer.hpp"

namespace diffmatch {

/// Sequential slot-filling episode. Rows before `user` are complete, row
/// `user` holds `slot` experts and later rows are empty.
struct EpisodeState {
  MatchingState partial;
  int user = 0;
  int slot = 0;
  Eigen::VectorXd cond;

  bool done() const { return user >= partial.num_users(); }
};

inline EpisodeState start_episode(int num_users, int num_experts, int quota,
                                  Eigen::VectorXd cond) {
  return {MatchingState(num_users, num_experts, quota), 0, 0, std::move(cond)};
}

inline int episode_length(const Scenario& s) { return s.num_users * s.quota; }

inline int q_input_length(const Scenario& s) {
  return s.num_users * s.num_experts + s.num_users + kMaxQuota + condition_length(s);
}

inline std::vector<int> q_network_dims(const Scenario& s, const std::vector<int>& hidden) {
  std::vector<int> dims{q_input_length(s)};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(s.num_experts);
  return dims;
}

// Assignment bits, cursor user one-hot, slot one-hot, condition.
inline Eigen::VectorXd episode_features(const EpisodeState& es) {
  const auto& m = es.partial;
  const int ue = m.num_users() * m.num_experts();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(ue + m.num_users() + kMaxQuota + es.cond.size());
  for (int i = 0; i < ue; ++i) x[i] = m.raw()[i];
  if (!es.done()) {
    x[ue + es.user] = 1.0;
    x[ue + m.num_users() + es.slot] = 1.0;
  }
  x.tail(es.cond.size()) = es.cond;
  return x;
}

inline std::vector<std::uint8_t> legal_actions(const EpisodeState& es) {
  std::vector<std::uint8_t> legal(es.partial.num_experts(), 0);
  if (es.done()) return legal;
  for (int e = 0; e < es.partial.num_experts(); ++e) legal[e] = es.partial.at(es.user, e) ? 0 : 1;
  return legal;
}

using TerminalScore = std::function<double(const MatchingState&)>;

struct StepOutcome {
  EpisodeState next;
  double reward = 0.0;
  bool done = false;
};

/// Sets the edge and advances the cursor; reward is zero except on the last
/// slot, where the completed matching is scored.
inline StepOutcome step(const EpisodeState& es, int action, const TerminalScore& score) {
  if (es.done()) throw ContractError("episode already finished");
  if (action < 0 || action >= es.partial.num_experts() || es.partial.at(es.user, action))
    throw ContractError("illegal expert " + std::to_string(action) + " for user " +
                        std::to_string(es.user));
  StepOutcome out{es, 0.0, false};
  out.next.partial.set(es.user, action, true);
  if (++out.next.slot == es.partial.quota()) {
    out.next.slot = 0;
    ++out.next.user;
  }
  if (out.next.done()) {
    out.done = true;
    out.reward = score(out.next.partial);
  }
  return out;
}

inline int masked_argmax(const Eigen::VectorXd& q, const std::vector<std::uint8_t>& legal) {
  int best = -1;
  for (int a = 0; a < static_cast<int>(legal.size()); ++a)
    if (legal[a] && (best < 0 || q[a] > q[best])) best = a;
  return best;
}

inline int act_epsilon_greedy(const ScorerParams& p, const EpisodeState& es, double epsilon,
                              Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ContractError("epsilon must lie in [0, 1]");
  auto legal = legal_actions(es);
  std::vector<int> choices;
  for (int a = 0; a < static_cast<int>(legal.size()); ++a)
    if (legal[a]) choices.push_back(a);
  if (choices.empty()) throw ContractError("no legal action");
  if (epsilon > 0.0 && uniform01(rng) < epsilon)
    return choices[uniform_index(rng, static_cast<int>(choices.size()))];
  return masked_argmax(forward(p, episode_features(es)), legal);
}

struct Transition {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  std::vector<std::uint8_t> next_legal;
  bool terminal = false;
};

/// Bounded FIFO; once full, the oldest transition is overwritten.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
    data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

  // Uniform with replacement.
  const Transition& sample(Rng& rng) const {
    return data_[static_cast<std::size_t>(uniform_index(rng, static_cast<int>(data_.size())))];
  }

  const Transition& at(std::size_t i) const { return data_[i]; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

struct DqnTrainResult {
  double loss = 0.0;
  double grad_norm = 0.0;
};

/// One Adam step on the mean squared Bellman error against `target`.
inline DqnTrainResult dqn_train_step(ScorerParams& p, const ScorerParams& target,
                                     const ReplayBuffer& buf, OptState& opt, double gamma,
                                     int batch, Rng& rng) {
  if (batch < 1 || buf.size() < static_cast<std::size_t>(batch))
    throw ContractError("replay buffer holds fewer transitions than the batch");
  ScorerGrads grads = zeros_like(p);
  double loss = 0.0;
  for (int b = 0; b < batch; ++b) {
    const Transition& tr = buf.sample(rng);
    double y = tr.reward;
    if (!tr.terminal) {
      Eigen::VectorXd qn = forward(target, tr.next_state);
      y += gamma * qn[masked_argmax(qn, tr.next_legal)];
    }
    auto acts = forward_trace(p, tr.state);
    const double err = acts.back()[tr.action] - y;
    loss += err * err / batch;
    Eigen::VectorXd up = Eigen::VectorXd::Zero(acts.back().size());
    up[tr.action] = 2.0 * err / batch;
    backward_accumulate(p, acts, up, 1.0, grads);
  }
  if (!std::isfinite(loss)) throw TrainingError("non-finite Bellman loss");
  DqnTrainResult r{loss, grad_norm(grads)};
  adam_step(p, grads, opt);
  return r;
}

struct DqnConfig {
  std::vector<int> hidden{128, 128};
  double learning_rate = 1e-3;
  int replay_capacity = 20000;
  int batch = 32;
  int train_steps_per_epoch = 16;
  int target_sync = 50;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double gamma = 1.0;

  friend bool operator==(const DqnConfig&, const DqnConfig&) = default;
};

// Linear from epsilon_start to epsilon_end over the first half of training.
inline double epsilon_at(const DqnConfig& c, int epoch, int total_epochs) {
  const double horizon = std::max(1.0, total_epochs / 2.0);
  const double frac = std::min(1.0, epoch / horizon);
  return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * frac;
}

struct EpisodeResult {
  MatchingState matching;
  double reward = 0.0;
};

inline EpisodeResult run_episode(const ScorerParams& p, const Scenario& scn,
                                 const Eigen::VectorXd& cond, const TerminalScore& score,
                                 double epsilon, Rng& rng, ReplayBuffer* buf = nullptr) {
  EpisodeState es = start_episode(scn.num_users, scn.num_experts, scn.quota, cond);
  while (true) {
    int a = act_epsilon_greedy(p, es, epsilon, rng);
    auto out = step(es, a, score);
    if (buf) {
      buf->push({episode_features(es), a, out.reward, episode_features(out.next),
                 legal_actions(out.next), out.done});
    }
    es = std::move(out.next);
    if (out.done) return {es.partial, out.reward};
  }
}

/// Owns the online and target Q-networks plus replay for one training run.
class DqnAgent {
 public:
  DqnAgent(const Scenario& scn, DqnConfig cfg, Rng& init_rng)
      : cfg_(std::move(cfg)),
        online_(init_scorer(q_network_dims(scn, cfg_.hidden), init_rng)),
        target_(online_),
        opt_(make_opt_state(online_, AdamConfig{cfg_.learning_rate})),
        buffer_(static_cast<std::size_t>(cfg_.replay_capacity)) {}

  /// `episodes` exploratory rollouts on one drop, then the configured number
  /// of gradient steps. Returns mean/max episode reward and last grad norm.
  EpochStats train_epoch(const Scenario& scn, const ChannelRealization& chan, int episodes,
                         int epoch, int total_epochs, Rng& rng) {
    const double eps = epsilon_at(cfg_, epoch, total_epochs);
    Eigen::VectorXd cond = condition_vector(scn, chan);
    TerminalScore score = [&](const MatchingState& m) { return evaluate_total(scn, chan, m); };
    EpochStats st;
    st.max_reward = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < episodes; ++i) {
      auto ep = run_episode(online_, scn, cond, score, eps, rng, &buffer_);
      st.mean_reward += ep.reward / episodes;
      st.max_reward = std::max(st.max_reward, ep.reward);
    }
    if (buffer_.size() >= static_cast<std::size_t>(cfg_.batch)) {
      for (int k = 0; k < cfg_.train_steps_per_epoch; ++k) {
        auto r = dqn_train_step(online_, target_, buffer_, opt_, cfg_.gamma, cfg_.batch, rng);
        st.grad_norm = r.grad_norm;
        if (++updates_ % cfg_.target_sync == 0) sync_target();
      }
    }
    return st;
  }

  // Greedy (epsilon = 0) matching for a drop.
  MatchingState act(const Scenario& scn, const ChannelRealization& chan, Rng& rng) const {
    TerminalScore none = [](const MatchingState&) { return 0.0; };
    return run_episode(online_, scn, condition_vector(scn, chan), none, 0.0, rng).matching;
  }

  void sync_target() { target_ = online_; }

  const ScorerParams& online() const { return online_; }
  const ScorerParams& target() const { return target_; }

 private:
  DqnConfig cfg_;
  ScorerParams online_;
  ScorerParams target_;
  OptState opt_;
  ReplayBuffer buffer_;
  long updates_ = 0;
};

}  // namespace diffmatch
