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
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "diffmatch/errors.hpp"
#include "diffmatch/matchgraph.hpp"

namespace diffmatch {

/// Strict two-sided preferences with per-expert capacities. Rankings list
/// indices of the opposite side from most to least preferred.
class PreferenceProfile {
 public:
  PreferenceProfile(std::vector<std::vector<int>> user_prefs,
                    std::vector<std::vector<int>> expert_prefs,
                    std::vector<int> expert_capacity)
      : user_prefs_(std::move(user_prefs)),
        expert_prefs_(std::move(expert_prefs)),
        capacity_(std::move(expert_capacity)) {
    const int users = num_users();
    const int experts = num_experts();
    if (users < 1 || experts < 1) throw ConfigError("preference profile is empty");
    if (static_cast<int>(capacity_.size()) != experts)
      throw ConfigError("expected one capacity per expert");
    for (int c : capacity_)
      if (c < 1) throw ConfigError("expert capacity must be >= 1");
    for (const auto& r : user_prefs_) check_permutation(r, experts, "user");
    for (const auto& r : expert_prefs_) check_permutation(r, users, "expert");

    user_rank_.assign(users, std::vector<int>(experts));
    for (int u = 0; u < users; ++u)
      for (int k = 0; k < experts; ++k) user_rank_[u][user_prefs_[u][k]] = k;
    expert_rank_.assign(experts, std::vector<int>(users));
    for (int e = 0; e < experts; ++e)
      for (int k = 0; k < users; ++k) expert_rank_[e][expert_prefs_[e][k]] = k;
  }

  int num_users() const { return static_cast<int>(user_prefs_.size()); }
  int num_experts() const { return static_cast<int>(expert_prefs_.size()); }

  const std::vector<int>& user_prefs(int u) const { return user_prefs_[u]; }
  const std::vector<int>& expert_prefs(int e) const { return expert_prefs_[e]; }
  int capacity(int e) const { return capacity_[e]; }

  // Lower rank is better.
  int user_rank(int u, int e) const { return user_rank_[u][e]; }
  int expert_rank(int e, int u) const { return expert_rank_[e][u]; }

 private:
  static void check_permutation(const std::vector<int>& r, int n, const char* side) {
    if (static_cast<int>(r.size()) != n)
      throw ConfigError(std::string(side) + " ranking must list all " + std::to_string(n) +
                        " candidates");
    std::vector<bool> seen(n, false);
    for (int x : r) {
      if (x < 0 || x >= n || seen[x])
        throw ConfigError(std::string(side) + " ranking is not a strict permutation");
      seen[x] = true;
    }
  }

  std::vector<std::vector<int>> user_prefs_;
  std::vector<std::vector<int>> expert_prefs_;
  std::vector<int> capacity_;
  std::vector<std::vector<int>> user_rank_;
  std::vector<std::vector<int>> expert_rank_;
};

struct DeferredAcceptanceResult {
  MatchingState matching;  // quota 1; unmatched users keep an empty row
  int proposals = 0;
};

/// User-proposing deferred acceptance. Experts hold their best offers up to
/// capacity and reject the rest.
inline DeferredAcceptanceResult deferred_acceptance_run(const PreferenceProfile& p) {
  const int users = p.num_users();
  const int experts = p.num_experts();
  std::vector<int> next_choice(users, 0);
  std::vector<std::vector<int>> held(experts);
  std::deque<int> free_users;
  for (int u = 0; u < users; ++u) free_users.push_back(u);

  int proposals = 0;
  while (!free_users.empty()) {
    int u = free_users.front();
    free_users.pop_front();
    if (next_choice[u] >= experts) continue;  // exhausted list, stays unmatched
    int e = p.user_prefs(u)[next_choice[u]++];
    ++proposals;
    auto& h = held[e];
    if (static_cast<int>(h.size()) < p.capacity(e)) {
      h.push_back(u);
      continue;
    }
    auto worst = h.begin();
    for (auto it = h.begin(); it != h.end(); ++it)
      if (p.expert_rank(e, *it) > p.expert_rank(e, *worst)) worst = it;
    if (p.expert_rank(e, u) < p.expert_rank(e, *worst)) {
      free_users.push_back(*worst);
      *worst = u;
    } else {
      free_users.push_back(u);
    }
  }

  MatchingState m(users, experts, 1);
  for (int e = 0; e < experts; ++e)
    for (int u : held[e]) m.set(u, e, true);
  return {std::move(m), proposals};
}

inline MatchingState deferred_acceptance(const PreferenceProfile& p) {
  return deferred_acceptance_run(p).matching;
}

/// True iff no blocking pair exists. A pair (u, e) blocks when u prefers e to
/// its current expert (or is unmatched) and e either has spare capacity or
/// prefers u to the worst user it holds.
inline bool is_stable(const MatchingState& m, const PreferenceProfile& p) {
  if (m.num_users() != p.num_users() || m.num_experts() != p.num_experts())
    throw ContractError("matching and profile shapes differ");
  const int users = m.num_users();
  const int experts = m.num_experts();
  std::vector<int> partner(users, -1);
  for (int u = 0; u < users; ++u) {
    if (m.row_sum(u) > 1) throw ContractError("is_stable expects at most one expert per user");
    for (int e = 0; e < experts; ++e)
      if (m.at(u, e)) partner[u] = e;
  }
  std::vector<int> load(experts, 0);
  std::vector<int> worst_rank(experts, -1);
  for (int u = 0; u < users; ++u) {
    if (partner[u] < 0) continue;
    int e = partner[u];
    ++load[e];
    worst_rank[e] = std::max(worst_rank[e], p.expert_rank(e, u));
  }
  for (int e = 0; e < experts; ++e)
    if (load[e] > p.capacity(e)) return false;

  for (int u = 0; u < users; ++u) {
    for (int e = 0; e < experts; ++e) {
      if (e == partner[u]) continue;
      bool user_wants = partner[u] < 0 || p.user_rank(u, e) < p.user_rank(u, partner[u]);
      if (!user_wants) continue;
      bool expert_wants = load[e] < p.capacity(e) || p.expert_rank(e, u) < worst_rank[e];
      if (expert_wants) return false;
    }
  }
  return true;
}

// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<int>> quota_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> c(k);
  std::iota(c.begin(), c.end(), 0);
  while (true) {
    out.push_back(c);
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

using WeightMatrix = std::vector<std::vector<double>>;

inline double assignment_value(const MatchingState& m, const WeightMatrix& w) {
  double v = 0.0;
  for (int u = 0; u < m.num_users(); ++u)
    for (int e = 0; e < m.num_experts(); ++e)
      if (m.at(u, e)) v += w[u][e];
  return v;
}

namespace detail {

// Min-cost rectangular assignment (rows <= cols) by shortest augmenting
// paths with potentials. Returns the column chosen for each row.
inline std::vector<int> hungarian_min_cost(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const int m = n ? static_cast<int>(cost.front().size()) : 0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pu(n + 1, 0.0), pv(m + 1, 0.0);
  std::vector<int> match_col(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match_col[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      int i0 = match_col[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - pu[i0] - pv[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0) throw ContractError("assignment problem has no feasible completion");
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          pu[match_col[j]] += delta;
          pv[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      int j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (match_col[j]) row_to_col[match_col[j] - 1] = j - 1;
  return row_to_col;
}

inline void check_weights(const WeightMatrix& w, int quota) {
  if (w.empty() || w.front().empty()) throw ConfigError("empty weight matrix");
  for (const auto& row : w) {
    if (row.size() != w.front().size()) throw ConfigError("ragged weight matrix");
    for (double x : row)
      if (!std::isfinite(x)) throw ContractError("weights must be finite");
  }
  if (quota < 1 || quota > static_cast<int>(w.front().size()))
    throw ConfigError("quota outside [1, num_experts]");
}

}  // namespace detail

/// Exact maximum-weight feasible matching via augmenting-path assignment on
/// the user-replicated graph: every user appears `quota` times and may only
/// use its own copy of each expert, so copies of one user never share an
/// expert while experts stay uncapacitated across users.
inline MatchingState max_weight_assignment(const WeightMatrix& w, int quota) {
  detail::check_weights(w, quota);
  const int users = static_cast<int>(w.size());
  const int experts = static_cast<int>(w.front().size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> cost(users * quota, std::vector<double>(users * experts, inf));
  for (int u = 0; u < users; ++u)
    for (int c = 0; c < quota; ++c)
      for (int e = 0; e < experts; ++e) cost[u * quota + c][u * experts + e] = -w[u][e];
  auto cols = detail::hungarian_min_cost(cost);
  MatchingState m(users, experts, quota);
  for (int r = 0; r < users * quota; ++r) m.set(r / quota, cols[r] % experts, true);
  return m;
}

/// Row-separable route: each row independently keeps its top-`quota`
/// weights (ties toward the lower expert index).
inline MatchingState max_weight_assignment_topk(const WeightMatrix& w, int quota) {
  detail::check_weights(w, quota);
  const int users = static_cast<int>(w.size());
  const int experts = static_cast<int>(w.front().size());
  MatchingState m(users, experts, quota);
  std::vector<int> order(experts);
  for (int u = 0; u < users; ++u) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return w[u][a] > w[u][b]; });
    for (int k = 0; k < quota; ++k) m.set(u, order[k], true);
  }
  return m;
}

struct BruteForceResult {
  MatchingState best;
  double score = -std::numeric_limits<double>::infinity();
  std::size_t candidates = 0;
};

inline constexpr double kBruteForceLimit = 1e6;

inline double feasible_matching_count(int num_users, int num_experts, int quota) {
  double per_row = std::round(std::exp(std::lgamma(num_experts + 1.0) - std::lgamma(quota + 1.0) -
                                       std::lgamma(num_experts - quota + 1.0)));
  return std::pow(per_row, num_users);
}

using MatchingScore = std::function<double(const MatchingState&)>;

/// Exhaustive search over all feasible matchings. Rows are enumerated as
/// lexicographic quota-subsets with row 0 most significant; the first
/// maximizer in that order wins ties.
inline BruteForceResult brute_force_best(const MatchingScore& score, int num_users,
                                         int num_experts, int quota) {
  MatchingState m(num_users, num_experts, quota);
  double count = feasible_matching_count(num_users, num_experts, quota);
  if (count > kBruteForceLimit) {
    throw SearchSpaceError("brute force refused: " + std::to_string(count) +
                           " candidate matchings exceed the limit of " +
                           std::to_string(kBruteForceLimit));
  }
  const auto subsets = quota_subsets(num_experts, quota);
  const int radix = static_cast<int>(subsets.size());
  std::vector<int> digit(num_users, 0);
  for (int u = 0; u < num_users; ++u)
    for (int e : subsets[0]) m.set(u, e, true);

  BruteForceResult result;
  while (true) {
    double s = score(m);
    ++result.candidates;
    if (s > result.score) {
      result.score = s;
      result.best = m;
    }
    int u = num_users - 1;
    while (u >= 0 && digit[u] == radix - 1) {
      digit[u] = 0;
      m.clear_row(u);
      for (int e : subsets[0]) m.set(u, e, true);
      --u;
    }
    if (u < 0) break;
    ++digit[u];
    m.clear_row(u);
    for (int e : subsets[digit[u]]) m.set(u, e, true);
  }
  return result;
}

/// Scores a partially filled matching whose first `filled_rows` rows are set.
using PrefixScore = std::function<double(const MatchingState&, int filled_rows)>;

/// Fills rows in index order; each row takes the quota-subset with the
/// highest score given the rows already fixed.
inline MatchingState greedy_matching(const PrefixScore& score, int num_users, int num_experts,
                                     int quota) {
  MatchingState m(num_users, num_experts, quota);
  const auto subsets = quota_subsets(num_experts, quota);
  for (int u = 0; u < num_users; ++u) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < subsets.size(); ++k) {
      m.clear_row(u);
      for (int e : subsets[k]) m.set(u, e, true);
      double s = score(m, u + 1);
      if (s > best) {
        best = s;
        best_k = k;
      }
    }
    m.clear_row(u);
    for (int e : subsets[best_k]) m.set(u, e, true);
  }
  return m;
}

}  // namespace diffmatch
