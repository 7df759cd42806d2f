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
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "diffmatch/errors.hpp"
#include "diffmatch/rng.hpp"

namespace diffmatch {

/// Binary user x expert assignment matrix. Row u lists the experts serving
/// user u; a feasible state has exactly `quota` ones in every row.
class MatchingState {
 public:
  MatchingState() = default;

  MatchingState(int num_users, int num_experts, int quota)
      : users_(num_users), experts_(num_experts), quota_(quota) {
    if (num_users < 1 || num_experts < 1) {
      throw ConfigError("matching needs at least one user and one expert, got " +
                        std::to_string(num_users) + "x" + std::to_string(num_experts));
    }
    if (quota < 1 || quota > num_experts) {
      throw ConfigError("quota " + std::to_string(quota) + " outside [1, " +
                        std::to_string(num_experts) + "]");
    }
    assign_.assign(static_cast<std::size_t>(num_users) * num_experts, 0);
  }

  int num_users() const { return users_; }
  int num_experts() const { return experts_; }
  int quota() const { return quota_; }
  int num_edges() const { return users_ * experts_; }

  bool at(int u, int e) const { return assign_[index(u, e)] != 0; }
  void set(int u, int e, bool on) { assign_[index(u, e)] = on ? 1 : 0; }

  int row_sum(int u) const {
    int s = 0;
    for (int e = 0; e < experts_; ++e) s += assign_[index(u, e)];
    return s;
  }
  int column_sum(int e) const {
    int s = 0;
    for (int u = 0; u < users_; ++u) s += assign_[index(u, e)];
    return s;
  }

  void clear_row(int u) {
    std::fill_n(assign_.begin() + static_cast<std::ptrdiff_t>(u) * experts_, experts_, 0);
  }

  std::vector<int> experts_of(int u) const {
    std::vector<int> out;
    for (int e = 0; e < experts_; ++e)
      if (at(u, e)) out.push_back(e);
    return out;
  }

  const std::vector<std::uint8_t>& raw() const { return assign_; }

  friend bool operator==(const MatchingState&, const MatchingState&) = default;

 private:
  std::size_t index(int u, int e) const {
    return static_cast<std::size_t>(u) * experts_ + e;
  }

  int users_ = 0;
  int experts_ = 0;
  int quota_ = 0;
  std::vector<std::uint8_t> assign_;
};

inline MatchingState new_empty(int num_users, int num_experts, int quota) {
  return MatchingState(num_users, num_experts, quota);
}

inline bool is_feasible(const MatchingState& m) {
  for (int u = 0; u < m.num_users(); ++u)
    if (m.row_sum(u) != m.quota()) return false;
  return true;
}

/// Soft or hard graph of shape users x experts x 2. Channel 0 holds the
/// "no edge" mass and channel 1 the "edge" mass; they sum to one.
class OneHotGraph {
 public:
  OneHotGraph() = default;
  OneHotGraph(int num_users, int num_experts)
      : users_(num_users),
        experts_(num_experts),
        values_(static_cast<std::size_t>(num_users) * num_experts * 2, 0.0) {
    for (std::size_t i = 0; i < values_.size(); i += 2) values_[i] = 1.0;
  }

  int num_users() const { return users_; }
  int num_experts() const { return experts_; }
  int num_edges() const { return users_ * experts_; }

  double edge_prob(int u, int e) const { return values_[slot(u, e) + 1]; }
  double channel(int u, int e, int c) const { return values_[slot(u, e) + c]; }

  // Sets the edge mass to p and the complement to 1 - p.
  void set_edge_prob(int u, int e, double p) {
    values_[slot(u, e)] = 1.0 - p;
    values_[slot(u, e) + 1] = p;
  }

  bool is_hard() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return v == 0.0 || v == 1.0; });
  }

  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const OneHotGraph&, const OneHotGraph&) = default;

 private:
  std::size_t slot(int u, int e) const {
    return (static_cast<std::size_t>(u) * experts_ + e) * 2;
  }

  int users_ = 0;
  int experts_ = 0;
  std::vector<double> values_;
};

inline OneHotGraph one_hot_encode(const MatchingState& m) {
  OneHotGraph g(m.num_users(), m.num_experts());
  for (int u = 0; u < m.num_users(); ++u)
    for (int e = 0; e < m.num_experts(); ++e) g.set_edge_prob(u, e, m.at(u, e) ? 1.0 : 0.0);
  return g;
}

// Hard decision per edge: present iff the edge channel carries more mass.
inline MatchingState one_hot_decode(const OneHotGraph& g, int quota) {
  MatchingState m(g.num_users(), g.num_experts(), quota);
  for (int u = 0; u < g.num_users(); ++u)
    for (int e = 0; e < g.num_experts(); ++e) m.set(u, e, g.channel(u, e, 1) > g.channel(u, e, 0));
  return m;
}

/// Each row is an independent uniform quota-subset of the experts.
inline MatchingState random_matching(Rng& rng, int num_users, int num_experts, int quota) {
  MatchingState m(num_users, num_experts, quota);
  std::vector<int> perm(num_experts);
  for (int u = 0; u < num_users; ++u) {
    std::iota(perm.begin(), perm.end(), 0);
    // Partial Fisher-Yates: the first `quota` slots form a uniform subset.
    for (int i = 0; i < quota; ++i) {
      int j = i + uniform_index(rng, num_experts - i);
      std::swap(perm[i], perm[j]);
    }
    for (int i = 0; i < quota; ++i) m.set(u, perm[i], true);
  }
  return m;
}

struct StreamPartition {
  std::vector<int> common_experts;                 // served to >= 2 users
  std::vector<std::pair<int, int>> private_pairs;  // (user, expert), expert serves 1 user
  std::vector<int> inactive_experts;               // unused

  // Number of common experts assigned to each user.
  std::vector<int> common_count;
  // Users consuming at least one common expert, ascending.
  std::vector<int> common_receivers;
  // Users owning at least one private expert, ascending.
  std::vector<int> private_users;

  int active_experts() const {
    return static_cast<int>(common_experts.size() + private_pairs.size());
  }
};

inline StreamPartition derive_streams(const MatchingState& m) {
  if (!is_feasible(m)) throw ContractError("derive_streams requires a feasible matching");
  StreamPartition part;
  part.common_count.assign(m.num_users(), 0);
  std::vector<bool> is_common(m.num_experts(), false);
  std::vector<bool> has_private(m.num_users(), false);
  for (int e = 0; e < m.num_experts(); ++e) {
    int load = m.column_sum(e);
    if (load == 0) {
      part.inactive_experts.push_back(e);
    } else if (load == 1) {
      for (int u = 0; u < m.num_users(); ++u)
        if (m.at(u, e)) {
          part.private_pairs.emplace_back(u, e);
          has_private[u] = true;
        }
    } else {
      part.common_experts.push_back(e);
      is_common[e] = true;
    }
  }
  std::sort(part.private_pairs.begin(), part.private_pairs.end());
  for (int u = 0; u < m.num_users(); ++u) {
    for (int e = 0; e < m.num_experts(); ++e)
      if (m.at(u, e) && is_common[e]) ++part.common_count[u];
    if (part.common_count[u] > 0) part.common_receivers.push_back(u);
    if (has_private[u]) part.private_users.push_back(u);
  }
  return part;
}

// Plain-text grid: one user per line, 0/1 entries separated by spaces.
inline void write_grid(std::ostream& os, const MatchingState& m) {
  for (int u = 0; u < m.num_users(); ++u) {
    for (int e = 0; e < m.num_experts(); ++e) {
      if (e) os << ' ';
      os << (m.at(u, e) ? 1 : 0);
    }
    os << '\n';
  }
}

inline std::string to_grid(const MatchingState& m) {
  std::ostringstream os;
  write_grid(os, m);
  return os.str();
}

inline MatchingState read_grid(std::istream& is, int quota) {
  std::vector<std::vector<int>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::vector<int> row;
    int v;
    while (ls >> v) {
      if (v != 0 && v != 1) throw ConfigError("grid entries must be 0 or 1");
      row.push_back(v);
    }
    if (!ls.eof()) throw ConfigError("malformed grid line: " + line);
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError("ragged grid rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("empty grid");
  MatchingState m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()), quota);
  for (int u = 0; u < m.num_users(); ++u)
    for (int e = 0; e < m.num_experts(); ++e) m.set(u, e, rows[u][e] == 1);
  return m;
}

inline MatchingState from_grid(const std::string& text, int quota) {
  std::istringstream is(text);
  return read_grid(is, quota);
}

}  // namespace diffmatch
