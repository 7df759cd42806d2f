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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diffmatch/channel.hpp"
#include "diffmatch/classical.hpp"
#include "diffmatch/dqn.hpp"
#include "diffmatch/errors.hpp"
#include "diffmatch/gdm.hpp"
#include "diffmatch/qoe.hpp"
#include "diffmatch/scenario.hpp"

namespace diffmatch {

struct ScenarioShape {
  int num_users = 15;
  int num_experts = 6;
  int quota = 2;
  double affinity_lo = 0.2;
  double affinity_hi = 1.0;

  friend bool operator==(const ScenarioShape&, const ScenarioShape&) = default;
};

struct TrainingConfig {
  int epochs = 200;
  int batch = 16;
  double learning_rate = 1e-3;
  std::vector<int> steps{3, 6};
  std::vector<int> hidden{128, 128};
  ScheduleKind schedule = ScheduleKind::kLinear;
  bool fixed_drop = false;
  double convergence_snr_db = 10.0;
  int smoothing_window = 10;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct SweepConfig {
  double snr_db_min = -10.0;
  double snr_db_max = 30.0;
  double snr_db_step = 5.0;
  int eval_drops = 200;

  std::vector<double> grid() const {
    std::vector<double> g;
    const int n = static_cast<int>(std::floor((snr_db_max - snr_db_min) / snr_db_step + 1e-9));
    for (int i = 0; i <= n; ++i) g.push_back(snr_db_min + i * snr_db_step);
    return g;
  }

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

// Raw rankings as written in the config; PreferenceProfile validates them.
struct PreferenceSpec {
  std::vector<std::vector<int>> user_prefs;
  std::vector<std::vector<int>> expert_prefs;
  std::vector<int> capacity;

  PreferenceProfile profile() const { return {user_prefs, expert_prefs, capacity}; }

  friend bool operator==(const PreferenceSpec&, const PreferenceSpec&) = default;
};

struct ExperimentConfig {
  ScenarioShape scenario;
  ScenarioRadio radio;
  RewardWeights reward;
  FeatureScaling features;
  TrainingConfig training;
  DqnConfig dqn;
  SweepConfig sweep;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string output_dir = "out";
  std::optional<AffinityMatrix> affinity;
  std::optional<PreferenceSpec> preferences;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    bool aff = a.affinity.has_value() == b.affinity.has_value() &&
               (!a.affinity || *a.affinity == *b.affinity);
    return aff && a.scenario == b.scenario && a.radio == b.radio && a.reward == b.reward &&
           a.features == b.features && a.training == b.training && a.dqn == b.dqn &&
           a.sweep == b.sweep && a.seeds == b.seeds && a.output_dir == b.output_dir &&
           a.preferences == b.preferences;
  }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Shortest text that parses back to the identical double.
// Shortest text that reads back to the same double.
inline std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::string s = v;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& v) {
  std::size_t pos = 0;
  double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument(v);
  return d;
}

inline long long parse_int(const std::string& v) {
  std::size_t pos = 0;
  long long d = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument(v);
  return d;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument(v);
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, F f) {
  std::vector<T> out;
  for (const auto& tok : split_list(v)) out.push_back(static_cast<T>(f(tok)));
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F f, const char* sep = ", ") {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += sep;
    s += f(xs[i]);
  }
  return s;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define DIFFMATCH_FIELD_D(sec, name, expr)                                                     \
  Field {                                                                                    \
    sec, name, [](ExperimentConfig& c, const std::string& v) { c.expr = parse_double(v); }, \
        [](const ExperimentConfig& c) { return fmt_double(c.expr); }                         \
  }
#define DIFFMATCH_FIELD_I(sec, name, expr)                                                     \
  Field {                                                                                    \
    sec, name,                                                                               \
        [](ExperimentConfig& c, const std::string& v) {                                      \
          c.expr = static_cast<decltype(c.expr)>(parse_int(v));                              \
        },                                                                                   \
        [](const ExperimentConfig& c) { return std::to_string(c.expr); }                     \
  }

inline const std::vector<Field>& fields() {
  auto itos = [](int x) { return std::to_string(x); };
  static const std::vector<Field> table = {
      DIFFMATCH_FIELD_I("scenario", "num_users", scenario.num_users),
      DIFFMATCH_FIELD_I("scenario", "num_experts", scenario.num_experts),
      DIFFMATCH_FIELD_I("scenario", "quota", scenario.quota),
      DIFFMATCH_FIELD_D("scenario", "affinity_lo", scenario.affinity_lo),
      DIFFMATCH_FIELD_D("scenario", "affinity_hi", scenario.affinity_hi),
      DIFFMATCH_FIELD_D("radio", "carrier_freq_hz", radio.carrier_freq_hz),
      DIFFMATCH_FIELD_D("radio", "dist_min_m", radio.dist_min_m),
      DIFFMATCH_FIELD_D("radio", "dist_max_m", radio.dist_max_m),
      DIFFMATCH_FIELD_I("radio", "num_antennas", radio.num_antennas),
      DIFFMATCH_FIELD_D("radio", "path_loss_exponent", radio.path_loss_exponent),
      DIFFMATCH_FIELD_D("radio", "common_power_fraction", radio.common_power_fraction),
      DIFFMATCH_FIELD_D("radio", "tx_power_w", radio.tx_power_w),
      DIFFMATCH_FIELD_D("reward", "lambda_energy", reward.lambda_energy),
      DIFFMATCH_FIELD_D("reward", "lambda_compute", reward.lambda_compute),
      DIFFMATCH_FIELD_D("reward", "payload_bits", reward.payload_bits),
      DIFFMATCH_FIELD_D("reward", "bandwidth_hz", reward.bandwidth_hz),
      DIFFMATCH_FIELD_D("reward", "r_req", reward.r_req),
      DIFFMATCH_FIELD_D("features", "gain_db_mean", features.gain_db_mean),
      DIFFMATCH_FIELD_D("features", "gain_db_scale", features.gain_db_scale),
      DIFFMATCH_FIELD_D("features", "snr_db_mean", features.snr_db_mean),
      DIFFMATCH_FIELD_D("features", "snr_db_scale", features.snr_db_scale),
      DIFFMATCH_FIELD_D("features", "affinity_mean", features.affinity_mean),
      DIFFMATCH_FIELD_D("features", "affinity_scale", features.affinity_scale),
      DIFFMATCH_FIELD_I("training", "epochs", training.epochs),
      DIFFMATCH_FIELD_I("training", "batch", training.batch),
      DIFFMATCH_FIELD_D("training", "learning_rate", training.learning_rate),
      Field{"training", "steps",
            [](ExperimentConfig& c, const std::string& v) {
              c.training.steps = parse_list<int>(v, parse_int);
            },
            [itos](const ExperimentConfig& c) { return join(c.training.steps, itos); }},
      Field{"training", "hidden",
            [](ExperimentConfig& c, const std::string& v) {
              c.training.hidden = parse_list<int>(v, parse_int);
            },
            [itos](const ExperimentConfig& c) { return join(c.training.hidden, itos); }},
      Field{"training", "schedule",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "linear") c.training.schedule = ScheduleKind::kLinear;
              else if (v == "constant") c.training.schedule = ScheduleKind::kConstant;
              else throw std::invalid_argument(v);
            },
            [](const ExperimentConfig& c) {
              return std::string(c.training.schedule == ScheduleKind::kLinear ? "linear"
                                                                               : "constant");
            }},
      Field{"training", "fixed_drop",
            [](ExperimentConfig& c, const std::string& v) { c.training.fixed_drop = parse_bool(v); },
            [](const ExperimentConfig& c) {
              return std::string(c.training.fixed_drop ? "true" : "false");
            }},
      DIFFMATCH_FIELD_D("training", "convergence_snr_db", training.convergence_snr_db),
      DIFFMATCH_FIELD_I("training", "smoothing_window", training.smoothing_window),
      Field{"dqn", "hidden",
            [](ExperimentConfig& c, const std::string& v) {
              c.dqn.hidden = parse_list<int>(v, parse_int);
            },
            [itos](const ExperimentConfig& c) { return join(c.dqn.hidden, itos); }},
      DIFFMATCH_FIELD_D("dqn", "learning_rate", dqn.learning_rate),
      DIFFMATCH_FIELD_I("dqn", "replay_capacity", dqn.replay_capacity),
      DIFFMATCH_FIELD_I("dqn", "batch", dqn.batch),
      DIFFMATCH_FIELD_I("dqn", "train_steps_per_epoch", dqn.train_steps_per_epoch),
      DIFFMATCH_FIELD_I("dqn", "target_sync", dqn.target_sync),
      DIFFMATCH_FIELD_D("dqn", "epsilon_start", dqn.epsilon_start),
      DIFFMATCH_FIELD_D("dqn", "epsilon_end", dqn.epsilon_end),
      DIFFMATCH_FIELD_D("dqn", "gamma", dqn.gamma),
      DIFFMATCH_FIELD_D("sweep", "snr_db_min", sweep.snr_db_min),
      DIFFMATCH_FIELD_D("sweep", "snr_db_max", sweep.snr_db_max),
      DIFFMATCH_FIELD_D("sweep", "snr_db_step", sweep.snr_db_step),
      DIFFMATCH_FIELD_I("sweep", "eval_drops", sweep.eval_drops),
      Field{"run", "seeds",
            [](ExperimentConfig& c, const std::string& v) {
              c.seeds = parse_list<std::uint64_t>(v, [](const std::string& s) {
                long long x = parse_int(s);
                if (x < 0) throw std::invalid_argument(s);
                return x;
              });
            },
            [](const ExperimentConfig& c) {
              return join(c.seeds, [](std::uint64_t x) { return std::to_string(x); });
            }},
      Field{"run", "output_dir",
            [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
            [](const ExperimentConfig& c) { return c.output_dir; }},
  };
  return table;
}

#undef DIFFMATCH_FIELD_D
#undef DIFFMATCH_FIELD_I

// Indexed keys such as `row.3` in [affinity] or `user.0` in [preferences].
inline bool indexed_key(const std::string& key, const std::string& prefix, int& index) {
  if (key.rfind(prefix + ".", 0) != 0) return false;
  try {
    long long i = parse_int(key.substr(prefix.size() + 1));
    if (i < 0 || i > 1000000) return false;
    index = static_cast<int>(i);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

template <typename T>
void put_indexed(std::vector<T>& v, int index, T value) {
  if (static_cast<int>(v.size()) <= index) v.resize(index + 1);
  v[index] = std::move(value);
}

}  // namespace config_detail

inline void validate(const ExperimentConfig& c) {
  const auto& s = c.scenario;
  if (s.num_users < 1 || s.num_experts < 1)
    throw ConfigError("[scenario] needs num_users >= 1 and num_experts >= 1");
  if (s.quota < 1 || s.quota > s.num_experts || s.quota > kMaxQuota)
    throw ConfigError("[scenario] quota must lie in [1, min(num_experts, 3)]");
  if (!(s.affinity_lo >= 0.0 && s.affinity_lo <= s.affinity_hi && s.affinity_hi <= 1.0))
    throw ConfigError("[scenario] need 0 <= affinity_lo <= affinity_hi <= 1");
  c.radio.validate();
  if (!(c.reward.r_req > 0.0)) throw ConfigError("[reward] r_req must be positive");
  if (!(c.reward.payload_bits > 0.0 && c.reward.bandwidth_hz > 0.0))
    throw ConfigError("[reward] payload_bits and bandwidth_hz must be positive");
  if (c.reward.lambda_energy < 0.0 || c.reward.lambda_compute < 0.0)
    throw ConfigError("[reward] cost weights must be non-negative");
  if (!(c.features.gain_db_scale > 0.0 && c.features.snr_db_scale > 0.0 &&
        c.features.affinity_scale > 0.0))
    throw ConfigError("[features] scales must be positive");
  const auto& t = c.training;
  if (t.epochs < 1) throw ConfigError("[training] epochs must be >= 1");
  if (t.batch < 2) throw ConfigError("[training] batch must be >= 2");
  if (!(t.learning_rate >= 0.0)) throw ConfigError("[training] learning_rate must be >= 0");
  if (t.steps.empty()) throw ConfigError("[training] steps list is empty");
  for (int x : t.steps)
    if (x < 1) throw ConfigError("[training] diffusion steps must be >= 1");
  for (int x : t.hidden)
    if (x < 1) throw ConfigError("[training] hidden sizes must be >= 1");
  if (t.smoothing_window < 1) throw ConfigError("[training] smoothing_window must be >= 1");
  const auto& d = c.dqn;
  for (int x : d.hidden)
    if (x < 1) throw ConfigError("[dqn] hidden sizes must be >= 1");
  if (d.replay_capacity < d.batch || d.batch < 1)
    throw ConfigError("[dqn] need 1 <= batch <= replay_capacity");
  if (d.train_steps_per_epoch < 0 || d.target_sync < 1)
    throw ConfigError("[dqn] invalid train_steps_per_epoch or target_sync");
  if (!(d.epsilon_start >= 0 && d.epsilon_start <= 1 && d.epsilon_end >= 0 && d.epsilon_end <= 1))
    throw ConfigError("[dqn] epsilons must lie in [0, 1]");
  if (!(d.learning_rate >= 0.0) || !(d.gamma >= 0.0 && d.gamma <= 1.0))
    throw ConfigError("[dqn] invalid learning_rate or gamma");
  const auto& w = c.sweep;
  if (!(w.snr_db_step > 0.0)) throw ConfigError("[sweep] snr_db_step must be positive");
  if (!(w.snr_db_min <= w.snr_db_max))
    throw ConfigError("[sweep] snr grid must be ascending: snr_db_max " +
                      config_detail::fmt_double(w.snr_db_max) + " < snr_db_min " +
                      config_detail::fmt_double(w.snr_db_min));
  if (w.eval_drops < 1) throw ConfigError("[sweep] eval_drops must be >= 1");
  if (c.seeds.empty()) throw ConfigError("[run] seeds list is empty");
  if (c.affinity) {
    const auto& a = *c.affinity;
    if (a.rows() != s.num_users || a.cols() != s.num_experts)
      throw ConfigError("[affinity] needs num_users rows of num_experts values");
    if ((a.array() < 0.0).any() || (a.array() > 1.0).any())
      throw ConfigError("[affinity] entries must lie in [0, 1]");
  }
  if (c.preferences) {
    const auto& p = *c.preferences;
    if (static_cast<int>(p.user_prefs.size()) != s.num_users ||
        static_cast<int>(p.expert_prefs.size()) != s.num_experts)
      throw ConfigError("[preferences] needs one ranking per user and per expert");
    PreferenceSpec full = p;
    if (full.capacity.empty()) full.capacity.assign(s.num_experts, 1);
    (void)full.profile();  // throws on non-strict rankings
  }
}

/// Parses the sectioned `key = value` format. Unknown sections or keys,
/// duplicates and malformed values are errors reported with line numbers.
inline ExperimentConfig parse_config(std::istream& is, const std::string& origin = "<config>") {
  using namespace config_detail;
  ExperimentConfig c;
  std::map<std::string, const Field*> index;
  for (const auto& f : fields()) index[f.section + "." + f.key] = &f;
  std::map<std::string, int> seen;
  std::vector<std::vector<double>> aff_rows;
  PreferenceSpec prefs;
  bool has_aff = false, has_prefs = false;

  std::string section;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> known = {"scenario", "radio",   "reward",
                                                     "features", "training", "dqn",
                                                     "sweep",    "run",     "affinity",
                                                     "preferences"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail("key `" + key + "` outside any section");
    const std::string full = section + "." + key;
    if (seen.count(full))
      fail("duplicate key `" + key + "` (first set on line " + std::to_string(seen[full]) + ")");
    seen[full] = lineno;
    try {
      int idx = 0;
      if (section == "affinity") {
        if (!indexed_key(key, "row", idx)) fail("unknown key `" + key + "` in [affinity]");
        put_indexed(aff_rows, idx, parse_list<double>(value, parse_double));
        has_aff = true;
      } else if (section == "preferences") {
        has_prefs = true;
        if (indexed_key(key, "user", idx))
          put_indexed(prefs.user_prefs, idx, parse_list<int>(value, parse_int));
        else if (indexed_key(key, "expert", idx))
          put_indexed(prefs.expert_prefs, idx, parse_list<int>(value, parse_int));
        else if (indexed_key(key, "capacity", idx))
          put_indexed(prefs.capacity, idx, static_cast<int>(parse_int(value)));
        else
          fail("unknown key `" + key + "` in [preferences]");
      } else {
        auto it = index.find(full);
        if (it == index.end()) fail("unknown key `" + key + "` in [" + section + "]");
        it->second->set(c, value);
      }
    } catch (const std::invalid_argument&) {
      fail("cannot parse value `" + value + "` for `" + key + "`");
    } catch (const std::out_of_range&) {
      fail("value `" + value + "` for `" + key + "` is out of range");
    }
  }

  if (has_aff) {
    const int rows = static_cast<int>(aff_rows.size());
    const int cols = rows ? static_cast<int>(aff_rows.front().size()) : 0;
    AffinityMatrix a(rows, cols);
    for (int u = 0; u < rows; ++u) {
      if (static_cast<int>(aff_rows[u].size()) != cols)
        throw ConfigError(origin + ": [affinity] row." + std::to_string(u) +
                          " is missing or has the wrong length");
      for (int e = 0; e < cols; ++e) a(u, e) = aff_rows[u][e];
    }
    c.affinity = a;
  }
  if (has_prefs) c.preferences = prefs;
  try {
    validate(c);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  return parse_config(is, path);
}

/// Writes every key, so the output reparses to an equal config.
inline std::string dump_config(const ExperimentConfig& c) {
  using namespace config_detail;
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(c) << '\n';
  }
  if (c.affinity) {
    os << "\n[affinity]\n";
    for (Eigen::Index u = 0; u < c.affinity->rows(); ++u) {
      os << "row." << u << " =";
      for (Eigen::Index e = 0; e < c.affinity->cols(); ++e)
        os << ' ' << fmt_double((*c.affinity)(u, e));
      os << '\n';
    }
  }
  if (c.preferences) {
    auto itos = [](int x) { return std::to_string(x); };
    os << "\n[preferences]\n";
    const auto& p = *c.preferences;
    for (std::size_t u = 0; u < p.user_prefs.size(); ++u)
      os << "user." << u << " = " << join(p.user_prefs[u], itos, " ") << '\n';
    for (std::size_t e = 0; e < p.expert_prefs.size(); ++e)
      os << "expert." << e << " = " << join(p.expert_prefs[e], itos, " ") << '\n';
    for (std::size_t e = 0; e < p.capacity.size(); ++e)
      os << "capacity." << e << " = " << p.capacity[e] << '\n';
  }
  return os.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace diffmatch
