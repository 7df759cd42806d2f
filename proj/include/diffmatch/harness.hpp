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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diffmatch/channel.hpp"
#include "diffmatch/classical.hpp"
#include "diffmatch/config.hpp"
#include "diffmatch/dqn.hpp"
#include "diffmatch/errors.hpp"
#include "diffmatch/gdm.hpp"
#include "diffmatch/matchgraph.hpp"
#include "diffmatch/qoe.hpp"
#include "diffmatch/rng.hpp"
#include "diffmatch/scenario.hpp"
#include "diffmatch/scorer.hpp"

namespace diffmatch {

inline constexpr const char* kCodeVersion = "diffmatch 0.1.0";

// RNG stream identifiers; each (seed, stream) pair is independent.
enum Stream : std::uint64_t {
  kAffinityStream = 1,
  kDropStream = 2,
  kGdmInitStream = 3,
  kGdmTrainStream = 4,
  kDqnInitStream = 5,
  kDqnTrainStream = 6,
  kRandomStream = 7,
  kEvalStream = 8,
  kSnrPickStream = 9,
  kOracleSuiteStream = 10,
};

struct RunRecord {
  std::string method;
  std::uint64_t seed = 0;
  std::string axis;
  double axis_value = 0.0;
  std::string metric;
  double value = 0.0;
};

inline constexpr const char* kRecordHeader = "method,seed,axis,axis_value,metric,value";

inline std::string format_record(const RunRecord& r) {
  return r.method + ',' + std::to_string(r.seed) + ',' + r.axis + ',' +
         config_detail::fmt_double(r.axis_value) + ',' + r.metric + ',' +
         config_detail::fmt_double(r.value);
}

inline void write_records(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << kRecordHeader << '\n';
  for (const auto& r : records) os << format_record(r) << '\n';
}

inline std::vector<RunRecord> read_records(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  std::string line;
  std::getline(is, line);
  if (config_detail::trim(line) != kRecordHeader) throw ConfigError("unexpected CSV header in " + path);
  std::vector<RunRecord> out;
  while (std::getline(is, line)) {
    if (config_detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw ConfigError("malformed CSV row in " + path + ": " + line);
    out.push_back({f[0], std::stoull(f[1]), f[2], std::stod(f[3]), f[4], std::stod(f[5])});
  }
  return out;
}

struct TrainStatsRow {
  int epoch = 0;
  EpochStats stats;
  std::uint64_t seed = 0;
};

inline void write_train_stats(const std::string& path, const std::vector<TrainStatsRow>& rows) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << "epoch,mean_reward,max_reward,grad_norm,seed\n";
  using config_detail::fmt_double;
  for (const auto& r : rows) {
    os << r.epoch << ',' << fmt_double(r.stats.mean_reward) << ','
       << fmt_double(r.stats.max_reward) << ',' << fmt_double(r.stats.grad_norm) << ','
       << r.seed << '\n';
  }
}

/// Scenario for one seed: affinities come from the config when given,
/// otherwise from the seed's affinity stream.
inline Scenario make_scenario(const ExperimentConfig& c, std::uint64_t seed) {
  Scenario s;
  s.num_users = c.scenario.num_users;
  s.num_experts = c.scenario.num_experts;
  s.quota = c.scenario.quota;
  s.radio = c.radio;
  s.weights = c.reward;
  s.features = c.features;
  if (c.affinity) {
    s.affinity = *c.affinity;
  } else {
    Rng rng = make_rng(seed, kAffinityStream);
    s.affinity = sample_affinity(rng, s.num_users, s.num_experts, c.scenario.affinity_lo,
                                 c.scenario.affinity_hi);
  }
  s.validate();
  return s;
}

inline std::string resolve_output_dir(const ExperimentConfig& c, const std::string& cli_out = {}) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("DIFFMATCH_OUT"); env && *env) return env;
  return c.output_dir;
}

inline void write_manifest(const std::string& dir, const ExperimentConfig& c,
                           const std::string& command) {
  std::ofstream os(std::filesystem::path(dir) / "run-manifest.txt");
  os << "command = " << command << '\n';
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump_config(c))));
  os << "config_hash = " << hash << '\n';
  os << "code_version = " << kCodeVersion << '\n';
  os << "seeds = " << config_detail::join(c.seeds, [](std::uint64_t s) { return std::to_string(s); })
     << '\n';
}

/// A trained denoiser together with its noise schedule.
struct GdmModel {
  ScorerParams params;
  NoiseSchedule schedule;

  MatchingState sample(const Scenario& s, const ChannelRealization& chan, Rng& rng) const {
    return sample_matching(params, condition_vector(s, chan), schedule, s.num_users,
                           s.num_experts, s.quota, rng)
        .first;
  }
};

/// Trainer state for one GDM run; `epoch` consumes one drop.
class GdmTrainer {
 public:
  GdmTrainer(const Scenario& s, const TrainingConfig& t, int steps, std::uint64_t seed)
      : batch_(t.batch), rng_(make_rng(seed, kGdmTrainStream + 1000 * steps)) {
    Rng init = make_rng(seed, kGdmInitStream + 1000 * steps);
    model_.params = init_scorer(denoiser_dims(s, t.hidden), init);
    model_.schedule = build_schedule(steps, t.schedule);
    opt_ = make_opt_state(model_.params, AdamConfig{t.learning_rate});
  }

  EpochStats epoch(const Scenario& s, const ChannelRealization& chan) {
    DropSampler fixed = [&chan](Rng&) { return chan; };
    return train_epoch(model_.params, opt_, s, fixed, batch_, model_.schedule, rng_);
  }

  const GdmModel& model() const { return model_; }

 private:
  int batch_;
  Rng rng_;
  GdmModel model_;
  OptState opt_;
};

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

inline double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1) / v.size());
}

// Trailing moving average over `window` epochs.
inline std::vector<double> smooth(const std::vector<double>& v, int window) {
  std::vector<double> out(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v[i];
    if (i >= static_cast<std::size_t>(window)) acc -= v[i - window];
    out[i] = acc / std::min<std::size_t>(i + 1, window);
  }
  return out;
}

/// Per-epoch mean rewards, indexed [method][seed index][epoch].
struct ConvergenceResult {
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::vector<std::vector<double>>> curves;
  std::vector<RunRecord> records;   // per-epoch batch means
  std::vector<RunRecord> smoothed;  // trailing moving average of the above
};

/// Trains GDM (largest configured T) and DQN side by side at the convergence
/// SNR; every method sees the same drop in a given epoch. The random baseline
/// is the mean of `batch` fresh random matchings on that drop.
inline ConvergenceResult run_convergence(const ExperimentConfig& c, const std::string& out_dir = {}) {
  validate(c);
  const int steps = *std::max_element(c.training.steps.begin(), c.training.steps.end());
  const std::string gdm_tag = "gdm";
  ConvergenceResult res;
  res.methods = {gdm_tag, "dqn", "random"};
  res.seeds = c.seeds;
  std::vector<TrainStatsRow> gdm_stats, dqn_stats;

  for (std::size_t si = 0; si < c.seeds.size(); ++si) {
    const std::uint64_t seed = c.seeds[si];
    const Scenario s = make_scenario(c, seed);
    Rng drop_rng = make_rng(seed, kDropStream);
    Rng dqn_init = make_rng(seed, kDqnInitStream);
    Rng dqn_rng = make_rng(seed, kDqnTrainStream);
    Rng random_rng = make_rng(seed, kRandomStream);
    GdmTrainer gdm(s, c.training, steps, seed);
    DqnAgent dqn(s, c.dqn, dqn_init);
    ChannelRealization fixed;
    if (c.training.fixed_drop) fixed = sample_drop(s, c.training.convergence_snr_db, drop_rng);

    std::map<std::string, std::vector<double>> curve;
    for (int ep = 0; ep < c.training.epochs; ++ep) {
      ChannelRealization chan =
          c.training.fixed_drop ? fixed : sample_drop(s, c.training.convergence_snr_db, drop_rng);
      EpochStats g = gdm.epoch(s, chan);
      EpochStats d = dqn.train_epoch(s, chan, c.training.batch, ep, c.training.epochs, dqn_rng);
      double r = 0.0;
      for (int b = 0; b < c.training.batch; ++b)
        r += evaluate_total(s, chan, random_matching(random_rng, s.num_users, s.num_experts, s.quota));
      r /= c.training.batch;
      curve[gdm_tag].push_back(g.mean_reward);
      curve["dqn"].push_back(d.mean_reward);
      curve["random"].push_back(r);
      gdm_stats.push_back({ep, g, seed});
      dqn_stats.push_back({ep, d, seed});
    }
    for (const auto& m : res.methods) {
      auto sm = smooth(curve[m], c.training.smoothing_window);
      for (int ep = 0; ep < c.training.epochs; ++ep) {
        res.records.push_back({m, seed, "epoch", static_cast<double>(ep), "mean_reward", curve[m][ep]});
        res.smoothed.push_back({m, seed, "epoch", static_cast<double>(ep), "mean_reward_smooth",
                                sm[ep]});
      }
      res.curves[m].push_back(curve[m]);
    }
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      save_checkpoint((std::filesystem::path(out_dir) /
                       ("gdm_T" + std::to_string(steps) + "_seed" + std::to_string(seed) + ".bin"))
                          .string(),
                      gdm.model().params,
                      {{"steps", std::to_string(steps)},
                       {"seed", std::to_string(seed)},
                       {"epochs", std::to_string(c.training.epochs)},
                       {"batch", std::to_string(c.training.batch)},
                       {"learning_rate", config_detail::fmt_double(c.training.learning_rate)}});
    }
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_records((dir / "convergence.csv").string(), res.records);
    write_records((dir / "convergence_smoothed.csv").string(), res.smoothed);
    write_train_stats((dir / "train_stats_gdm.csv").string(), gdm_stats);
    write_train_stats((dir / "train_stats_dqn.csv").string(), dqn_stats);
  }
  return res;
}

/// Best matching found by steepest single-row moves from `start`.
inline MatchingState local_search(const Scenario& s, const ChannelRealization& chan,
                                  MatchingState m, int max_passes = 20) {
  const auto subsets = quota_subsets(s.num_experts, s.quota);
  double best = evaluate_total(s, chan, m);
  for (int pass = 0; pass < max_passes; ++pass) {
    bool improved = false;
    for (int u = 0; u < s.num_users; ++u) {
      MatchingState keep = m;
      for (const auto& sub : subsets) {
        MatchingState t = m;
        t.clear_row(u);
        for (int e : sub) t.set(u, e, true);
        double v = evaluate_total(s, chan, t);
        if (v > best + 1e-12) {
          best = v;
          keep = std::move(t);
          improved = true;
        }
      }
      m = std::move(keep);
    }
    if (!improved) break;
  }
  return m;
}

inline MatchingState greedy_for(const Scenario& s, const ChannelRealization& chan) {
  return greedy_matching(
      [&](const MatchingState& m, int rows) { return evaluate_prefix(s, chan, m, rows); },
      s.num_users, s.num_experts, s.quota);
}

inline MatchingState affinity_topk(const Scenario& s) {
  WeightMatrix w(s.num_users, std::vector<double>(s.num_experts));
  for (int u = 0; u < s.num_users; ++u)
    for (int e = 0; e < s.num_experts; ++e) w[u][e] = s.affinity(u, e);
  return max_weight_assignment(w, s.quota);
}

struct OracleChoice {
  MatchingState matching;
  bool is_proxy = false;
};

/// Exact optimum by enumeration when tractable, otherwise the best of local
/// searches started from the greedy and the affinity top-k matchings.
inline OracleChoice oracle_matching(const Scenario& s, const ChannelRealization& chan) {
  if (feasible_matching_count(s.num_users, s.num_experts, s.quota) <= kBruteForceLimit) {
    auto bf = brute_force_best([&](const MatchingState& m) { return evaluate_total(s, chan, m); },
                               s.num_users, s.num_experts, s.quota);
    return {bf.best, false};
  }
  MatchingState a = local_search(s, chan, greedy_for(s, chan));
  MatchingState b = local_search(s, chan, affinity_topk(s));
  return {evaluate_total(s, chan, b) > evaluate_total(s, chan, a) ? b : a, true};
}

/// Pooled per-drop QoE sums indexed [method][snr index]; samples from all
/// seeds are concatenated in seed order.
struct SweepResult {
  std::vector<double> snr_grid;
  std::vector<std::string> methods;
  std::map<std::string, std::vector<std::vector<double>>> qoe;
  std::map<std::string, std::vector<std::vector<double>>> reward;
  bool oracle_is_proxy = false;
  int num_users = 0;
  std::vector<RunRecord> records;

  double qoe_norm(const std::string& m, std::size_t k) const {
    return mean_of(qoe.at(m)[k]) / num_users;
  }
  double qoe_norm_se(const std::string& m, std::size_t k) const {
    return standard_error(qoe.at(m)[k]) / num_users;
  }
  double qoe_rel_oracle(const std::string& m, std::size_t k) const {
    return mean_of(qoe.at(m)[k]) / mean_of(qoe.at("oracle")[k]);
  }
};

inline std::string gdm_tag(int steps) { return "gdm-T" + std::to_string(steps); }

/// Trains one GDM per configured T and a DQN with the SNR drawn from the
/// grid every epoch, then evaluates every method on `eval_drops` fading
/// realizations reused across all SNR points.
inline SweepResult run_snr_sweep(const ExperimentConfig& c, const std::string& out_dir = {}) {
  validate(c);
  SweepResult res;
  res.snr_grid = c.sweep.grid();
  res.num_users = c.scenario.num_users;
  for (int t : c.training.steps) res.methods.push_back(gdm_tag(t));
  for (const char* m : {"dqn", "random", "greedy", "oracle"}) res.methods.push_back(m);
  for (const auto& m : res.methods) {
    res.qoe[m].assign(res.snr_grid.size(), {});
    res.reward[m].assign(res.snr_grid.size(), {});
  }
  const auto& grid = res.snr_grid;

  for (std::uint64_t seed : c.seeds) {
    const Scenario s = make_scenario(c, seed);
    std::vector<GdmTrainer> gdms;
    for (int t : c.training.steps) gdms.emplace_back(s, c.training, t, seed);
    Rng dqn_init = make_rng(seed, kDqnInitStream);
    Rng dqn_rng = make_rng(seed, kDqnTrainStream);
    DqnAgent dqn(s, c.dqn, dqn_init);
    Rng drop_rng = make_rng(seed, kDropStream);
    Rng snr_rng = make_rng(seed, kSnrPickStream);
    for (int ep = 0; ep < c.training.epochs; ++ep) {
      double snr = grid[uniform_index(snr_rng, static_cast<int>(grid.size()))];
      ChannelRealization chan = sample_drop(s, snr, drop_rng);
      for (auto& g : gdms) g.epoch(s, chan);
      dqn.train_epoch(s, chan, c.training.batch, ep, c.training.epochs, dqn_rng);
    }

    std::map<std::string, std::vector<std::vector<double>>> q_seed, r_seed;
    for (const auto& m : res.methods) {
      q_seed[m].assign(grid.size(), {});
      r_seed[m].assign(grid.size(), {});
    }
    for (int i = 0; i < c.sweep.eval_drops; ++i) {
      const std::uint64_t cell = derive_seed(seed, static_cast<std::uint64_t>(i));
      Rng fade_rng = make_rng(cell, kEvalStream);
      const ChannelRealization fading = sample_drop(s, grid.front(), fade_rng);
      Rng rand_rng = make_rng(cell, kRandomStream);
      const MatchingState rand_m = random_matching(rand_rng, s.num_users, s.num_experts, s.quota);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const ChannelRealization chan = with_snr(fading, s.radio, grid[k]);
        auto record = [&](const std::string& m, const MatchingState& match) {
          auto ev = evaluate(s, chan, match);
          q_seed[m][k].push_back(ev.reward.qoe_sum);
          r_seed[m][k].push_back(ev.reward.total);
        };
        for (std::size_t g = 0; g < gdms.size(); ++g) {
          Rng sample_rng = make_rng(cell, kGdmTrainStream + 1000 * c.training.steps[g]);
          record(res.methods[g], gdms[g].model().sample(s, chan, sample_rng));
        }
        Rng act_rng = make_rng(cell, kDqnTrainStream);
        record("dqn", dqn.act(s, chan, act_rng));
        record("random", rand_m);
        record("greedy", greedy_for(s, chan));
        auto oracle = oracle_matching(s, chan);
        res.oracle_is_proxy = oracle.is_proxy;
        record("oracle", oracle.matching);
      }
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double oracle_q = mean_of(q_seed["oracle"][k]);
      for (const auto& m : res.methods) {
        const auto& q = q_seed[m][k];
        res.records.push_back({m, seed, "snr_db", grid[k], "qoe_norm", mean_of(q) / s.num_users});
        res.records.push_back(
            {m, seed, "snr_db", grid[k], "qoe_norm_se", standard_error(q) / s.num_users});
        res.records.push_back({m, seed, "snr_db", grid[k], "qoe_rel_oracle",
                               oracle_q > 0.0 ? mean_of(q) / oracle_q : 0.0});
        res.records.push_back({m, seed, "snr_db", grid[k], "reward_mean", mean_of(r_seed[m][k])});
        auto& pq = res.qoe[m][k];
        pq.insert(pq.end(), q.begin(), q.end());
        auto& pr = res.reward[m][k];
        pr.insert(pr.end(), r_seed[m][k].begin(), r_seed[m][k].end());
      }
      res.records.push_back(
          {"oracle", seed, "snr_db", grid[k], "oracle_is_proxy", res.oracle_is_proxy ? 1.0 : 0.0});
    }
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      for (std::size_t g = 0; g < gdms.size(); ++g) {
        const int t = c.training.steps[g];
        save_checkpoint((std::filesystem::path(out_dir) /
                         ("sweep_gdm_T" + std::to_string(t) + "_seed" + std::to_string(seed) + ".bin"))
                            .string(),
                        gdms[g].model().params,
                        {{"steps", std::to_string(t)}, {"seed", std::to_string(seed)}});
      }
    }
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_records((std::filesystem::path(out_dir) / "sweep.csv").string(), res.records);
  }
  return res;
}

struct OracleCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct OracleSuiteOptions {
  // Negative control: hands max_weight_assignment sign-flipped weights.
  bool corrupt_weights = false;
  int assignment_instances = 50;
  int da_instances = 100;
  int eval_samples = 64;
};

inline double gdm_mean_reward(const GdmModel& model, const Scenario& s,
                              const ChannelRealization& chan, int samples, Rng& rng) {
  double r = 0.0;
  for (int i = 0; i < samples; ++i) r += evaluate_total(s, chan, model.sample(s, chan, rng));
  return r / samples;
}

/// Small-instance cross-checks against exact oracles.
inline std::vector<OracleCheck> run_oracle_suite(const ExperimentConfig& c,
                                                 OracleSuiteOptions opt = {},
                                                 const std::string& out_dir = {}) {
  validate(c);
  const int users = c.scenario.num_users;
  const int experts = c.scenario.num_experts;
  if (users > 4 || experts > 3)
    throw ConfigError("oracle suite needs a small scenario (num_users <= 4, num_experts <= 3)");
  std::vector<OracleCheck> checks;
  Rng rng = make_rng(c.seeds.front(), kOracleSuiteStream);

  {
    OracleCheck ck{"max_weight_vs_brute_force", true, ""};
    int agree = 0;
    for (int i = 0; i < opt.assignment_instances; ++i) {
      const int u = 1 + uniform_index(rng, users);
      const int e = 1 + uniform_index(rng, experts);
      const int q = 1 + uniform_index(rng, e);
      WeightMatrix w(u, std::vector<double>(e));
      for (auto& row : w)
        for (double& x : row) x = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
      WeightMatrix fed = w;
      if (opt.corrupt_weights)
        for (auto& row : fed)
          for (double& x : row) x = -x;
      MatchingState mw = max_weight_assignment(fed, q);
      auto bf = brute_force_best([&](const MatchingState& m) { return assignment_value(m, w); }, u,
                                 e, q);
      if (mw == bf.best && assignment_value(mw, w) == bf.score) ++agree;
    }
    ck.passed = agree == opt.assignment_instances;
    ck.detail = std::to_string(agree) + "/" + std::to_string(opt.assignment_instances) +
                " instances agree";
    checks.push_back(ck);
  }

  {
    OracleCheck ck{"deferred_acceptance_stability", true, ""};
    int stable = 0;
    for (int i = 0; i < opt.da_instances; ++i) {
      PreferenceSpec spec;
      std::vector<int> perm_e(experts), perm_u(users);
      for (int u = 0; u < users; ++u) {
        std::iota(perm_e.begin(), perm_e.end(), 0);
        std::shuffle(perm_e.begin(), perm_e.end(), rng);
        spec.user_prefs.push_back(perm_e);
      }
      for (int e = 0; e < experts; ++e) {
        std::iota(perm_u.begin(), perm_u.end(), 0);
        std::shuffle(perm_u.begin(), perm_u.end(), rng);
        spec.expert_prefs.push_back(perm_u);
        spec.capacity.push_back(1 + uniform_index(rng, users));
      }
      if (is_stable(deferred_acceptance(spec.profile()), spec.profile())) ++stable;
    }
    bool cfg_ok = true;
    if (c.preferences) {
      PreferenceSpec p = *c.preferences;
      if (p.capacity.empty()) p.capacity.assign(experts, 1);
      cfg_ok = is_stable(deferred_acceptance(p.profile()), p.profile());
    }
    ck.passed = stable == opt.da_instances && cfg_ok;
    ck.detail = std::to_string(stable) + "/" + std::to_string(opt.da_instances) +
                " random profiles stable" +
                (c.preferences ? std::string(cfg_ok ? "; config profile stable"
                                                    : "; config profile UNSTABLE")
                               : std::string());
    checks.push_back(ck);
  }

  {
    OracleCheck ck{"greedy_vs_max_weight_additive", true, ""};
    int agree = 0;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
      const int q = 1 + uniform_index(rng, experts);
      WeightMatrix w(users, std::vector<double>(experts));
      for (auto& row : w)
        for (double& x : row) x = uniform01(rng);
      auto g = greedy_matching(
          [&](const MatchingState& m, int) { return assignment_value(m, w); }, users, experts, q);
      if (g == max_weight_assignment(w, q)) ++agree;
    }
    ck.passed = agree == n;
    ck.detail = std::to_string(agree) + "/" + std::to_string(n) + " instances agree";
    checks.push_back(ck);
  }

  {
    OracleCheck ck{"gdm_oracle_gap", true, ""};
    const int steps = *std::max_element(c.training.steps.begin(), c.training.steps.end());
    int good = 0;
    std::ostringstream detail;
    for (std::uint64_t seed : c.seeds) {
      const Scenario s = make_scenario(c, seed);
      Rng drop_rng = make_rng(seed, kDropStream);
      const ChannelRealization chan = sample_drop(s, c.training.convergence_snr_db, drop_rng);
      auto bf = brute_force_best([&](const MatchingState& m) { return evaluate_total(s, chan, m); },
                                 s.num_users, s.num_experts, s.quota);
      GdmTrainer trainer(s, c.training, steps, seed);
      for (int ep = 0; ep < c.training.epochs; ++ep) trainer.epoch(s, chan);
      Rng eval_rng = make_rng(seed, kEvalStream);
      const double got = gdm_mean_reward(trainer.model(), s, chan, opt.eval_samples, eval_rng);
      const bool ok = got >= bf.score - 0.05 * std::abs(bf.score);
      good += ok;
      detail << "seed " << seed << ": " << config_detail::fmt_double(got) << " vs "
             << config_detail::fmt_double(bf.score) << (ok ? "" : " (short)") << "; ";
    }
    const int need = static_cast<int>(std::ceil(0.8 * c.seeds.size()));
    ck.passed = good >= need;
    ck.detail = std::to_string(good) + "/" + std::to_string(c.seeds.size()) +
                " seeds within 5% of optimum; " + detail.str();
    checks.push_back(ck);
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(std::filesystem::path(out_dir) / "oracle_report.csv");
    os << "check,status,detail\n";
    for (const auto& ck : checks)
      os << ck.name << ',' << (ck.passed ? "pass" : "fail") << ",\"" << ck.detail << "\"\n";
  }
  return checks;
}

}  // namespace diffmatch
