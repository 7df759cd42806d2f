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

// Command-line driver: converge, sweep, oracle and sample subcommands.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "diffmatch.hpp"

namespace fs = std::filesystem;
using namespace diffmatch;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "experiment config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "run a single seed instead of the configured list");
  cmd->add_option("--out", o.out, "output directory (overrides DIFFMATCH_OUT and the config)");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) c.seeds = {*o.seed};
  validate(c);
  return c;
}

std::string prepare_out(const ExperimentConfig& c, const CommonOptions& o, const std::string& cmd) {
  const std::string dir = resolve_output_dir(c, o.out);
  fs::create_directories(dir);
  write_manifest(dir, c, cmd);
  return dir;
}

int read_meta_steps(const std::string& checkpoint) {
  std::ifstream is(checkpoint + ".meta");
  if (!is) throw ConfigError("missing checkpoint sidecar " + checkpoint + ".meta");
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    if (config_detail::trim(line.substr(0, eq)) == "steps")
      return std::stoi(config_detail::trim(line.substr(eq + 1)));
  }
  throw ConfigError("checkpoint sidecar lacks 'steps'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-based user/expert matching for rate-splitting downlinks"};
  app.require_subcommand(1);

  CommonOptions conv_o, sweep_o, oracle_o, sample_o;
  auto* conv = app.add_subcommand("converge", "train GDM and DQN side by side, log reward curves");
  add_common(conv, conv_o);
  auto* sweep = app.add_subcommand("sweep", "train per-T models and evaluate across the SNR grid");
  add_common(sweep, sweep_o);
  auto* oracle = app.add_subcommand("oracle", "small-instance checks against exact oracles");
  add_common(oracle, oracle_o);
  bool corrupt = false, strict = false;
  oracle->add_flag("--corrupt-weights", corrupt, "negative control: feed sign-flipped weights");
  oracle->add_flag("--strict", strict, "exit with status 3 when any check fails");
  auto* sample = app.add_subcommand("sample", "sample one matching from a saved denoiser");
  add_common(sample, sample_o);
  std::string checkpoint;
  double snr_db = 10.0;
  sample->add_option("--checkpoint", checkpoint, "denoiser checkpoint")->required();
  sample->add_option("--snr", snr_db, "SNR in dB for the sampled drop");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*conv) {
      auto c = resolve(conv_o);
      auto dir = prepare_out(c, conv_o, "converge");
      auto res = run_convergence(c, dir);
      for (const auto& m : res.methods) {
        double last = 0.0;
        for (const auto& curve : res.curves[m]) last += smooth(curve, c.training.smoothing_window).back();
        std::printf("%-8s final smoothed reward %.4f\n", m.c_str(), last / res.curves[m].size());
      }
      std::printf("wrote %s/convergence.csv\n", dir.c_str());
    } else if (*sweep) {
      auto c = resolve(sweep_o);
      auto dir = prepare_out(c, sweep_o, "sweep");
      auto res = run_snr_sweep(c, dir);
      std::printf("mean QoE per user\n%8s", "snr_db");
      for (const auto& m : res.methods) std::printf(" %10s", m.c_str());
      std::printf("\n");
      for (std::size_t k = 0; k < res.snr_grid.size(); ++k) {
        std::printf("%8.1f", res.snr_grid[k]);
        for (const auto& m : res.methods) std::printf(" %10.4f", res.qoe_norm(m, k));
        std::printf("\n");
      }
      if (res.oracle_is_proxy) std::printf("oracle column is a local-search proxy\n");
      std::printf("wrote %s/sweep.csv\n", dir.c_str());
    } else if (*oracle) {
      auto c = resolve(oracle_o);
      auto dir = prepare_out(c, oracle_o, "oracle");
      OracleSuiteOptions opt;
      opt.corrupt_weights = corrupt;
      auto checks = run_oracle_suite(c, opt, dir);
      bool all = true;
      for (const auto& ck : checks) {
        std::printf("%-32s %s  %s\n", ck.name.c_str(), ck.passed ? "pass" : "FAIL", ck.detail.c_str());
        all = all && ck.passed;
      }
      std::printf("%s\n", all ? "all checks passed" : "some checks FAILED");
      if (strict && !all) return 3;
    } else if (*sample) {
      auto c = resolve(sample_o);
      const std::uint64_t seed = c.seeds.front();
      const Scenario s = make_scenario(c, seed);
      GdmModel model;
      model.params = load_checkpoint(checkpoint);
      model.schedule = build_schedule(read_meta_steps(checkpoint), c.training.schedule);
      if (model.params.dims != denoiser_dims(s, c.training.hidden))
        throw ConfigError("checkpoint shape does not match the configured scenario");
      Rng drop_rng = make_rng(seed, kEvalStream);
      const auto chan = sample_drop(s, snr_db, drop_rng);
      Rng rng = make_rng(seed, kGdmTrainStream);
      const auto m = model.sample(s, chan, rng);
      std::cout << to_grid(m);
      const auto ev = evaluate(s, chan, m);
      std::cout << RewardBreakdown::csv_header() << '\n' << ev.reward << '\n';
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
