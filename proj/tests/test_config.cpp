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

#include <gtest/gtest.h>

#include "diffmatch/config.hpp"

namespace dm = diffmatch;

namespace {

std::string error_of(const std::string& text) {
  try {
    dm::parse_config_text(text);
  } catch (const dm::ConfigError& e) {
    return e.what();
  }
  return "";
}

dm::ExperimentConfig random_config(dm::Rng& rng) {
  dm::ExperimentConfig c;
  auto pick = [&](int lo, int hi) { return lo + dm::uniform_index(rng, hi - lo + 1); };
  c.scenario.num_users = pick(1, 8);
  c.scenario.num_experts = pick(1, 5);
  c.scenario.quota = pick(1, std::min(3, c.scenario.num_experts));
  c.radio.snr_db = 10.0;
  c.radio.common_power_fraction = dm::uniform01(rng) * 0.9;
  c.radio.carrier_freq_hz = 1e9 + 1e9 * dm::uniform01(rng);
  c.reward.lambda_energy = dm::uniform01(rng) / 3.0;
  c.reward.r_req = 0.1 + dm::uniform01(rng);
  c.training.epochs = pick(1, 500);
  c.training.learning_rate = std::ldexp(dm::uniform01(rng), -pick(5, 12));
  c.training.steps = {pick(1, 4), pick(5, 9)};
  c.training.hidden = {pick(4, 64)};
  c.training.schedule = pick(0, 1) ? dm::ScheduleKind::kLinear : dm::ScheduleKind::kConstant;
  c.training.fixed_drop = pick(0, 1) == 1;
  c.dqn.epsilon_end = dm::uniform01(rng) * 0.1;
  c.sweep.snr_db_min = -pick(0, 20);
  c.sweep.snr_db_max = pick(0, 40);
  c.seeds = {static_cast<std::uint64_t>(pick(0, 100)), rng() >> 2};
  c.output_dir = "runs/out" + std::to_string(pick(0, 9));
  if (pick(0, 1)) {
    dm::Rng a = dm::make_rng(rng(), 0);
    c.affinity = dm::sample_affinity(a, c.scenario.num_users, c.scenario.num_experts);
  }
  if (pick(0, 1)) {
    dm::PreferenceSpec p;
    for (int u = 0; u < c.scenario.num_users; ++u) {
      std::vector<int> r(c.scenario.num_experts);
      std::iota(r.begin(), r.end(), 0);
      std::shuffle(r.begin(), r.end(), rng);
      p.user_prefs.push_back(r);
    }
    for (int e = 0; e < c.scenario.num_experts; ++e) {
      std::vector<int> r(c.scenario.num_users);
      std::iota(r.begin(), r.end(), 0);
      std::shuffle(r.begin(), r.end(), rng);
      p.expert_prefs.push_back(r);
      p.capacity.push_back(pick(1, 3));
    }
    c.preferences = p;
  }
  return c;
}

}  // namespace

TEST(Config, EmptyFileIsDefaults) {
  auto c = dm::parse_config_text("");
  EXPECT_EQ(c, dm::ExperimentConfig{});
  EXPECT_EQ(c.scenario.num_users, 15);
  EXPECT_EQ(c.scenario.num_experts, 6);
  EXPECT_EQ(c.training.epochs, 200);
  EXPECT_EQ(c.training.steps, (std::vector<int>{3, 6}));
  EXPECT_EQ(c.sweep.grid().size(), 9u);
  EXPECT_EQ(c.sweep.grid().front(), -10.0);
  EXPECT_EQ(c.sweep.grid().back(), 30.0);
}

TEST(Config, DescendingSnrGridIsRejected) {
  auto msg = error_of("[sweep]\nsnr_db_max = -20\n");
  EXPECT_NE(msg.find("snr"), std::string::npos) << msg;
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_NE(error_of("# comment\n[scenario]\nnum_userz = 3\n").find(":3:"), std::string::npos);
  EXPECT_NE(error_of("[scenario]\nquota = 1\nquota = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("[nope]\n").find("unknown section"), std::string::npos);
  EXPECT_NE(error_of("num_users = 3\n").find("outside any section"), std::string::npos);
  EXPECT_NE(error_of("[training]\nepochs = many\n").find(":2:"), std::string::npos);
  EXPECT_NE(error_of("[training]\nfixed_drop = maybe\n").find("fixed_drop"), std::string::npos);
  EXPECT_NE(error_of("[run]\nseeds =\n").find("seeds"), std::string::npos);
  EXPECT_NE(error_of("[scenario]\nquota = 4\nnum_experts = 5\n").find("quota"), std::string::npos);
}

TEST(Config, CommentsAndWhitespace) {
  auto c = dm::parse_config_text(
      "  [scenario]   # shape\n num_users=4 # trailing\n\nnum_experts = 3\nquota = 1\n"
      "[run]\nseeds = 7, 8 ,9\n");
  EXPECT_EQ(c.scenario.num_users, 4);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{7, 8, 9}));
}

TEST(Config, AffinityAndPreferenceSections) {
  auto c = dm::parse_config_text(
      "[scenario]\nnum_users = 2\nnum_experts = 2\nquota = 1\n"
      "[affinity]\nrow.0 = 0.5 1\nrow.1 = 0.25, 0\n"
      "[preferences]\nuser.0 = 1 0\nuser.1 = 0 1\nexpert.0 = 0 1\nexpert.1 = 1 0\n");
  ASSERT_TRUE(c.affinity.has_value());
  EXPECT_EQ((*c.affinity)(0, 1), 1.0);
  EXPECT_EQ((*c.affinity)(1, 0), 0.25);
  ASSERT_TRUE(c.preferences.has_value());
  EXPECT_EQ(c.preferences->user_prefs[0], (std::vector<int>{1, 0}));
  EXPECT_FALSE(error_of("[scenario]\nnum_users = 2\nnum_experts = 2\nquota = 1\n"
                        "[affinity]\nrow.0 = 0.5 1\n")
                   .empty());
  EXPECT_FALSE(error_of("[scenario]\nnum_users = 1\nnum_experts = 2\nquota = 1\n"
                        "[affinity]\nrow.0 = 0.5 1.5\n")
                   .empty());
  EXPECT_FALSE(error_of("[scenario]\nnum_users = 1\nnum_experts = 2\nquota = 1\n"
                        "[preferences]\nuser.0 = 0 0\nexpert.0 = 0\nexpert.1 = 0\n")
                   .empty());
}

TEST(Config, DumpReparsesToEqualConfig) {
  dm::Rng rng = dm::make_rng(1, 0);
  for (int i = 0; i < 200; ++i) {
    auto c = random_config(rng);
    ASSERT_NO_THROW(dm::validate(c));
    c.radio.snr_db = dm::ScenarioRadio{}.snr_db;  // not a config key
    const std::string text = dm::dump_config(c);
    auto back = dm::parse_config_text(text);
    ASSERT_EQ(back, c) << text;
    ASSERT_EQ(dm::dump_config(back), text);
  }
}

TEST(Config, HashIsFnv1a) {
  EXPECT_EQ(dm::fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(dm::fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Config, ShippedConfigsLoad) {
  const std::string root = DIFFMATCH_SOURCE_DIR;
  auto d = dm::load_config(root + "/configs/default.cfg");
  EXPECT_EQ(d.scenario.num_users, 15);
  auto s = dm::load_config(root + "/configs/small.cfg");
  EXPECT_LE(s.scenario.num_users, 4);
  EXPECT_LE(s.scenario.num_experts, 3);
  EXPECT_THROW(dm::load_config(root + "/configs/missing.cfg"), dm::ConfigError);
}
