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

#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "diffmatch/scorer.hpp"

namespace dm = diffmatch;
using Eigen::VectorXd;

namespace {

VectorXd random_vector(dm::Rng& rng, int n) {
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = 2.0 * dm::uniform01(rng) - 1.0;
  return x;
}

// Largest relative error between backward() and central differences of
// upstream . forward(x).
double max_fd_error(const dm::ScorerParams& p, const VectorXd& x, const VectorXd& up) {
  const double h = 1e-5;
  auto g = dm::backward(p, x, up);
  dm::ScorerParams q = p;
  auto f = [&] { return up.dot(dm::forward(q, x)); };
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double fp = f();
    param = keep - h;
    const double fm = f();
    param = keep;
    const double numeric = (fp - fm) / (2.0 * h);
    const double denom = std::max(1e-6, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t l = 0; l < q.layers.size(); ++l) {
    for (Eigen::Index i = 0; i < q.layers[l].w.size(); ++i)
      check(q.layers[l].w.data()[i], g.layers[l].w.data()[i]);
    for (Eigen::Index i = 0; i < q.layers[l].b.size(); ++i)
      check(q.layers[l].b[i], g.layers[l].b[i]);
  }
  return worst;
}

}  // namespace

TEST(Forward, ZeroNetGivesZero) {
  auto p = dm::zero_scorer({5, 7, 3});
  EXPECT_EQ(dm::forward(p, VectorXd::Ones(5)), VectorXd::Zero(3));
}

TEST(Forward, IdentityLinearLayer) {
  auto p = dm::zero_scorer({4, 4});
  p.layers[0].w.setIdentity();
  VectorXd x(4);
  x << 0.5, -2.0, 3.0, 0.0;
  EXPECT_EQ(dm::forward(p, x), x);
}

TEST(Forward, DeterministicAndShapeChecked) {
  dm::Rng a = dm::make_rng(1, 0), b = dm::make_rng(1, 0);
  auto p = dm::init_scorer({6, 8, 2}, a);
  auto q = dm::init_scorer({6, 8, 2}, b);
  EXPECT_EQ(p, q);
  VectorXd x = VectorXd::LinSpaced(6, -1.0, 1.0);
  EXPECT_EQ(dm::forward(p, x), dm::forward(q, x));
  EXPECT_THROW(dm::forward(p, VectorXd::Zero(5)), dm::ContractError);
}

TEST(Init, UniformWithinFanInScale) {
  dm::Rng rng = dm::make_rng(2, 0);
  auto p = dm::init_scorer({25, 16, 4}, rng);
  EXPECT_LE(p.layers[0].w.cwiseAbs().maxCoeff(), std::sqrt(1.0 / 25));
  EXPECT_LE(p.layers[1].w.cwiseAbs().maxCoeff(), std::sqrt(1.0 / 16));
  EXPECT_GT(p.layers[0].w.cwiseAbs().maxCoeff(), 0.8 * std::sqrt(1.0 / 25));
  EXPECT_EQ(p.layers[0].w.rows(), 16);
  EXPECT_EQ(p.layers[1].w.cols(), 16);
}

TEST(Backward, LinearLayerGradientIsOuterProduct) {
  dm::Rng rng = dm::make_rng(3, 0);
  auto p = dm::init_scorer({3, 1}, rng);
  VectorXd x(3);
  x << 1.5, -0.5, 2.0;
  auto g = dm::backward(p, x, VectorXd::Ones(1));
  EXPECT_EQ(g.layers[0].w, x.transpose());
  EXPECT_EQ(g.layers[0].b[0], 1.0);
}

TEST(Backward, ZeroUpstreamGivesZeroGrads) {
  dm::Rng rng = dm::make_rng(4, 0);
  auto p = dm::init_scorer({8, 16, 4}, rng);
  auto g = dm::backward(p, random_vector(rng, 8), VectorXd::Zero(4));
  EXPECT_EQ(dm::grad_norm(g), 0.0);
}

TEST(Backward, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    dm::Rng rng = dm::make_rng(seed, 5);
    auto p = dm::init_scorer({8, 16, 4}, rng);
    EXPECT_LT(max_fd_error(p, random_vector(rng, 8), random_vector(rng, 4)), 1e-4)
        << "seed " << seed;
  }
}

TEST(Adam, ZeroGradsLeaveParamsUnchanged) {
  dm::Rng rng = dm::make_rng(6, 0);
  auto p = dm::init_scorer({4, 3, 2}, rng);
  auto before = p;
  auto s = dm::make_opt_state(p);
  dm::adam_step(p, dm::zeros_like(p), s);
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto p = dm::zero_scorer({2, 2});
  auto g = dm::zeros_like(p);
  g.layers[0].w.setConstant(0.37);
  g.layers[0].b.setConstant(-5.0);
  auto s = dm::make_opt_state(p, dm::AdamConfig{0.01});
  dm::adam_step(p, g, s);
  // m_hat = g, v_hat = g^2, so each step is lr * sign(g) up to epsilon.
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(p.layers[0].w.data()[i], -0.01, 1e-9);
  for (Eigen::Index i = 0; i < 2; ++i) EXPECT_NEAR(p.layers[0].b[i], 0.01, 1e-9);
}

TEST(Adam, RejectsNonFiniteGradients) {
  auto p = dm::zero_scorer({2, 1});
  auto g = dm::zeros_like(p);
  g.layers[0].w(0, 1) = std::nan("");
  auto s = dm::make_opt_state(p);
  EXPECT_THROW(dm::adam_step(p, g, s), dm::TrainingError);
}

TEST(Adam, IdenticalRunsIdenticalTrajectories) {
  auto run = [] {
    dm::Rng rng = dm::make_rng(7, 0);
    auto p = dm::init_scorer({3, 5, 1}, rng);
    auto s = dm::make_opt_state(p);
    for (int i = 0; i < 50; ++i) {
      VectorXd x = random_vector(rng, 3);
      VectorXd err = dm::forward(p, x) - VectorXd::Constant(1, x.sum());
      dm::adam_step(p, dm::backward(p, x, 2.0 * err), s);
    }
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(Training, RegressionLossDropsHundredfold) {
  dm::Rng rng = dm::make_rng(8, 0);
  std::vector<VectorXd> xs;
  std::vector<double> ys;
  for (int i = 0; i < 32; ++i) {
    xs.push_back(random_vector(rng, 3));
    ys.push_back(std::sin(2.0 * xs.back()[0]) + xs.back()[1] * xs.back()[2]);
  }
  auto p = dm::init_scorer({3, 32, 1}, rng);
  auto s = dm::make_opt_state(p, dm::AdamConfig{1e-2});
  auto loss = [&] {
    double l = 0.0;
    for (int i = 0; i < 32; ++i) l += std::pow(dm::forward(p, xs[i])[0] - ys[i], 2) / 32;
    return l;
  };
  const double start = loss();
  for (int step = 0; step < 2000; ++step) {
    auto g = dm::zeros_like(p);
    for (int i = 0; i < 32; ++i) {
      auto acts = dm::forward_trace(p, xs[i]);
      dm::backward_accumulate(p, acts, VectorXd::Constant(1, 2.0 * (acts.back()[0] - ys[i]) / 32),
                              1.0, g);
    }
    dm::adam_step(p, g, s);
  }
  EXPECT_LT(loss(), start / 100.0);
}

TEST(Checkpoint, RoundTripAndSidecar) {
  dm::Rng rng = dm::make_rng(9, 0);
  auto p = dm::init_scorer({5, 4, 3}, rng);
  const auto dir = std::filesystem::temp_directory_path() / "diffmatch_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "net.bin").string();
  dm::save_checkpoint(path, p, {{"steps", "6"}});
  EXPECT_EQ(dm::load_checkpoint(path), p);
  EXPECT_EQ(std::filesystem::file_size(path), 8u * (1 + 3 + 5 * 4 + 4 + 4 * 3 + 3));
  std::ifstream meta(path + ".meta");
  std::string line;
  std::getline(meta, line);
  EXPECT_EQ(line, "steps = 6");
}

TEST(Checkpoint, TruncatedFileIsRejected) {
  dm::Rng rng = dm::make_rng(10, 0);
  auto p = dm::init_scorer({5, 4, 3}, rng);
  const auto dir = std::filesystem::temp_directory_path() / "diffmatch_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "short.bin").string();
  dm::save_checkpoint(path, p);
  std::filesystem::resize_file(path, 40);
  EXPECT_THROW(dm::load_checkpoint(path), dm::ConfigError);
  EXPECT_THROW(dm::load_checkpoint((dir / "missing.bin").string()), dm::ConfigError);
}
