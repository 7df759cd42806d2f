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

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diffmatch/errors.hpp"
#include "diffmatch/rng.hpp"

namespace diffmatch {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DenseLayer {
  MatrixXd w;  // out x in
  VectorXd b;
};

/// Fully-connected network: tanh on hidden layers, linear output. Gradients
/// use the same type, so `layers` of a gradient mirrors the parameters.
struct ScorerParams {
  std::vector<int> dims;
  std::vector<DenseLayer> layers;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }

  friend bool operator==(const ScorerParams& a, const ScorerParams& b) {
    if (a.dims != b.dims) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i)
      if (a.layers[i].w != b.layers[i].w || a.layers[i].b != b.layers[i].b) return false;
    return true;
  }
};

using ScorerGrads = ScorerParams;

inline ScorerParams zero_scorer(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ConfigError("a scorer needs at least an input and output size");
  for (int d : dims)
    if (d < 1) throw ConfigError("layer sizes must be positive");
  ScorerParams p;
  p.dims = dims;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    p.layers.push_back({MatrixXd::Zero(dims[i + 1], dims[i]), VectorXd::Zero(dims[i + 1])});
  return p;
}

// Weights and biases uniform in +-sqrt(1 / fan_in).
inline ScorerParams init_scorer(const std::vector<int>& dims, Rng& rng) {
  ScorerParams p = zero_scorer(dims);
  for (auto& l : p.layers) {
    double scale = std::sqrt(1.0 / static_cast<double>(l.w.cols()));
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (Eigen::Index i = 0; i < l.w.size(); ++i) l.w.data()[i] = dist(rng);
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b[i] = dist(rng);
  }
  return p;
}

inline ScorerGrads zeros_like(const ScorerParams& p) { return zero_scorer(p.dims); }

namespace detail {
inline void check_input(const ScorerParams& p, const VectorXd& x) {
  if (x.size() != p.input_dim())
    throw ContractError("scorer expects input of length " + std::to_string(p.input_dim()) +
                        ", got " + std::to_string(x.size()));
}
}  // namespace detail

// Activations of every layer; front() is the input, back() the output.
inline std::vector<VectorXd> forward_trace(const ScorerParams& p, const VectorXd& x) {
  detail::check_input(p, x);
  std::vector<VectorXd> acts;
  acts.reserve(p.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    VectorXd z = p.layers[i].w * acts.back() + p.layers[i].b;
    if (i + 1 < p.layers.size()) z = z.array().tanh();
    acts.push_back(std::move(z));
  }
  return acts;
}

inline VectorXd forward(const ScorerParams& p, const VectorXd& x) {
  return forward_trace(p, x).back();
}

/// Accumulates scale * d(upstream . output)/d(params) into `grads`.
inline void backward_accumulate(const ScorerParams& p, const std::vector<VectorXd>& acts,
                                const VectorXd& upstream, double scale, ScorerGrads& grads) {
  if (upstream.size() != p.output_dim()) throw ContractError("upstream gradient has wrong length");
  VectorXd delta = upstream * scale;
  for (std::size_t i = p.layers.size(); i-- > 0;) {
    grads.layers[i].w.noalias() += delta * acts[i].transpose();
    grads.layers[i].b += delta;
    if (i == 0) break;
    VectorXd back = p.layers[i].w.transpose() * delta;
    delta = back.array() * (1.0 - acts[i].array().square());
  }
}

inline ScorerGrads backward(const ScorerParams& p, const VectorXd& x, const VectorXd& upstream) {
  ScorerGrads g = zeros_like(p);
  backward_accumulate(p, forward_trace(p, x), upstream, 1.0, g);
  return g;
}

inline void add_scaled(ScorerParams& dst, const ScorerParams& src, double scale) {
  for (std::size_t i = 0; i < dst.layers.size(); ++i) {
    dst.layers[i].w += scale * src.layers[i].w;
    dst.layers[i].b += scale * src.layers[i].b;
  }
}

inline double grad_norm(const ScorerGrads& g) {
  double s = 0.0;
  for (const auto& l : g.layers) s += l.w.squaredNorm() + l.b.squaredNorm();
  return std::sqrt(s);
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptState {
  ScorerParams m;
  ScorerParams v;
  long step = 0;
  AdamConfig cfg;
};

inline OptState make_opt_state(const ScorerParams& p, AdamConfig cfg = {}) {
  return {zeros_like(p), zeros_like(p), 0, cfg};
}

/// Bias-corrected adaptive-moment descent step on `grads` (a loss gradient).
inline void adam_step(ScorerParams& p, const ScorerGrads& grads, OptState& s) {
  if (grads.dims != p.dims || s.m.dims != p.dims)
    throw ContractError("optimizer state and gradients must mirror the parameters");
  for (std::size_t i = 0; i < grads.layers.size(); ++i) {
    if (!grads.layers[i].w.allFinite() || !grads.layers[i].b.allFinite()) {
      throw TrainingError("non-finite gradient in layer " + std::to_string(i) + " at step " +
                          std::to_string(s.step) + " (norm " + std::to_string(grad_norm(grads)) +
                          ")");
    }
  }
  ++s.step;
  const auto& c = s.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    param.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
  };
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    update(p.layers[i].w, s.m.layers[i].w, s.v.layers[i].w, grads.layers[i].w);
    update(p.layers[i].b, s.m.layers[i].b, s.v.layers[i].b, grads.layers[i].b);
  }
}

// Checkpoint layout, all little-endian: u64 number of dims, u64 dims, then
// per layer the weight matrix row-major (out x in) followed by the bias, as
// f64. Hyperparameters go to a `<path>.meta` text sidecar.
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

inline void save_checkpoint(const std::string& path, const ScorerParams& p,
                            const std::map<std::string, std::string>& hyper = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint " + path);
  auto put_u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  auto put_f64 = [&](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  put_u64(p.dims.size());
  for (int d : p.dims) put_u64(static_cast<std::uint64_t>(d));
  for (const auto& l : p.layers) {
    for (Eigen::Index r = 0; r < l.w.rows(); ++r)
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) put_f64(l.w(r, c));
    for (Eigen::Index r = 0; r < l.b.size(); ++r) put_f64(l.b[r]);
  }
  std::ofstream meta(path + ".meta");
  for (const auto& [k, v] : hyper) meta << k << " = " << v << '\n';
}

inline ScorerParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read checkpoint " + path);
  auto get_u64 = [&] {
    std::uint64_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8)) throw ConfigError("truncated checkpoint " + path);
    return v;
  };
  auto get_f64 = [&] {
    double v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 8)) throw ConfigError("truncated checkpoint " + path);
    return v;
  };
  std::uint64_t n = get_u64();
  if (n < 2 || n > 64) throw ConfigError("corrupt checkpoint header in " + path);
  std::vector<int> dims(n);
  for (auto& d : dims) {
    std::uint64_t v = get_u64();
    if (v == 0 || v > (1u << 24)) throw ConfigError("corrupt layer size in " + path);
    d = static_cast<int>(v);
  }
  ScorerParams p = zero_scorer(dims);
  for (auto& l : p.layers) {
    for (Eigen::Index r = 0; r < l.w.rows(); ++r)
      for (Eigen::Index c = 0; c < l.w.cols(); ++c) l.w(r, c) = get_f64();
    for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b[r] = get_f64();
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw ConfigError("trailing bytes in checkpoint " + path);
  return p;
}

}  // namespace diffmatch
