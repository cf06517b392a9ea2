#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "filmnet/nn/network.hpp"
#include "filmnet/seeds.hpp"

namespace testing {

using filmnet::nn::Batch;
using filmnet::nn::Mat;
using filmnet::nn::NetworkConfig;

/// Random inputs in [0, 1) and random targets for every head.
inline Batch<double> random_batch(const NetworkConfig& c, std::size_t size, std::uint64_t seed) {
  filmnet::SplitMix64 rng(seed);
  Batch<double> b;
  for (std::size_t i = 0; i < size; ++i) {
    Mat<double> x(c.in_channels, c.in_length);
    for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = rng.uniform();
    b.inputs.push_back(x);
  }
  const auto n = static_cast<Eigen::Index>(size);
  b.d = Mat<double>(1, n);
  for (Eigen::Index j = 0; j < n; ++j) b.d(0, j) = rng.uniform();
  if (c.mode == filmnet::nn::TaskMode::mtl) {
    b.n = Mat<double>(c.in_length, n);
    b.k = Mat<double>(c.in_length, n);
    for (Eigen::Index j = 0; j < b.n.size(); ++j) b.n.data()[j] = rng.uniform(1.0, 3.0);
    for (Eigen::Index j = 0; j < b.k.size(); ++j) b.k.data()[j] = rng.uniform(0.0, 1.0);
  }
  return b;
}

/// Tiny network: 2 channels × 8 positions, 2 conv filters.
inline NetworkConfig toy_config(filmnet::nn::TaskMode mode = filmnet::nn::TaskMode::stl) {
  NetworkConfig c;
  c.in_length = 8;
  c.conv = {{3, 2, 2}};
  c.d_head = {4, 1};
  c.n_head = {4, 8};
  c.k_head = {4, 8};
  c.mode = mode;
  return c;
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst = 0.0;
};

// Central differences over every parameter; a parameter passes when
// |analytic − numeric| ≤ 1e-4·max(|analytic|, |numeric|) or both are below
// 1e-9 in magnitude difference.
inline GradCheck finite_difference_check(filmnet::nn::ModelWeights<double> w, const Batch<double>& batch, bool train_mode,
                                  std::uint64_t seed) {
  const filmnet::nn::Parameters<double> analytic = filmnet::nn::backward(w, batch, train_mode, seed);
  const auto a = analytic.tensors();
  auto p = w.params.tensors();
  GradCheck out;
  const double h = 1e-5;
  for (std::size_t t = 0; t < p.size(); ++t) {
    for (std::size_t i = 0; i < p[t].values.size(); ++i) {
      const double keep = p[t].values[i];
      p[t].values[i] = keep + h;
      const double up = filmnet::nn::loss(filmnet::nn::forward(w, batch, train_mode, seed), batch, w.config).total;
      p[t].values[i] = keep - h;
      const double down = filmnet::nn::loss(filmnet::nn::forward(w, batch, train_mode, seed), batch, w.config).total;
      p[t].values[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double an = a[t].values[i];
      const double diff = std::abs(an - numeric);
      const double scale = std::max(std::abs(an), std::abs(numeric));
      ++out.checked;
      if (diff > 1e-9 && diff > 1e-4 * scale) ++out.failed;
      if (scale > 0) out.worst = std::max(out.worst, diff / scale);
    }
  }
  return out;
}

// Every parameter random, biases included: zero biases put pre-activations
// exactly on the rectifier kink wherever a whole input window is dead.
inline filmnet::nn::ModelWeights<double> random_weights(const NetworkConfig& c, std::uint64_t seed) {
  auto w = filmnet::nn::init_weights(c, seed);
  filmnet::SplitMix64 rng(filmnet::derive_seed(seed, {1}));
  for (auto& t : w.params.tensors()) {
    for (double& v : t.values) v = rng.uniform(-0.6, 0.6);
  }
  return w;
}

}  // namespace testing
