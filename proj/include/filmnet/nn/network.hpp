#pragma once

// 1-D convolutional regressor from (R, T) to film thickness, with optional
// n(λ) and k(λ) heads sharing the convolutional trunk. Forward pass,
// backpropagation and AdaGrad are written out by hand for this fixed
// architecture family. Everything is templated on the scalar type: double is
// the reference path, float the fast path for long runs.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "filmnet/nn/config.hpp"

namespace filmnet::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
using IndexMat = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>;

template <typename S>
struct TensorRef {
  std::span<S> values;
  bool conv = false;
};

/// Trainable arrays. Conv weights are filters × (in_channels·kernel) with
/// column tap·in_channels + channel; dense weights are out × in.
template <typename S>
struct Parameters {
  std::vector<Mat<S>> conv_w;
  std::vector<Vec<S>> conv_b;
  std::array<std::vector<Mat<S>>, kHeadCount> head_w;
  std::array<std::vector<Vec<S>>, kHeadCount> head_b;

  /// Correctly shaped, all zero. Inactive heads stay empty.
  static Parameters zeros(const NetworkConfig& config);

  /// Every array in declaration order: conv stages (w, b), then the d, n and
  /// k heads layer by layer (w, b).
  std::vector<TensorRef<S>> tensors();
  std::vector<TensorRef<const S>> tensors() const;

  std::size_t size() const;
  bool all_finite() const;
  void set_zero();
};

template <typename S>
struct ModelWeights {
  NetworkConfig config;
  Parameters<S> params;
  Parameters<S> accum;  ///< AdaGrad squared-gradient sums
  std::uint32_t epoch = 0;
};

/// Glorot-uniform weights (±sqrt(6/(fan_in + fan_out))), zero biases, zero
/// accumulators. Deterministic in `seed`.
ModelWeights<double> init_weights(const NetworkConfig& config, std::uint64_t seed);

template <typename T, typename S>
ModelWeights<T> cast_weights(const ModelWeights<S>& w) {
  ModelWeights<T> out;
  out.config = w.config;
  out.epoch = w.epoch;
  auto cast_params = [](const Parameters<S>& p) {
    Parameters<T> q;
    for (const auto& m : p.conv_w) q.conv_w.push_back(m.template cast<T>());
    for (const auto& v : p.conv_b) q.conv_b.push_back(v.template cast<T>());
    for (int h = 0; h < kHeadCount; ++h) {
      for (const auto& m : p.head_w[h]) q.head_w[h].push_back(m.template cast<T>());
      for (const auto& v : p.head_b[h]) q.head_b[h].push_back(v.template cast<T>());
    }
    return q;
  };
  out.params = cast_params(w.params);
  out.accum = cast_params(w.accum);
  return out;
}

/// Inputs are in_channels × in_length per sample (row 0 = R, row 1 = T).
/// Targets: d is 1 × B normalized thickness; n and k are in_length × B and
/// only read in multitask mode.
template <typename S>
struct Batch {
  std::vector<Mat<S>> inputs;
  Mat<S> d;
  Mat<S> n;
  Mat<S> k;

  std::size_t size() const { return inputs.size(); }
};

/// Outputs per head; inactive heads are 0 × 0.
template <typename S>
struct Predictions {
  std::array<Mat<S>, kHeadCount> out;
};

struct LossBreakdown {
  double total = 0.0;
  std::array<double, kHeadCount> task{0.0, 0.0, 0.0};
};

/// Mean squared error per task, combined with config.loss_weights.
template <typename S>
LossBreakdown loss(const Predictions<S>& pred, const Batch<S>& batch, const NetworkConfig& config);

/// conv → ReLU → max-pool per stage, flatten, then each active head's dense
/// chain (ReLU + dropout on hidden layers in train mode, linear output).
template <typename S>
Predictions<S> forward(const ModelWeights<S>& w, const Batch<S>& batch, bool train_mode, std::uint64_t dropout_seed);

/// Gradient of the loss with respect to every parameter. Uses the same
/// dropout masks as forward() with the same seed.
template <typename S>
Parameters<S> backward(const ModelWeights<S>& w, const Batch<S>& batch, bool train_mode, std::uint64_t dropout_seed);

/// Forward and backward in one pass, accumulating into `grads` (which must be
/// zero-initialized by the caller). Conv gradients are skipped when
/// `conv_grads` is false.
template <typename S>
LossBreakdown forward_backward(const ModelWeights<S>& w, const Batch<S>& batch, bool train_mode,
                               std::uint64_t dropout_seed, Parameters<S>& grads, bool conv_grads = true);

/// Flattened trunk output, flatten_size() × B. Dropout never touches the trunk,
/// so this is independent of train mode.
template <typename S>
Mat<S> extract_features(const ModelWeights<S>& w, const std::vector<Mat<S>>& inputs);

/// Head-only variant of forward_backward operating on precomputed features;
/// used when the trunk is frozen.
template <typename S>
LossBreakdown heads_forward_backward(const ModelWeights<S>& w, const Mat<S>& features, const Batch<S>& targets,
                                     bool train_mode, std::uint64_t dropout_seed, Parameters<S>& grads);

template <typename S>
Predictions<S> heads_forward(const ModelWeights<S>& w, const Mat<S>& features, bool train_mode,
                             std::uint64_t dropout_seed);

/// Post-ReLU conv output of every stage (filters × conv length), for one sample.
template <typename S>
std::vector<Mat<S>> conv_activations(const ModelWeights<S>& w, const Mat<S>& input);

struct AdaGradOptions {
  double learning_rate = 0.001;
  double epsilon = 1e-8;
  bool freeze_conv = false;
};

/// accum += g²; θ −= lr·g/(sqrt(accum) + eps), elementwise. Conv arrays are
/// left untouched (values and accumulators) when freeze_conv is set.
template <typename S>
void adagrad_step(ModelWeights<S>& w, const Parameters<S>& grads, const AdaGradOptions& opts);

/// Zeroes the AdaGrad accumulators; parameter values are untouched.
template <typename S>
void reset_accumulators(ModelWeights<S>& w);

/// Rectifier, max-pool and dropout primitives, exposed for isolated tests.
namespace layers {

/// Non-overlapping max pool along columns with remainder dropped. argmax
/// holds the winning column (first maximum on ties).
template <typename S>
void max_pool_forward(const Mat<S>& in, int extent, Mat<S>& out, IndexMat& argmax);

/// Routes every pooled gradient to its argmax position in a zero matrix of
/// `in_cols` columns.
template <typename S>
Mat<S> max_pool_backward(const Mat<S>& grad_out, const IndexMat& argmax, Eigen::Index in_cols);

/// Inverted dropout mask: 0 with probability `rate`, 1/(1 − rate) otherwise.
template <typename S>
Mat<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::uint64_t seed);

}  // namespace layers

}  // namespace filmnet::nn
