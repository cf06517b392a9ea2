#include "filmnet/nn/network.hpp"

#include <cmath>

#include "filmnet/errors.hpp"
#include "filmnet/seeds.hpp"

namespace filmnet::nn {

namespace {

template <typename S>
using ArrayMap = Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>;

// Column t of `col` stacks X(:, t + tap) for tap = 0..K-1.
template <typename S>
void im2col(const Mat<S>& x, int kernel, Mat<S>& col) {
  const Eigen::Index channels = x.rows();
  const Eigen::Index len = x.cols() - kernel + 1;
  col.resize(channels * kernel, len);
  for (Eigen::Index t = 0; t < len; ++t) {
    for (int tap = 0; tap < kernel; ++tap) col.col(t).segment(tap * channels, channels) = x.col(t + tap);
  }
}

template <typename S>
void col2im_add(const Mat<S>& col, int kernel, Mat<S>& dx) {
  const Eigen::Index channels = dx.rows();
  for (Eigen::Index t = 0; t < col.cols(); ++t) {
    for (int tap = 0; tap < kernel; ++tap) dx.col(t + tap) += col.col(t).segment(tap * channels, channels);
  }
}

template <typename S>
struct TrunkCache {
  std::vector<Mat<S>> act;     // post-ReLU conv output per stage
  std::vector<Mat<S>> pooled;  // pooled output per stage
  std::vector<IndexMat> argmax;
};

template <typename S>
void check_input(const NetworkConfig& c, const Mat<S>& x) {
  if (x.rows() != c.in_channels || x.cols() != c.in_length) {
    throw ShapeError("network input must be " + std::to_string(c.in_channels) + " x " +
                     std::to_string(c.in_length) + ", got " + std::to_string(x.rows()) + " x " +
                     std::to_string(x.cols()));
  }
}

// Returns the flattened trunk output; fills `cache` when given.
template <typename S>
void trunk_forward(const ModelWeights<S>& w, const Mat<S>& input, TrunkCache<S>* cache,
                   Eigen::Ref<Vec<S>> features) {
  const NetworkConfig& c = w.config;
  check_input(c, input);
  Mat<S> col, z, pooled;
  IndexMat argmax;
  const Mat<S>* x = &input;
  Mat<S> carry;
  if (cache) {
    cache->act.resize(c.conv.size());
    cache->pooled.resize(c.conv.size());
    cache->argmax.resize(c.conv.size());
  }
  for (std::size_t s = 0; s < c.conv.size(); ++s) {
    im2col(*x, c.conv[s].kernel, col);
    z.noalias() = w.params.conv_w[s] * col;
    z.colwise() += w.params.conv_b[s];
    z = z.cwiseMax(S(0));
    layers::max_pool_forward(z, c.conv[s].pool, pooled, argmax);
    if (cache) {
      cache->act[s] = z;
      cache->pooled[s] = pooled;
      cache->argmax[s] = argmax;
    }
    carry.swap(pooled);
    x = &carry;
  }
  features = Eigen::Map<const Vec<S>>(x->data(), x->size());
}

template <typename S>
struct HeadCache {
  std::vector<Mat<S>> inputs;  // input of every dense layer
  std::vector<Mat<S>> masks;   // dropout mask of every hidden layer (train mode)
  Mat<S> output;
};

template <typename S>
void head_forward(const ModelWeights<S>& w, int head, const Mat<S>& features, bool train_mode,
                  std::uint64_t dropout_seed, HeadCache<S>& cache) {
  const auto& ws = w.params.head_w[head];
  const auto& bs = w.params.head_b[head];
  const std::size_t layers_n = ws.size();
  cache.inputs.assign(layers_n, Mat<S>());
  cache.masks.assign(layers_n, Mat<S>());
  cache.inputs[0] = features;
  for (std::size_t i = 0; i < layers_n; ++i) {
    Mat<S> z = ws[i] * cache.inputs[i];
    z.colwise() += bs[i];
    if (i + 1 == layers_n) {
      cache.output = std::move(z);
      break;
    }
    z = z.cwiseMax(S(0));
    if (train_mode && w.config.dropout > 0.0) {
      cache.masks[i] = layers::dropout_mask<S>(z.rows(), z.cols(), w.config.dropout,
                                                derive_seed(dropout_seed, {static_cast<std::uint64_t>(head), i}));
      z.array() *= cache.masks[i].array();
    }
    cache.inputs[i + 1] = std::move(z);
  }
}

// Backpropagates d(loss)/d(output) through one head. Returns d(loss)/d(features).
template <typename S>
Mat<S> head_backward(const ModelWeights<S>& w, int head, const HeadCache<S>& cache, Mat<S> grad_out,
                     Parameters<S>& grads) {
  const auto& ws = w.params.head_w[head];
  Mat<S> dz = std::move(grad_out);
  for (std::size_t i = ws.size(); i-- > 0;) {
    grads.head_w[head][i].noalias() += dz * cache.inputs[i].transpose();
    grads.head_b[head][i] += dz.rowwise().sum();
    Mat<S> dh = ws[i].transpose() * dz;
    if (i == 0) return dh;
    // cache.inputs[i] is relu(z)·mask; positive exactly where both factors pass.
    const Mat<S>& h = cache.inputs[i];
    if (cache.masks[i - 1].size() != 0) {
      dz = (h.array() > S(0)).select(dh.array() * cache.masks[i - 1].array(), S(0));
    } else {
      dz = (h.array() > S(0)).select(dh.array(), S(0));
    }
  }
  return dz;  // unreachable for non-empty heads
}

template <typename S>
void trunk_backward(const ModelWeights<S>& w, const Mat<S>& input, const TrunkCache<S>& cache,
                    const Eigen::Ref<const Vec<S>>& grad_features, Parameters<S>& grads) {
  const NetworkConfig& c = w.config;
  const std::size_t stages = c.conv.size();
  if (stages == 0) return;
  Mat<S> dpooled = Eigen::Map<const Mat<S>>(grad_features.data(), cache.pooled.back().rows(),
                                            cache.pooled.back().cols());
  Mat<S> col, dz, dcol;
  for (std::size_t s = stages; s-- > 0;) {
    const Mat<S>& act = cache.act[s];
    dz = layers::max_pool_backward(dpooled, cache.argmax[s], act.cols());
    dz = (act.array() > S(0)).select(dz.array(), S(0));
    const Mat<S>& x = s == 0 ? input : cache.pooled[s - 1];
    im2col(x, c.conv[s].kernel, col);
    grads.conv_w[s].noalias() += dz * col.transpose();
    grads.conv_b[s] += dz.rowwise().sum();
    if (s == 0) break;
    dcol.noalias() = w.params.conv_w[s].transpose() * dz;
    dpooled.setZero(x.rows(), x.cols());
    col2im_add(dcol, c.conv[s].kernel, dpooled);
  }
}

template <typename S>
void check_targets(const NetworkConfig& c, const Batch<S>& b) {
  const auto n = static_cast<Eigen::Index>(b.size());
  if (b.d.rows() != 1 || b.d.cols() != n) throw ShapeError("thickness targets must be 1 x batch");
  if (c.mode == TaskMode::mtl) {
    for (const Mat<S>* m : {&b.n, &b.k}) {
      if (m->rows() != c.in_length || m->cols() != n) throw ShapeError("n/k targets must be in_length x batch");
    }
  }
}

template <typename S>
const Mat<S>& target_of(const Batch<S>& b, int head) {
  return head == kHeadD ? b.d : head == kHeadN ? b.n : b.k;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

template <typename S>
Parameters<S> Parameters<S>::zeros(const NetworkConfig& c) {
  c.validate();
  Parameters p;
  int channels = c.in_channels;
  for (const ConvStage& s : c.conv) {
    p.conv_w.push_back(Mat<S>::Zero(s.filters, channels * s.kernel));
    p.conv_b.push_back(Vec<S>::Zero(s.filters));
    channels = s.filters;
  }
  for (int h = 0; h < kHeadCount; ++h) {
    if (!c.head_active(h)) continue;
    int in = c.flatten_size();
    for (int width : c.head_widths(h)) {
      p.head_w[h].push_back(Mat<S>::Zero(width, in));
      p.head_b[h].push_back(Vec<S>::Zero(width));
      in = width;
    }
  }
  return p;
}

template <typename S>
std::vector<TensorRef<S>> Parameters<S>::tensors() {
  std::vector<TensorRef<S>> out;
  for (std::size_t i = 0; i < conv_w.size(); ++i) {
    out.push_back({{conv_w[i].data(), static_cast<std::size_t>(conv_w[i].size())}, true});
    out.push_back({{conv_b[i].data(), static_cast<std::size_t>(conv_b[i].size())}, true});
  }
  for (int h = 0; h < kHeadCount; ++h) {
    for (std::size_t i = 0; i < head_w[h].size(); ++i) {
      out.push_back({{head_w[h][i].data(), static_cast<std::size_t>(head_w[h][i].size())}, false});
      out.push_back({{head_b[h][i].data(), static_cast<std::size_t>(head_b[h][i].size())}, false});
    }
  }
  return out;
}

template <typename S>
std::vector<TensorRef<const S>> Parameters<S>::tensors() const {
  std::vector<TensorRef<const S>> out;
  for (auto& t : const_cast<Parameters*>(this)->tensors()) out.push_back({{t.values.data(), t.values.size()}, t.conv});
  return out;
}

template <typename S>
std::size_t Parameters<S>::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.values.size();
  return n;
}

template <typename S>
bool Parameters<S>::all_finite() const {
  for (const auto& t : tensors()) {
    for (S v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template <typename S>
void Parameters<S>::set_zero() {
  for (auto& t : tensors()) std::fill(t.values.begin(), t.values.end(), S(0));
}

ModelWeights<double> init_weights(const NetworkConfig& config, std::uint64_t seed) {
  ModelWeights<double> w;
  w.config = config;
  w.params = Parameters<double>::zeros(config);
  w.accum = Parameters<double>::zeros(config);

  std::uint64_t index = 0;
  auto fill = [&](Mat<double>& m, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    SplitMix64 rng(derive_seed(seed, {0x494E4954ULL, index++}));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-limit, limit);
  };
  int channels = config.in_channels;
  for (std::size_t s = 0; s < config.conv.size(); ++s) {
    const ConvStage& st = config.conv[s];
    fill(w.params.conv_w[s], double(channels) * st.kernel, double(st.filters) * st.kernel);
    channels = st.filters;
  }
  for (int h = 0; h < kHeadCount; ++h) {
    for (auto& m : w.params.head_w[h]) fill(m, double(m.cols()), double(m.rows()));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Layers

namespace layers {

template <typename S>
void max_pool_forward(const Mat<S>& in, int extent, Mat<S>& out, IndexMat& argmax) {
  const Eigen::Index cols = in.cols() / extent;
  out.resize(in.rows(), cols);
  argmax.resize(in.rows(), cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const Eigen::Index base = j * extent;
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      Eigen::Index best = base;
      S value = in(r, base);
      for (Eigen::Index q = 1; q < extent; ++q) {
        if (in(r, base + q) > value) {
          value = in(r, base + q);
          best = base + q;
        }
      }
      out(r, j) = value;
      argmax(r, j) = static_cast<std::int32_t>(best);
    }
  }
}

template <typename S>
Mat<S> max_pool_backward(const Mat<S>& grad_out, const IndexMat& argmax, Eigen::Index in_cols) {
  Mat<S> g = Mat<S>::Zero(grad_out.rows(), in_cols);
  for (Eigen::Index j = 0; j < grad_out.cols(); ++j)
    for (Eigen::Index r = 0; r < grad_out.rows(); ++r) g(r, argmax(r, j)) += grad_out(r, j);
  return g;
}

template <typename S>
Mat<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::uint64_t seed) {
  const double keep = 1.0 - rate;
  const S scale = static_cast<S>(1.0 / keep);
  Mat<S> m(rows, cols);
  SplitMix64 rng(seed);
  S* data = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) data[i] = rng.uniform() < keep ? scale : S(0);
  return m;
}

}  // namespace layers

// ---------------------------------------------------------------------------
// Forward / backward

template <typename S>
Mat<S> extract_features(const ModelWeights<S>& w, const std::vector<Mat<S>>& inputs) {
  Mat<S> features(w.config.flatten_size(), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    trunk_forward<S>(w, inputs[b], nullptr, features.col(static_cast<Eigen::Index>(b)));
  }
  return features;
}

template <typename S>
Predictions<S> heads_forward(const ModelWeights<S>& w, const Mat<S>& features, bool train_mode,
                             std::uint64_t dropout_seed) {
  Predictions<S> p;
  HeadCache<S> cache;
  for (int h = 0; h < kHeadCount; ++h) {
    if (!w.config.head_active(h)) continue;
    head_forward(w, h, features, train_mode, dropout_seed, cache);
    p.out[h] = std::move(cache.output);
  }
  return p;
}

template <typename S>
Predictions<S> forward(const ModelWeights<S>& w, const Batch<S>& batch, bool train_mode, std::uint64_t dropout_seed) {
  return heads_forward(w, extract_features(w, batch.inputs), train_mode, dropout_seed);
}

template <typename S>
LossBreakdown loss(const Predictions<S>& pred, const Batch<S>& batch, const NetworkConfig& config) {
  LossBreakdown out;
  for (int h = 0; h < kHeadCount; ++h) {
    if (!config.head_active(h)) continue;
    const Mat<S>& y = pred.out[h];
    const Mat<S>& t = target_of(batch, h);
    if (y.rows() != t.rows() || y.cols() != t.cols()) throw ShapeError("prediction/target shape mismatch");
    if (y.size() == 0) continue;
    const double sse = (y.template cast<double>() - t.template cast<double>()).squaredNorm();
    out.task[h] = sse / static_cast<double>(y.size());
    out.total += config.loss_weights[h] * out.task[h];
  }
  return out;
}

template <typename S>
LossBreakdown heads_forward_backward(const ModelWeights<S>& w, const Mat<S>& features, const Batch<S>& targets,
                                     bool train_mode, std::uint64_t dropout_seed, Parameters<S>& grads) {
  Mat<S> unused;
  LossBreakdown out;
  HeadCache<S> cache;
  for (int h = 0; h < kHeadCount; ++h) {
    if (!w.config.head_active(h)) continue;
    head_forward(w, h, features, train_mode, dropout_seed, cache);
    const Mat<S>& t = target_of(targets, h);
    const Mat<S> diff = cache.output - t;
    const double count = static_cast<double>(diff.size());
    out.task[h] = diff.template cast<double>().squaredNorm() / count;
    out.total += w.config.loss_weights[h] * out.task[h];
    const S scale = static_cast<S>(2.0 * w.config.loss_weights[h] / count);
    head_backward(w, h, cache, Mat<S>(diff * scale), grads);
  }
  return out;
}

template <typename S>
LossBreakdown forward_backward(const ModelWeights<S>& w, const Batch<S>& batch, bool train_mode,
                               std::uint64_t dropout_seed, Parameters<S>& grads, bool conv_grads) {
  const NetworkConfig& c = w.config;
  check_targets(c, batch);
  const auto n = static_cast<Eigen::Index>(batch.size());
  std::vector<TrunkCache<S>> trunk(conv_grads ? batch.size() : 0);
  Mat<S> features(c.flatten_size(), n);
  for (Eigen::Index b = 0; b < n; ++b) {
    trunk_forward<S>(w, batch.inputs[b], conv_grads ? &trunk[b] : nullptr, features.col(b));
  }

  LossBreakdown out;
  Mat<S> dfeatures = Mat<S>::Zero(features.rows(), n);
  HeadCache<S> cache;
  for (int h = 0; h < kHeadCount; ++h) {
    if (!c.head_active(h)) continue;
    head_forward(w, h, features, train_mode, dropout_seed, cache);
    const Mat<S> diff = cache.output - target_of(batch, h);
    const double count = static_cast<double>(diff.size());
    out.task[h] = diff.template cast<double>().squaredNorm() / count;
    out.total += c.loss_weights[h] * out.task[h];
    const S scale = static_cast<S>(2.0 * c.loss_weights[h] / count);
    dfeatures += head_backward(w, h, cache, Mat<S>(diff * scale), grads);
  }

  if (conv_grads) {
    for (Eigen::Index b = 0; b < n; ++b) trunk_backward<S>(w, batch.inputs[b], trunk[b], dfeatures.col(b), grads);
  }
  return out;
}

template <typename S>
Parameters<S> backward(const ModelWeights<S>& w, const Batch<S>& batch, bool train_mode, std::uint64_t dropout_seed) {
  Parameters<S> grads = Parameters<S>::zeros(w.config);
  forward_backward(w, batch, train_mode, dropout_seed, grads, true);
  return grads;
}

template <typename S>
std::vector<Mat<S>> conv_activations(const ModelWeights<S>& w, const Mat<S>& input) {
  TrunkCache<S> cache;
  Vec<S> features(w.config.flatten_size());
  trunk_forward<S>(w, input, &cache, features);
  return cache.act;
}

// ---------------------------------------------------------------------------
// Optimizer

template <typename S>
void adagrad_step(ModelWeights<S>& w, const Parameters<S>& grads, const AdaGradOptions& opts) {
  auto params = w.params.tensors();
  auto accum = w.accum.tensors();
  const auto g = grads.tensors();
  if (params.size() != g.size()) throw ShapeError("gradient layout does not match the model");
  const S lr = static_cast<S>(opts.learning_rate);
  const S eps = static_cast<S>(opts.epsilon);
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (opts.freeze_conv && params[t].conv) continue;
    if (params[t].values.size() != g[t].values.size()) throw ShapeError("gradient layout does not match the model");
    const auto n = static_cast<Eigen::Index>(params[t].values.size());
    ArrayMap<S> theta(params[t].values.data(), n);
    ArrayMap<S> acc(accum[t].values.data(), n);
    Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> grad(g[t].values.data(), n);
    acc += grad.square();
    theta -= lr * grad / (acc.sqrt() + eps);
  }
}

template <typename S>
void reset_accumulators(ModelWeights<S>& w) {
  w.accum.set_zero();
}

#define FILMNET_INSTANTIATE(S)                                                                                   \
  template struct Parameters<S>;                                                                                \
  template LossBreakdown loss<S>(const Predictions<S>&, const Batch<S>&, const NetworkConfig&);                 \
  template Predictions<S> forward<S>(const ModelWeights<S>&, const Batch<S>&, bool, std::uint64_t);            \
  template Parameters<S> backward<S>(const ModelWeights<S>&, const Batch<S>&, bool, std::uint64_t);            \
  template LossBreakdown forward_backward<S>(const ModelWeights<S>&, const Batch<S>&, bool, std::uint64_t,      \
                                             Parameters<S>&, bool);                                             \
  template Mat<S> extract_features<S>(const ModelWeights<S>&, const std::vector<Mat<S>>&);                      \
  template LossBreakdown heads_forward_backward<S>(const ModelWeights<S>&, const Mat<S>&, const Batch<S>&, bool, \
                                                   std::uint64_t, Parameters<S>&);                              \
  template Predictions<S> heads_forward<S>(const ModelWeights<S>&, const Mat<S>&, bool, std::uint64_t);        \
  template std::vector<Mat<S>> conv_activations<S>(const ModelWeights<S>&, const Mat<S>&);                      \
  template void adagrad_step<S>(ModelWeights<S>&, const Parameters<S>&, const AdaGradOptions&);                 \
  template void reset_accumulators<S>(ModelWeights<S>&);                                                        \
  template void layers::max_pool_forward<S>(const Mat<S>&, int, Mat<S>&, IndexMat&);                            \
  template Mat<S> layers::max_pool_backward<S>(const Mat<S>&, const IndexMat&, Eigen::Index);                   \
  template Mat<S> layers::dropout_mask<S>(Eigen::Index, Eigen::Index, double, std::uint64_t);

FILMNET_INSTANTIATE(double)
FILMNET_INSTANTIATE(float)

#undef FILMNET_INSTANTIATE

}  // namespace filmnet::nn
