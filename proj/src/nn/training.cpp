#include "filmnet/nn/training.hpp"

#include <cmath>
#include <numeric>

#include "filmnet/errors.hpp"
#include "filmnet/seeds.hpp"

namespace filmnet::nn {

template <typename S>
Mat<S> spectra_to_input(const OpticalSpectra& s) {
  const auto len = static_cast<Eigen::Index>(s.R.size());
  Mat<S> x(2, len);
  for (Eigen::Index i = 0; i < len; ++i) {
    x(0, i) = static_cast<S>(s.R[static_cast<std::size_t>(i)]);
    x(1, i) = static_cast<S>(s.T[static_cast<std::size_t>(i)]);
  }
  return x;
}

template <typename S>
TrainingSet<S> make_training_set(const std::vector<Sample>& samples, const NetworkConfig& config) {
  TrainingSet<S> t;
  const auto n = static_cast<Eigen::Index>(samples.size());
  const bool mtl = config.mode == TaskMode::mtl;
  t.d.resize(1, n);
  if (mtl) {
    t.n.resize(config.in_length, n);
    t.k.resize(config.in_length, n);
  }
  t.inputs.reserve(samples.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const Sample& s = samples[static_cast<std::size_t>(j)];
    if (static_cast<int>(s.spectra.R.size()) != config.in_length) {
      throw ShapeError("sample spectra length does not match the network input length");
    }
    t.inputs.push_back(spectra_to_input<S>(s.spectra));
    t.d(0, j) = static_cast<S>(normalize_thickness(s.d_nm));
    if (mtl) {
      for (int i = 0; i < config.in_length; ++i) {
        t.n(i, j) = static_cast<S>(s.index.n[static_cast<std::size_t>(i)]);
        t.k(i, j) = static_cast<S>(s.index.k[static_cast<std::size_t>(i)]);
      }
    }
  }
  return t;
}

template <typename S>
Batch<S> gather_batch(const TrainingSet<S>& data, std::span<const std::size_t> indices, const NetworkConfig& config) {
  Batch<S> b;
  const auto n = static_cast<Eigen::Index>(indices.size());
  b.d.resize(1, n);
  const bool mtl = config.mode == TaskMode::mtl;
  if (mtl) {
    b.n.resize(data.n.rows(), n);
    b.k.resize(data.k.rows(), n);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]);
    b.inputs.push_back(data.inputs[static_cast<std::size_t>(src)]);
    b.d(0, j) = data.d(0, src);
    if (mtl) {
      b.n.col(j) = data.n.col(src);
      b.k.col(j) = data.k.col(src);
    }
  }
  return b;
}

namespace {

// Targets only (inputs left empty) for the frozen-trunk path.
template <typename S>
Batch<S> gather_targets(const TrainingSet<S>& data, std::span<const std::size_t> indices, const NetworkConfig& config,
                        const Mat<S>& features, Mat<S>& batch_features) {
  Batch<S> b;
  const auto n = static_cast<Eigen::Index>(indices.size());
  b.d.resize(1, n);
  batch_features.resize(features.rows(), n);
  const bool mtl = config.mode == TaskMode::mtl;
  if (mtl) {
    b.n.resize(data.n.rows(), n);
    b.k.resize(data.k.rows(), n);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]);
    batch_features.col(j) = features.col(src);
    b.d(0, j) = data.d(0, src);
    if (mtl) {
      b.n.col(j) = data.n.col(src);
      b.k.col(j) = data.k.col(src);
    }
  }
  return b;
}

}  // namespace

template <typename S>
double evaluate_loss(const ModelWeights<S>& w, const TrainingSet<S>& data, std::size_t batch_size) {
  if (data.size() == 0) return 0.0;
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Batch<S> b = gather_batch(data, idx, w.config);
    total += loss(forward(w, b, false, 0), b, w.config).total * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(data.size());
}

template <typename S>
TrainResult train(ModelWeights<S>& w, const TrainSchedule& schedule, const TrainingSet<S>& data,
                  const TrainOptions& options, const TrainingSet<S>* validation) {
  if (data.size() == 0) throw DomainError("cannot train on an empty dataset");
  if (schedule.batch_size == 0) throw ConfigError("batch size must be positive");

  TrainResult result;
  const AdaGradOptions opt{schedule.learning_rate, schedule.epsilon, options.freeze_conv};
  Parameters<S> grads = Parameters<S>::zeros(w.config);

  Mat<S> features;
  if (options.freeze_conv) features = extract_features(w, data.inputs);

  std::vector<std::size_t> order(data.size());
  Mat<S> batch_features;
  for (std::uint32_t e = 0; e < schedule.epochs; ++e) {
    const std::uint32_t epoch = w.epoch;
    if (schedule.is_reset_epoch(epoch)) reset_accumulators(w);

    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(derive_seed(options.seed, {0x45504F43ULL, epoch}));
    portable_shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += schedule.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + schedule.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const std::uint64_t dropout_seed = derive_seed(options.seed, {0x44524F50ULL, epoch, batch_index});
      grads.set_zero();
      LossBreakdown l;
      if (options.freeze_conv) {
        const Batch<S> targets = gather_targets(data, idx, w.config, features, batch_features);
        l = heads_forward_backward(w, batch_features, targets, true, dropout_seed, grads);
      } else {
        const Batch<S> b = gather_batch(data, idx, w.config);
        l = forward_backward(w, b, true, dropout_seed, grads, true);
      }
      if (!std::isfinite(l.total)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(batch_index));
      }
      adagrad_step(w, grads, opt);
      ++result.steps;
      epoch_loss += l.total * static_cast<double>(idx.size());
    }
    ++w.epoch;
    if (!w.params.all_finite()) {
      throw NumericError("non-finite weights after epoch " + std::to_string(w.epoch));
    }

    EpochReport report;
    report.epoch = w.epoch;
    report.train_loss = epoch_loss / static_cast<double>(data.size());
    result.loss_trace.push_back(report.train_loss);
    if (validation && validation->size() > 0) {
      report.validation_loss = evaluate_loss(w, *validation, schedule.batch_size);
      result.validation_trace.push_back(*report.validation_loss);
    }
    if (options.on_epoch) options.on_epoch(report);
  }
  return result;
}

namespace {

template <typename S>
TrainResult train_in(ModelWeights<double>& w, const TrainSchedule& schedule, const std::vector<Sample>& data,
                     const TrainOptions& options, const std::vector<Sample>* validation) {
  ModelWeights<S> work = cast_weights<S>(w);
  const TrainingSet<S> set = make_training_set<S>(data, w.config);
  std::optional<TrainingSet<S>> val;
  if (validation && !validation->empty()) val = make_training_set<S>(*validation, w.config);
  TrainResult r = train(work, schedule, set, options, val ? &*val : nullptr);

  if constexpr (std::is_same_v<S, double>) {
    w = std::move(work);
  } else {
    ModelWeights<double> back = cast_weights<double>(work);
    if (options.freeze_conv) {
      back.params.conv_w = w.params.conv_w;
      back.params.conv_b = w.params.conv_b;
      back.accum.conv_w = w.accum.conv_w;
      back.accum.conv_b = w.accum.conv_b;
    }
    w = std::move(back);
  }
  return r;
}

template <typename S>
ModelOutputs predict_in(const ModelWeights<double>& w, const std::vector<Mat<S>>& inputs, std::size_t batch_size) {
  const ModelWeights<S> work = cast_weights<S>(w);
  ModelOutputs out;
  const bool mtl = w.config.mode == TaskMode::mtl;
  for (std::size_t start = 0; start < inputs.size(); start += batch_size) {
    const std::size_t end = std::min(inputs.size(), start + batch_size);
    const std::vector<Mat<S>> chunk(inputs.begin() + static_cast<std::ptrdiff_t>(start),
                                    inputs.begin() + static_cast<std::ptrdiff_t>(end));
    const Predictions<S> p = heads_forward(work, extract_features(work, chunk), false, 0);
    for (Eigen::Index j = 0; j < p.out[kHeadD].cols(); ++j) {
      out.d_nm.push_back(denormalize_thickness(static_cast<double>(p.out[kHeadD](0, j))));
      if (mtl) {
        const auto& pn = p.out[kHeadN];
        const auto& pk = p.out[kHeadK];
        out.n.emplace_back(pn.rows());
        out.k.emplace_back(pk.rows());
        for (Eigen::Index i = 0; i < pn.rows(); ++i) {
          out.n.back()[static_cast<std::size_t>(i)] = static_cast<double>(pn(i, j));
          out.k.back()[static_cast<std::size_t>(i)] = static_cast<double>(pk(i, j));
        }
      }
    }
  }
  return out;
}

template <typename S>
ModelOutputs predict_dispatch(const ModelWeights<double>& w, const std::vector<OpticalSpectra>& spectra,
                              std::size_t batch_size) {
  std::vector<Mat<S>> inputs;
  inputs.reserve(spectra.size());
  for (const OpticalSpectra& s : spectra) inputs.push_back(spectra_to_input<S>(s));
  return predict_in<S>(w, inputs, batch_size);
}

}  // namespace

TrainResult train_model(ModelWeights<double>& w, const TrainSchedule& schedule, const std::vector<Sample>& data,
                        const TrainOptions& options, const std::vector<Sample>* validation) {
  if (data.empty()) throw DomainError("cannot train on an empty dataset");
  if (schedule.epochs == 0) return {};
  return schedule.precision == Precision::f64 ? train_in<double>(w, schedule, data, options, validation)
                                              : train_in<float>(w, schedule, data, options, validation);
}

ModelOutputs predict_spectra(const ModelWeights<double>& w, const std::vector<OpticalSpectra>& spectra,
                             Precision precision, std::size_t batch_size) {
  return precision == Precision::f64 ? predict_dispatch<double>(w, spectra, batch_size)
                                     : predict_dispatch<float>(w, spectra, batch_size);
}

ModelOutputs predict_samples(const ModelWeights<double>& w, const std::vector<Sample>& samples, Precision precision,
                             std::size_t batch_size) {
  std::vector<OpticalSpectra> spectra;
  spectra.reserve(samples.size());
  for (const Sample& s : samples) spectra.push_back(s.spectra);
  return predict_spectra(w, spectra, precision, batch_size);
}

#define FILMNET_INSTANTIATE(S)                                                                              \
  template Mat<S> spectra_to_input<S>(const OpticalSpectra&);                                              \
  template TrainingSet<S> make_training_set<S>(const std::vector<Sample>&, const NetworkConfig&);           \
  template Batch<S> gather_batch<S>(const TrainingSet<S>&, std::span<const std::size_t>, const NetworkConfig&); \
  template double evaluate_loss<S>(const ModelWeights<S>&, const TrainingSet<S>&, std::size_t);            \
  template TrainResult train<S>(ModelWeights<S>&, const TrainSchedule&, const TrainingSet<S>&, const TrainOptions&, \
                                const TrainingSet<S>*);

FILMNET_INSTANTIATE(double)
FILMNET_INSTANTIATE(float)

#undef FILMNET_INSTANTIATE

}  // namespace filmnet::nn
