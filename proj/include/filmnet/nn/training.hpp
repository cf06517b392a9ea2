#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "filmnet/datagen.hpp"
#include "filmnet/nn/network.hpp"

namespace filmnet::nn {

/// Arithmetic used while training or predicting. Weights are always stored
/// (and checkpointed) in double.
enum class Precision { f64, f32 };

/// Thickness labels are trained as (d − 10)/2000.
inline constexpr double kThicknessOffsetNm = 10.0;
inline constexpr double kThicknessSpanNm = 2000.0;

inline double normalize_thickness(double d_nm) { return (d_nm - kThicknessOffsetNm) / kThicknessSpanNm; }
inline double denormalize_thickness(double t) { return t * kThicknessSpanNm + kThicknessOffsetNm; }

struct TrainSchedule {
  std::uint32_t epochs = 2000;
  std::size_t batch_size = 128;
  double learning_rate = 0.001;
  double epsilon = 1e-8;
  /// AdaGrad accumulators are zeroed before epoch reset_start + k·reset_every
  /// (0-based count of completed epochs), k ≥ 0.
  std::uint32_t reset_start = 150;
  std::uint32_t reset_every = 50;
  Precision precision = Precision::f64;

  bool is_reset_epoch(std::uint32_t completed_epochs) const {
    return reset_every > 0 && completed_epochs >= reset_start && (completed_epochs - reset_start) % reset_every == 0;
  }
};

/// Network-ready copy of a sample list.
template <typename S>
struct TrainingSet {
  std::vector<Mat<S>> inputs;
  Mat<S> d;  ///< 1 × N, normalized
  Mat<S> n;  ///< L × N (multitask only)
  Mat<S> k;

  std::size_t size() const { return inputs.size(); }
};

/// Channel 0 = R, channel 1 = T.
template <typename S>
Mat<S> spectra_to_input(const OpticalSpectra& s);

template <typename S>
TrainingSet<S> make_training_set(const std::vector<Sample>& samples, const NetworkConfig& config);

template <typename S>
Batch<S> gather_batch(const TrainingSet<S>& data, std::span<const std::size_t> indices, const NetworkConfig& config);

struct EpochReport {
  std::uint32_t epoch = 0;  ///< completed epochs after this one, 1-based
  double train_loss = 0.0;
  std::optional<double> validation_loss;
};

struct TrainOptions {
  /// Skip conv arrays in the optimizer. The trunk output is then fixed, so it
  /// is computed once per run.
  bool freeze_conv = false;
  std::uint64_t seed = 0;
  std::function<void(const EpochReport&)> on_epoch;
};

struct TrainResult {
  std::vector<double> loss_trace;
  std::vector<double> validation_trace;
  std::size_t steps = 0;
};

/// Shuffled mini-batch AdaGrad for schedule.epochs epochs, continuing from
/// w.epoch. Throws DomainError on an empty dataset and NumericError on a
/// non-finite loss or weight.
template <typename S>
TrainResult train(ModelWeights<S>& w, const TrainSchedule& schedule, const TrainingSet<S>& data,
                  const TrainOptions& options, const TrainingSet<S>* validation = nullptr);

/// Runs train() in schedule.precision and writes the result back into `w`.
/// Frozen conv arrays are never written back, so they stay bit-identical even
/// when the arithmetic is single precision.
TrainResult train_model(ModelWeights<double>& w, const TrainSchedule& schedule, const std::vector<Sample>& data,
                        const TrainOptions& options, const std::vector<Sample>* validation = nullptr);

/// Mean inference-mode loss over a dataset.
template <typename S>
double evaluate_loss(const ModelWeights<S>& w, const TrainingSet<S>& data, std::size_t batch_size = 128);

struct ModelOutputs {
  std::vector<double> d_nm;             ///< denormalized
  std::vector<std::vector<double>> n;  ///< multitask only
  std::vector<std::vector<double>> k;
};

/// Inference-mode predictions for a list of spectra.
ModelOutputs predict_spectra(const ModelWeights<double>& w, const std::vector<OpticalSpectra>& spectra,
                             Precision precision = Precision::f64, std::size_t batch_size = 128);

ModelOutputs predict_samples(const ModelWeights<double>& w, const std::vector<Sample>& samples,
                             Precision precision = Precision::f64, std::size_t batch_size = 128);

}  // namespace filmnet::nn
