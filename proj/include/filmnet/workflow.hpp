#pragma once

// Two-stage transfer protocol: pre-training on simulated materials, partial
// or full retraining on target data, the direct-training baseline, the
// retraining-count sweep and ensemble prediction.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "filmnet/datagen.hpp"
#include "filmnet/metrics.hpp"
#include "filmnet/nn/training.hpp"

namespace filmnet {

enum class Stage { pretrain, retrain_partial, retrain_full, direct };

std::string to_string(Stage s);
/// Accepts the names produced by to_string; throws ConfigError otherwise.
Stage stage_from_string(const std::string& s);

struct ExperimentPlan {
  nn::NetworkConfig network = nn::NetworkConfig::full_scale(nn::TaskMode::stl);
  nn::TrainSchedule schedule;  ///< pretraining and direct training
  nn::TrainSchedule retrain_schedule = [] {
    nn::TrainSchedule s;
    s.epochs = 200;
    return s;
  }();
  std::vector<std::uint64_t> ensemble_seeds{1, 2, 3};
  /// Retraining-spectra counts for the sweep.
  std::vector<std::size_t> sweep_counts{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17};
  std::size_t n_splits = 5;
  std::uint64_t split_seed = 0;
  std::size_t d_per_train = kTransferDPerTrain;
  std::size_t d_per_test = kTargetDPerTest;
  SubstrateConfig substrate;
  /// Arithmetic for evaluation; training uses each schedule's own precision.
  nn::Precision eval_precision = nn::Precision::f64;
  double threshold = 0.10;
  double nk_floor = 1e-3;
};

/// Test-set metrics of one model. n/k accuracies are absent in single-task mode.
struct RunMetrics {
  std::size_t samples = 0;
  double d_accuracy = 0.0;
  double d_mape = 0.0;
  std::optional<double> n_accuracy;
  std::optional<double> k_accuracy;
  std::vector<double> d_pred_nm;
  std::vector<double> d_true_nm;
};

struct RunRecord {
  Stage stage = Stage::pretrain;
  std::size_t split = 0;          ///< split index (0 for pretraining)
  std::uint64_t seed = 0;         ///< training seed
  std::size_t retrain_count = 0;  ///< target spectra used for training
  std::size_t train_samples = 0;
  RunMetrics metrics;
  std::vector<double> loss_trace;
  std::vector<double> validation_trace;
};

struct ExperimentResult {
  std::vector<nn::ModelWeights<double>> checkpoints;
  std::vector<RunRecord> runs;
};

RunMetrics evaluate_model(const nn::ModelWeights<double>& w, const std::vector<Sample>& test, const ExperimentPlan& plan);

/// One training run per ensemble seed from random initialization.
ExperimentResult pretrain(const ExperimentPlan& plan, const DatasetSplit& source);

/// Random-initialized training on target data through the same path as
/// pretrain().
ExperimentResult direct_train(const ExperimentPlan& plan, const DatasetSplit& target);

/// Warm start from `source`. Partial mode freezes the conv trunk; full mode
/// trains everything. A zero-epoch budget returns `source` unchanged;
/// otherwise the optimizer starts fresh (zero accumulators, epoch 0). Throws
/// ShapeError when the checkpoint architecture differs from plan.network.
nn::ModelWeights<double> retrain(const nn::ModelWeights<double>& source, const std::vector<Sample>& train,
                                 Stage mode, const ExperimentPlan& plan, std::uint64_t seed,
                                 nn::TrainResult* trace = nullptr);

/// retrain() of every checkpoint on one target split, evaluated on its test set.
ExperimentResult retrain_ensemble(const std::vector<nn::ModelWeights<double>>& sources, const DatasetSplit& target,
                                  Stage mode, const ExperimentPlan& plan, std::size_t split_index = 0);

/// Seed of target split `index` under `master`.
std::uint64_t split_seed(std::uint64_t master, std::size_t index);

struct SweepRow {
  std::size_t count = 0;
  MeanStd d_accuracy;
  MeanStd d_mape;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<RunRecord> runs;
};

/// For every count: plan.n_splits target splits × every checkpoint. Count 0
/// evaluates the checkpoints as they are on an all-test split. Throws
/// DomainError for a count that leaves no test spectrum.
SweepResult sweep_retrain_count(const std::vector<nn::ModelWeights<double>>& checkpoints,
                                const std::vector<RefractiveIndexSpectrum>& spectra, Stage mode,
                                const ExperimentPlan& plan);

struct EnsemblePrediction {
  std::vector<double> mean_nm;
  std::vector<double> std_nm;  ///< population standard deviation
  std::vector<std::vector<double>> members_nm;  ///< [checkpoint][sample]
};

/// Throws DomainError without checkpoints and ShapeError on mixed architectures.
EnsemblePrediction ensemble_predict(const std::vector<nn::ModelWeights<double>>& checkpoints,
                                    const std::vector<OpticalSpectra>& spectra,
                                    nn::Precision precision = nn::Precision::f64);

/// Runs grouped by (stage, retrain_count), in first-appearance order.
struct AggregateRow {
  Stage stage = Stage::pretrain;
  std::size_t retrain_count = 0;
  MeanStd d_accuracy;
  MeanStd d_mape;
  std::optional<MeanStd> n_accuracy;
  std::optional<MeanStd> k_accuracy;
};

std::vector<AggregateRow> aggregate_runs(const std::vector<RunRecord>& runs);

/// One row per run: stage, split, seed, retrain_count, train/test sample
/// counts, accuracies as fractions and MAPE in percent (17 significant digits).
void write_runs_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs);
/// Reads back the columns written by write_runs_csv (traces are not stored).
std::vector<RunRecord> read_runs_csv(const std::filesystem::path& path);
/// "mean ± std" cells in percent, one row per aggregate group.
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows);
/// Per-sample predictions of every run: stage, split, seed, count, sample, d_true_nm, d_pred_nm.
void write_predictions_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs);
/// Per-epoch loss traces of every run.
void write_loss_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs);

}  // namespace filmnet
