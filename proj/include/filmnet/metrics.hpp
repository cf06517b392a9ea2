#pragma once

// Evaluation criteria: within-threshold accuracy, MAPE, wavelength-averaged
// n/k accuracy, forward-model reconstruction residuals and conv activation
// maps.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "filmnet/nn/network.hpp"
#include "filmnet/optics.hpp"

namespace filmnet {

/// Per-sample relative deviations |pred − actual|/actual. Throws ShapeError on
/// length mismatch and DomainError on a non-positive actual.
std::vector<double> relative_deviations(std::span<const double> preds, std::span<const double> actuals);

/// Fraction of samples with relative deviation ≤ threshold (inclusive).
double within_deviation_accuracy(std::span<const double> preds, std::span<const double> actuals,
                                 double threshold = 0.10);

/// Mean absolute percentage error, in percent.
double mape(std::span<const double> preds, std::span<const double> actuals);

struct AccuracyReport {
  double fraction_within = 0.0;
  double mape = 0.0;
  std::vector<double> deviations;
};

AccuracyReport accuracy_report(std::span<const double> preds, std::span<const double> actuals,
                               double threshold = 0.10);

/// Wavelength average of |pred − actual|/max(|actual|, floor).
double spectrum_deviation(std::span<const double> pred, std::span<const double> actual, double floor = 1e-3);

/// Fraction of spectra whose spectrum_deviation is ≤ threshold.
double spectrum_accuracy(const std::vector<std::vector<double>>& preds, const std::vector<std::vector<double>>& actuals,
                         double threshold = 0.10, double floor = 1e-3);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< population standard deviation
  std::size_t count = 0;
};

MeanStd mean_std(std::span<const double> values);

struct ReconstructionResidual {
  std::vector<double> dR;  ///< reconstructed − actual
  std::vector<double> dT;
  double rms = 0.0;        ///< over the concatenated R and T residuals
};

ReconstructionResidual reconstruction_residual(double d_nm, const RefractiveIndexSpectrum& index,
                                               const OpticalSpectra& actual, const SubstrateConfig& substrate);

struct ActivationMaps {
  /// Selected filter indices per conv stage, ascending.
  std::vector<std::vector<int>> filters;
  /// Rows are the selected filters' post-ReLU conv outputs.
  std::vector<nn::Mat<double>> maps;
  /// Stages where fewer filters exist than requested.
  std::vector<std::size_t> clamped_stages;
};

ActivationMaps activation_maps(const nn::ModelWeights<double>& w, const OpticalSpectra& sample,
                               int filters_per_layer, std::uint64_t seed);

/// One CSV per stage (`activations_layer<i>.csv`, 1-based): header
/// `filter,0,1,…`, then one row per selected filter.
std::vector<std::filesystem::path> write_activation_csvs(const std::filesystem::path& dir, const ActivationMaps& maps);

/// Measured and ensemble-mean predicted thickness (nm) of the six deposited
/// films used as a metrics fixture.
struct FilmPair {
  double measured_nm;
  double predicted_nm;
};

std::span<const FilmPair> deposition_films();

}  // namespace filmnet
