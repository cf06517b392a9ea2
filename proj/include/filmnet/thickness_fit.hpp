#pragma once

// Exhaustive thickness search over the forward model: the ML-free baseline
// every learned prediction can be checked against.

#include <span>
#include <vector>

#include "filmnet/optics.hpp"

namespace filmnet {

struct FitOptions {
  double d_min_nm = 10.0;
  double d_max_nm = 2010.0;
  double step_nm = 1.0;
  double weight_R = 1.0;
  double weight_T = 1.0;
};

struct FitResult {
  double best_d = 0.0;
  double residual_rms = 0.0;
  std::vector<double> candidates;
  std::vector<double> residual_curve;
};

/// Weighted RMS of the concatenated R and T residuals of a simulated film of
/// thickness d against `measured`.
double spectra_residual_rms(const OpticalSpectra& simulated, const OpticalSpectra& measured, double weight_R = 1.0,
                            double weight_T = 1.0);

/// Index of the first smallest value (earliest wins ties). Throws DomainError
/// on an empty range.
std::size_t first_minimum_index(std::span<const double> values);

/// Evaluates every candidate d_min, d_min + step, … ≤ d_max and returns the
/// minimizer (ties go to the smaller thickness).
FitResult grid_search_thickness(const OpticalSpectra& measured, const RefractiveIndexSpectrum& index,
                                const SubstrateConfig& substrate, const FitOptions& options = {});

}  // namespace filmnet
