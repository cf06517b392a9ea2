#include "filmnet/thickness_fit.hpp"

#include <cmath>

#include "filmnet/errors.hpp"

namespace filmnet {

double spectra_residual_rms(const OpticalSpectra& simulated, const OpticalSpectra& measured, double weight_R,
                            double weight_T) {
  if (simulated.R.size() != measured.R.size() || simulated.T.size() != measured.T.size()) {
    throw ShapeError("residual needs spectra on one grid");
  }
  double sr = 0.0, st = 0.0;
  for (std::size_t i = 0; i < simulated.R.size(); ++i) {
    const double dr = simulated.R[i] - measured.R[i];
    const double dt = simulated.T[i] - measured.T[i];
    sr += dr * dr;
    st += dt * dt;
  }
  const double n = static_cast<double>(simulated.R.size());
  return std::sqrt((weight_R * sr + weight_T * st) / ((weight_R + weight_T) * n));
}

std::size_t first_minimum_index(std::span<const double> values) {
  if (values.empty()) throw DomainError("no values to minimize");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  return best;
}

FitResult grid_search_thickness(const OpticalSpectra& measured, const RefractiveIndexSpectrum& index,
                                const SubstrateConfig& substrate, const FitOptions& options) {
  if (!(options.d_min_nm > 0.0) || !(options.d_max_nm > options.d_min_nm) || !(options.step_nm > 0.0)) {
    throw DomainError("thickness search needs 0 < d_min < d_max and step > 0");
  }
  if (!(measured.grid == index.grid)) throw ShapeError("measured spectra and index must share a grid");

  const auto count = static_cast<std::size_t>(std::floor((options.d_max_nm - options.d_min_nm) / options.step_nm + 1e-9)) + 1;
  FitResult r;
  r.candidates.resize(count);
  r.residual_curve.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double d = options.d_min_nm + options.step_nm * static_cast<double>(i);
    const OpticalSpectra sim = film_on_substrate_rt(index, d, substrate, index.grid);
    r.candidates[i] = d;
    r.residual_curve[i] = spectra_residual_rms(sim, measured, options.weight_R, options.weight_T);
  }
  const std::size_t best = first_minimum_index(r.residual_curve);
  r.best_d = r.candidates[best];
  r.residual_rms = r.residual_curve[best];
  return r;
}

}  // namespace filmnet
