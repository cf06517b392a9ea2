#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "filmnet/errors.hpp"
#include "filmnet/seeds.hpp"
#include "filmnet/thickness_fit.hpp"

using namespace filmnet;

namespace {
const WavelengthGrid kGrid = WavelengthGrid::canonical();

OpticalSpectra simulate(const RefractiveIndexSpectrum& index, double d) {
  return film_on_substrate_rt(index, d, SubstrateConfig{}, kGrid);
}
}  // namespace

TEST_CASE("recovers a lattice thickness exactly") {
  const auto index = evaluate_spectrum({50.0, 2.0, 3.0, 1.5, 1.0}, kGrid);
  const auto fit = grid_search_thickness(simulate(index, 500.0), index, SubstrateConfig{});
  CHECK(fit.best_d == 500.0);
  CHECK(fit.residual_rms <= 1e-9);
  CHECK(fit.candidates.size() == 2001);
  CHECK(fit.candidates.front() == 10.0);
  CHECK(fit.candidates.back() == 2010.0);
  CHECK(fit.residual_rms == *std::min_element(fit.residual_curve.begin(), fit.residual_curve.end()));
}

TEST_CASE("range boundary") {
  const auto index = evaluate_spectrum({120.0, 1.0, 4.0, 2.0, 1.0}, kGrid);
  CHECK(grid_search_thickness(simulate(index, 10.0), index, SubstrateConfig{}).best_d == 10.0);
}

TEST_CASE("off-lattice thickness within one step") {
  SplitMix64 rng(8);
  const auto nodes = sample_parameter_grid(ParameterGridSpec{}, 5, 8);
  for (const auto& p : nodes) {
    const auto index = evaluate_spectrum(p, kGrid);
    const double d = rng.uniform(10.0, 2010.0);
    const auto fit = grid_search_thickness(simulate(index, d), index, SubstrateConfig{});
    CHECK(std::abs(fit.best_d - d) <= 1.0);
  }
}

TEST_CASE("wrong material fits worse") {
  const auto right = evaluate_spectrum({50.0, 2.0, 3.0, 1.5, 1.0}, kGrid);
  const auto wrong = evaluate_spectrum({150.0, 4.0, 5.0, 2.5, 1.0}, kGrid);
  const auto measured = simulate(right, 730.0);
  FitOptions opt;
  opt.step_nm = 2.0;
  const auto a = grid_search_thickness(measured, right, SubstrateConfig{}, opt);
  const auto b = grid_search_thickness(measured, wrong, SubstrateConfig{}, opt);
  CHECK(b.residual_rms > a.residual_rms);
}

TEST_CASE("ties go to the smaller thickness") {
  CHECK(first_minimum_index(std::vector<double>{3.0, 1.0, 2.0, 1.0}) == 1);
  CHECK(first_minimum_index(std::vector<double>{0.0, 0.0}) == 0);
  CHECK(first_minimum_index(std::vector<double>{5.0}) == 0);
  CHECK_THROWS_AS(first_minimum_index(std::vector<double>{}), DomainError);

  // A film index-matched to air leaves the residual flat up to rounding.
  const RefractiveIndexSpectrum air{kGrid, std::vector<double>(651, 1.0), std::vector<double>(651, 0.0)};
  FitOptions opt;
  opt.d_min_nm = 40.0;
  opt.d_max_nm = 60.0;
  const auto fit = grid_search_thickness(simulate(air, 55.0), air, SubstrateConfig{}, opt);
  for (double r : fit.residual_curve) CHECK(r < 1e-14);
}

TEST_CASE("weights and contracts") {
  const auto index = evaluate_spectrum({50.0, 2.0, 3.0, 1.5, 1.0}, kGrid);
  const auto a = simulate(index, 300.0);
  const auto b = simulate(index, 320.0);
  double sr = 0.0, st = 0.0;
  for (std::size_t i = 0; i < 651; ++i) {
    sr += (a.R[i] - b.R[i]) * (a.R[i] - b.R[i]);
    st += (a.T[i] - b.T[i]) * (a.T[i] - b.T[i]);
  }
  CHECK(spectra_residual_rms(a, b) == doctest::Approx(std::sqrt((sr + st) / 1302.0)).epsilon(1e-13));
  CHECK(spectra_residual_rms(a, b, 1.0, 0.0) == doctest::Approx(std::sqrt(sr / 651.0)).epsilon(1e-13));

  FitOptions bad;
  bad.d_min_nm = 100.0;
  bad.d_max_nm = 50.0;
  CHECK_THROWS_AS(grid_search_thickness(a, index, SubstrateConfig{}, bad), DomainError);
  CHECK_THROWS_AS(grid_search_thickness(a, evaluate_spectrum({50.0, 2.0, 3.0, 1.5, 1.0}, WavelengthGrid(400, 900, 1)),
                                        SubstrateConfig{}),
                  ShapeError);
}
