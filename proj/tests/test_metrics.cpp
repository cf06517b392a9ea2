#include "doctest.h"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "filmnet/errors.hpp"
#include "filmnet/metrics.hpp"
#include "filmnet/seeds.hpp"
#include "oracles/tmm_reference.hpp"
#include "test_support.hpp"

using namespace filmnet;

namespace {
// The six deposited films: profilometry thickness, then ensemble mean prediction.
const std::vector<double> kMeasured{154.17, 99.29, 389.89, 265.07, 460.35, 311.15};
const std::vector<double> kPredicted{122.8, 101.3, 418.5, 256.0, 489.9, 373.8};
}  // namespace

TEST_CASE("within-deviation accuracy") {
  const std::vector<double> a{100.0, 200.0, 50.0};
  CHECK(within_deviation_accuracy(a, a) == 1.0);
  CHECK(within_deviation_accuracy(std::vector<double>{109.0}, std::vector<double>{100.0}) == 1.0);
  CHECK(within_deviation_accuracy(std::vector<double>{110.0}, std::vector<double>{100.0}) == 1.0);
  CHECK(within_deviation_accuracy(std::vector<double>{111.0}, std::vector<double>{100.0}) == 0.0);
  CHECK(within_deviation_accuracy(std::vector<double>{75.0, 95.0}, std::vector<double>{100.0, 100.0}, 0.2) == 0.5);
  CHECK_THROWS_AS(within_deviation_accuracy(std::vector<double>{1.0}, std::vector<double>{0.0}), DomainError);
  CHECK_THROWS_AS(within_deviation_accuracy(std::vector<double>{1.0}, std::vector<double>{-3.0}), DomainError);
  CHECK_THROWS_AS(within_deviation_accuracy(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("mape") {
  const std::vector<double> a{100.0, 200.0, 50.0};
  CHECK(mape(a, a) == 0.0);
  CHECK(mape(std::vector<double>{110.0}, std::vector<double>{100.0}) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(mape(std::vector<double>{90.0, 130.0}, std::vector<double>{100.0, 100.0}) == doctest::Approx(20.0));
  CHECK_THROWS_AS(mape(std::vector<double>{1.0}, std::vector<double>{0.0}), DomainError);
}

TEST_CASE("six-film fixture") {
  const auto films = deposition_films();
  REQUIRE(films.size() == 6);
  std::vector<double> measured, predicted;
  for (const auto& f : films) {
    measured.push_back(f.measured_nm);
    predicted.push_back(f.predicted_nm);
  }
  CHECK(measured == kMeasured);
  CHECK(predicted == kPredicted);

  double sum = 0.0;
  int within = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double dev = std::abs(kPredicted[i] - kMeasured[i]) / kMeasured[i];
    sum += dev;
    within += dev <= 0.10;
  }
  CHECK(within == 4);
  CHECK(within_deviation_accuracy(predicted, measured) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
  const double m = mape(predicted, measured);
  CHECK(m == doctest::Approx(100.0 * sum / 6.0).epsilon(1e-14));
  CHECK(std::abs(m - 9.9) <= 0.1);
}

TEST_CASE("accuracy properties") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(20), a(20);
    for (std::size_t i = 0; i < 20; ++i) {
      a[i] = rng.uniform(10.0, 2010.0);
      p[i] = a[i] * rng.uniform(0.8, 1.2);
    }
    const double c = rng.uniform(0.01, 100.0);
    std::vector<double> pc(p), ac(a);
    for (std::size_t i = 0; i < 20; ++i) {
      pc[i] *= c;
      ac[i] *= c;
    }
    CHECK(within_deviation_accuracy(pc, ac) == within_deviation_accuracy(p, a));
    CHECK(mape(p, a) > 0.0);
    CHECK(mape(a, a) == 0.0);
  }
  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> p{1.0, 2.0, 3.0000001};
  CHECK(mape(p, a) > 0.0);
}

TEST_CASE("aggregates are recomputable from per-sample deviations") {
  const auto r = accuracy_report(kPredicted, kMeasured);
  REQUIRE(r.deviations.size() == 6);
  double sum = 0.0;
  int within = 0;
  for (double d : r.deviations) {
    sum += d;
    within += d <= 0.10;
  }
  CHECK(r.mape == doctest::Approx(100.0 * sum / 6.0).epsilon(1e-15));
  CHECK(r.fraction_within == within / 6.0);

  const auto ms = mean_std(std::vector<double>{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
  CHECK(ms.mean == 5.0);
  CHECK(ms.std == 2.0);
  CHECK(ms.count == 8);
  CHECK(mean_std(std::vector<double>{3.5}).std == 0.0);
}

TEST_CASE("spectrum accuracy") {
  const std::vector<double> n{2.0, 2.1, 2.3, 2.5};
  std::vector<double> scaled(n);
  for (double& v : scaled) v *= 1.09;
  CHECK(spectrum_accuracy({n}, {n}) == 1.0);
  CHECK(spectrum_accuracy({scaled}, {n}) == 1.0);
  std::vector<double> far(n);
  for (double& v : far) v *= 1.2;
  CHECK(spectrum_accuracy({n, far}, {n, n}) == 0.5);

  const std::vector<double> zeros(4, 0.0);
  const std::vector<double> small{1e-4, 2e-4, 0.0, 5e-4};
  const double dev = spectrum_deviation(small, zeros);
  CHECK(std::isfinite(dev));
  CHECK(dev == doctest::Approx((0.1 + 0.2 + 0.0 + 0.5) / 4.0).epsilon(1e-12));
  CHECK(spectrum_deviation(small, zeros, 1e-2) == doctest::Approx(dev / 10.0).epsilon(1e-12));
  CHECK_THROWS_AS(spectrum_deviation(small, std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("reconstruction residual") {
  const auto grid = WavelengthGrid::canonical();
  const TaucLorentzParams p{50.0, 2.0, 3.0, 1.5, 1.0};
  const auto index = evaluate_spectrum(p, grid);
  const auto actual = film_on_substrate_rt(index, 500.0, SubstrateConfig{}, grid);
  const auto exact = reconstruction_residual(500.0, index, actual, SubstrateConfig{});
  CHECK(exact.rms <= 1e-9);
  CHECK(exact.dR.size() == 651);
  const auto off = reconstruction_residual(525.0, index, actual, SubstrateConfig{});
  CHECK(off.rms > exact.rms);
  CHECK(off.rms > 1e-3);

  // Residual of a 520 nm reconstruction against 500 nm spectra, both sides
  // computed by the independent reference model.
  double ss = 0.0;
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const std::complex<double> nk(index.n[i], index.k[i]);
    const auto a = oracle::film_on_incoherent_glass(nk, 500.0, 1.52, grid.at(i));
    const auto b = oracle::film_on_incoherent_glass(nk, 520.0, 1.52, grid.at(i));
    ss += (b.R - a.R) * (b.R - a.R) + (b.T - a.T) * (b.T - a.T);
  }
  const double ref = std::sqrt(ss / (2.0 * 651.0));
  CHECK(reconstruction_residual(520.0, index, actual, SubstrateConfig{}).rms == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("activation maps") {
  const auto grid = WavelengthGrid::canonical();
  const auto w = nn::init_weights(nn::NetworkConfig::full_scale(), 4);
  const auto spectra = film_on_substrate_rt(evaluate_spectrum({80.0, 2.0, 4.0, 2.0, 1.0}, grid), 700.0,
                                            SubstrateConfig{}, grid);
  const auto maps = activation_maps(w, spectra, 10, 123);
  REQUIRE(maps.maps.size() == 4);
  const std::vector<Eigen::Index> lengths{644, 210, 68, 32};
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(maps.maps[s].rows() == 10);
    CHECK(maps.maps[s].cols() == lengths[s]);
    CHECK(maps.maps[s].minCoeff() >= 0.0);
    CHECK(std::is_sorted(maps.filters[s].begin(), maps.filters[s].end()));
  }
  CHECK(maps.clamped_stages.empty());
  CHECK(activation_maps(w, spectra, 10, 123).filters == maps.filters);
  CHECK(activation_maps(w, spectra, 10, 124).filters != maps.filters);

  const auto wide = activation_maps(w, spectra, 100, 1);
  CHECK(wide.clamped_stages == std::vector<std::size_t>{2, 3});
  CHECK(wide.maps[3].rows() == 32);
  CHECK_THROWS_AS(activation_maps(w, spectra, 0, 1), DomainError);

  testing::TempDir dir("act");
  const auto files = write_activation_csvs(dir.path(), maps);
  REQUIRE(files.size() == 4);
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(files[s].filename() == "activations_layer" + std::to_string(s + 1) + ".csv");
    std::ifstream is(files[s]);
    std::string line;
    int rows = 0;
    std::getline(is, line);
    CHECK(line.rfind("filter,0,1,", 0) == 0);
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 10);
  }
}
