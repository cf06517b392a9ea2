#include "doctest.h"

#include <cmath>
#include <set>
#include <tuple>

#include "filmnet/dispersion.hpp"
#include "filmnet/errors.hpp"
#include "filmnet/seeds.hpp"
#include "oracles/tl_reference.hpp"

using namespace filmnet;

namespace {
const TaucLorentzParams kGolden{50.0, 2.0, 3.0, 1.5, 1.0};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
}  // namespace

TEST_CASE("photon energy") {
  CHECK(photon_energy(1239.84193) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(photon_energy(500.0) == doctest::Approx(2.479684).epsilon(1e-6));
  CHECK(photon_energy(350.0) == doctest::Approx(3.542405).epsilon(1e-6));
  CHECK_THROWS_AS(photon_energy(0.0), DomainError);
  CHECK_THROWS_AS(photon_energy(-5.0), DomainError);
}

TEST_CASE("canonical grid") {
  const auto g = WavelengthGrid::canonical();
  CHECK(g.count() == 651);
  CHECK(g.at(0) == 350.0);
  CHECK(g.at(650) == 1000.0);
  const auto w = g.wavelengths();
  for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] - w[i - 1] == 1.0);
  CHECK_THROWS_AS(WavelengthGrid(350.0, 1000.0, 0.0), DomainError);
  CHECK_THROWS_AS(WavelengthGrid(350.0, 1000.0, 0.7), DomainError);
}

TEST_CASE("dielectric examples") {
  CHECK(dielectric_at_energy(kGolden, 1.0).eps_i == 0.0);
  CHECK(dielectric_at_energy(kGolden, 1.5).eps_i == 0.0);

  for (double E : {0.5, 1.5, 2.0, 4.0, 9.0}) {
    const auto p = dielectric_at_energy({0.0, 2.0, 3.0, 1.5, 1.0}, E);
    CHECK(p.eps_r == 1.0);
    CHECK(p.eps_i == 0.0);
  }

  // Golden values from a throwaway transcription cross-checked against the
  // KK integral to a very large cutoff.
  const auto g = dielectric_at_energy(kGolden, 1239.84193 / 500.0);
  CHECK(rel(g.eps_r, 6.643896753276972) < 1e-12);
  CHECK(rel(g.eps_i, 3.5483299773772554) < 1e-12);

  CHECK_THROWS_AS(dielectric_at_energy({50.0, 10.0, 1.0, 1.5, 1.0}, 2.0), ValidityError);
  CHECK_THROWS_AS(dielectric_at_energy({50.0, 2.0, 3.0, 1.5, 1.0}, 0.0), DomainError);
}

TEST_CASE("gap energy is finite") {
  const auto p = dielectric_at_energy(kGolden, 1.5);
  CHECK(std::isfinite(p.eps_r));
  const double left = dielectric_at_energy(kGolden, 1.5 - 1e-7).eps_r;
  const double right = dielectric_at_energy(kGolden, 1.5 + 1e-7).eps_r;
  CHECK(p.eps_r == doctest::Approx(left).epsilon(1e-5));
  CHECK(p.eps_r == doctest::Approx(right).epsilon(1e-5));
}

TEST_CASE("nk from dielectric") {
  auto a = nk_from_dielectric(2.25, 0.0);
  CHECK(a.n == 1.5);
  CHECK(a.k == 0.0);
  a = nk_from_dielectric(0.0, 0.0);
  CHECK(a.n == 0.0);
  CHECK(a.k == 0.0);
  a = nk_from_dielectric(3.0, 4.0);
  CHECK(a.n == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(a.k == doctest::Approx(1.0).epsilon(1e-15));

  SplitMix64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double er = rng.uniform(-50.0, 50.0);
    const double ei = rng.uniform(0.0, 50.0);
    const auto r = nk_from_dielectric(er, ei);
    const double scale = std::hypot(er, ei);
    CHECK(std::abs(r.n * r.n - r.k * r.k - er) <= 1e-12 * scale);
    CHECK(std::abs(2 * r.n * r.k - ei) <= 1e-12 * scale);
    CHECK(r.n >= 0.0);
    CHECK(r.k >= 0.0);
  }
}

TEST_CASE("closed form matches straight-line transcription") {
  const auto nodes = valid_parameter_nodes(ParameterGridSpec{});
  SplitMix64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto& p = nodes[rng.below(nodes.size())];
    const double E = rng.uniform(0.3, 6.0);
    if (std::abs(E - p.Eg) < 1e-6) continue;
    const auto got = dielectric_at_energy(p, E);
    const double want_r = oracle::tl_eps_r(p.A, p.C, p.E0, p.Eg, p.eps_inf, E);
    const double want_i = oracle::tl_eps_i(p.A, p.C, p.E0, p.Eg, E);
    CHECK(std::abs(got.eps_r - want_r) <= 1e-9 * std::max(1.0, std::abs(want_r)));
    CHECK(std::abs(got.eps_i - want_i) <= 1e-9 * std::max(1.0, std::abs(want_i)));
  }
}

TEST_CASE("Kramers-Kronig consistency") {
  const auto params = sample_parameter_grid(ParameterGridSpec{}, 10, 2024);
  int compared = 0;
  for (const auto& p : params) {
    for (int j = 0; j <= 20; ++j) {
      const double E = 1.5 + 0.1 * j;
      if (std::abs(E - p.Eg) < 1e-6) continue;
      const double model = dielectric_at_energy(p, E).eps_r - p.eps_inf;
      if (std::abs(model) <= 0.1) continue;
      const double kk = oracle::kk_real_part(p.A, p.C, p.E0, p.Eg, E, 50.0);
      CHECK(rel(kk, model) < 0.02);
      ++compared;
    }
  }
  CHECK(compared > 0);
}

TEST_CASE("imaginary part branch and high-energy limit") {
  for (const auto& p : sample_parameter_grid(ParameterGridSpec{}, 200, 5)) {
    for (double E = 0.2; E < 12.0; E += 0.05) {
      const double ei = dielectric_at_energy(p, E).eps_i;
      if (E <= p.Eg) {
        CHECK(ei == 0.0);
      } else {
        CHECK(ei >= 0.0);
      }
    }
    CHECK(dielectric_at_energy(p, 1000.0).eps_i < 1e-3);
  }
}

TEST_CASE("evaluate spectrum") {
  const auto grid = WavelengthGrid::canonical();
  const auto s = evaluate_spectrum(kGolden, grid);
  REQUIRE(s.n.size() == 651);
  REQUIRE(s.k.size() == 651);
  CHECK(s.grid == grid);
  // 500 nm is index 150.
  const auto d = dielectric_at_energy(kGolden, photon_energy(500.0));
  const auto nk = nk_from_dielectric(d.eps_r, d.eps_i);
  CHECK(s.n[150] == nk.n);
  CHECK(s.k[150] == nk.k);
  CHECK(rel(s.n[150], 2.662326256012955) < 1e-12);
  CHECK(rel(s.k[150], 0.6663965337387238) < 1e-12);

  const auto flat = evaluate_spectrum({0.0, 2.0, 3.0, 1.5, 1.0}, grid);
  for (std::size_t i = 0; i < grid.count(); ++i) {
    CHECK(flat.n[i] == 1.0);
    CHECK(flat.k[i] == 0.0);
  }
  CHECK_THROWS_AS(evaluate_spectrum({50.0, 10.0, 1.0, 1.5, 1.0}, grid), ValidityError);
}

TEST_CASE("parameter grid sampling") {
  const ParameterGridSpec spec;
  CHECK(spec.raw_cardinality() == 11000);
  CHECK(enumerate_parameter_grid(spec).size() == 11000);
  const auto valid = valid_parameter_nodes(spec);
  CHECK(valid.size() < 11000);
  for (const auto& p : valid) CHECK(is_valid(p));

  const auto A = spec.A.values();
  CHECK(A.front() == 10.0);
  CHECK(A.back() == 200.0);
  CHECK(A[1] == doctest::Approx(29.0));

  const auto a = sample_parameter_grid(spec, 1116, 99);
  const auto b = sample_parameter_grid(spec, 1116, 99);
  REQUIRE(a.size() == 1116);
  CHECK(a == b);
  std::set<std::tuple<double, double, double, double>> distinct;
  for (const auto& p : a) distinct.insert({p.A, p.C, p.E0, p.Eg});
  CHECK(distinct.size() == 1116);
  CHECK(sample_parameter_grid(spec, 1116, 100) != a);

  CHECK_NOTHROW(sample_parameter_grid(spec, valid.size(), 1));
  CHECK_THROWS_AS(sample_parameter_grid(spec, valid.size() + 1, 1), CapacityError);
}
