#pragma once

// Single Tauc-Lorentz oscillator: dielectric function, (n, k) spectra and the
// parameter grid the simulated source materials are drawn from.

#include <cstdint>
#include <vector>

namespace filmnet {

/// h·c in eV·nm.
inline constexpr double kPlanckTimesLightSpeed = 1239.84193;

/// Uniform wavelength grid, inclusive of both ends.
class WavelengthGrid {
 public:
  WavelengthGrid() = default;
  /// Throws DomainError unless start > 0, step > 0 and (end − start)/step is integral.
  WavelengthGrid(double start_nm, double end_nm, double step_nm);

  /// 350–1000 nm in 1 nm steps (651 points).
  static WavelengthGrid canonical() { return {350.0, 1000.0, 1.0}; }

  double start_nm() const noexcept { return start_; }
  double end_nm() const noexcept { return start_ + step_ * static_cast<double>(count_ - 1); }
  double step_nm() const noexcept { return step_; }
  std::size_t count() const noexcept { return count_; }
  double at(std::size_t i) const noexcept { return start_ + step_ * static_cast<double>(i); }
  std::vector<double> wavelengths() const;

  friend bool operator==(const WavelengthGrid&, const WavelengthGrid&) = default;

 private:
  double start_ = 350.0;
  double step_ = 1.0;
  std::size_t count_ = 651;
};

struct TaucLorentzParams {
  double A = 0.0;        ///< amplitude, eV
  double C = 0.0;        ///< broadening, eV
  double E0 = 0.0;       ///< peak transition energy, eV
  double Eg = 0.0;       ///< band gap, eV
  double eps_inf = 1.0;  ///< high-frequency dielectric constant

  friend bool operator==(const TaucLorentzParams&, const TaucLorentzParams&) = default;
};

/// Auxiliary quantities of the closed-form real part at one photon energy.
struct TaucLorentzIntermediates {
  double a_ln = 0.0;
  double a_atan = 0.0;
  double zeta4 = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
};

struct DielectricPoint {
  double eps_r = 0.0;
  double eps_i = 0.0;
  double E = 0.0;
};

struct ComplexIndex {
  double n = 0.0;
  double k = 0.0;
};

struct RefractiveIndexSpectrum {
  WavelengthGrid grid;
  std::vector<double> n;
  std::vector<double> k;
};

/// E = hc/λ. Throws DomainError for λ ≤ 0.
double photon_energy(double lambda_nm);

/// True when every parameter is in range and α, γ are real. A = 0 is accepted
/// (it yields the constant dielectric ε_∞).
bool is_valid(const TaucLorentzParams& p) noexcept;

/// Throws ValidityError with a description of the failing condition.
void require_valid(const TaucLorentzParams& p);

TaucLorentzIntermediates intermediates(const TaucLorentzParams& p, double E);

/// ε_i is zero at or below the gap. ε_r follows the Jellison–Modine closed
/// form, which is the Kramers–Kronig transform
/// of ε_i plus ε_∞.
DielectricPoint dielectric_at_energy(const TaucLorentzParams& p, double E);

/// Principal square root of ε = ε_r + iε_i for ε_i ≥ 0.
ComplexIndex nk_from_dielectric(double eps_r, double eps_i) noexcept;

RefractiveIndexSpectrum evaluate_spectrum(const TaucLorentzParams& p, const WavelengthGrid& grid);

/// One axis of the Cartesian parameter grid; nodes are linearly spaced and
/// include both ends.
struct ParameterAxis {
  double lo = 0.0;
  double hi = 0.0;
  int nodes = 1;

  std::vector<double> values() const;
};

struct ParameterGridSpec {
  ParameterAxis A{10.0, 200.0, 11};
  ParameterAxis C{0.5, 10.0, 10};
  ParameterAxis E0{1.0, 10.0, 10};
  ParameterAxis Eg{1.0, 5.0, 10};
  double eps_inf = 1.0;

  std::size_t raw_cardinality() const;
};

/// Every node of the grid, in A-major order, without validity filtering.
std::vector<TaucLorentzParams> enumerate_parameter_grid(const ParameterGridSpec& spec);

/// Grid nodes that pass is_valid, in enumeration order.
std::vector<TaucLorentzParams> valid_parameter_nodes(const ParameterGridSpec& spec);

/// Draws `count` distinct valid nodes uniformly without replacement. Throws
/// CapacityError if fewer valid nodes exist.
std::vector<TaucLorentzParams> sample_parameter_grid(const ParameterGridSpec& spec,
                                                     std::size_t count, std::uint64_t seed);

}  // namespace filmnet
