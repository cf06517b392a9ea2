#include "filmnet/dispersion.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "filmnet/errors.hpp"
#include "filmnet/seeds.hpp"

namespace filmnet {

namespace {
constexpr double kPi = std::numbers::pi;
}

WavelengthGrid::WavelengthGrid(double start_nm, double end_nm, double step_nm)
    : start_(start_nm), step_(step_nm) {
  if (!(start_nm > 0.0) || !(step_nm > 0.0) || !(end_nm >= start_nm)) {
    throw DomainError("wavelength grid needs 0 < start <= end and step > 0");
  }
  const double intervals = (end_nm - start_nm) / step_nm;
  const double rounded = std::round(intervals);
  if (std::abs(intervals - rounded) > 1e-9 * std::max(1.0, intervals)) {
    throw DomainError("wavelength grid span is not a whole number of steps");
  }
  count_ = static_cast<std::size_t>(rounded) + 1;
}

std::vector<double> WavelengthGrid::wavelengths() const {
  std::vector<double> out(count_);
  for (std::size_t i = 0; i < count_; ++i) out[i] = at(i);
  return out;
}

double photon_energy(double lambda_nm) {
  if (!(lambda_nm > 0.0)) throw DomainError("wavelength must be positive");
  return kPlanckTimesLightSpeed / lambda_nm;
}

bool is_valid(const TaucLorentzParams& p) noexcept {
  if (!(p.A >= 0.0 && p.C > 0.0 && p.E0 > 0.0 && p.Eg > 0.0 && p.eps_inf >= 0.0)) return false;
  return 4.0 * p.E0 * p.E0 - p.C * p.C > 0.0 && p.E0 * p.E0 - 0.5 * p.C * p.C > 0.0;
}

void require_valid(const TaucLorentzParams& p) {
  if (is_valid(p)) return;
  std::ostringstream os;
  os << "invalid Tauc-Lorentz parameters (A=" << p.A << ", C=" << p.C << ", E0=" << p.E0
     << ", Eg=" << p.Eg << ", eps_inf=" << p.eps_inf << ")";
  if (p.E0 * p.E0 - 0.5 * p.C * p.C <= 0.0) os << ": alpha or gamma is imaginary";
  throw ValidityError(os.str());
}

TaucLorentzIntermediates intermediates(const TaucLorentzParams& p, double E) {
  require_valid(p);
  const double E2 = E * E;
  const double E02 = p.E0 * p.E0;
  const double Eg2 = p.Eg * p.Eg;
  const double C2 = p.C * p.C;

  TaucLorentzIntermediates t;
  t.alpha = std::sqrt(4.0 * E02 - C2);
  t.gamma = std::sqrt(E02 - 0.5 * C2);
  t.a_ln = (Eg2 - E02) * E2 + Eg2 * C2 - E02 * (E02 + 3.0 * Eg2);
  t.a_atan = (E2 - E02) * (E02 + Eg2) + Eg2 * C2;
  const double g2 = t.gamma * t.gamma;
  t.zeta4 = (E2 - g2) * (E2 - g2) + 0.25 * t.alpha * t.alpha * C2;
  return t;
}

DielectricPoint dielectric_at_energy(const TaucLorentzParams& p, double E) {
  if (!(E > 0.0)) throw DomainError("photon energy must be positive");
  const TaucLorentzIntermediates t = intermediates(p, E);

  DielectricPoint out;
  out.E = E;
  if (p.A == 0.0) {
    out.eps_r = p.eps_inf;
    return out;
  }

  const double A = p.A, C = p.C, E0 = p.E0, Eg = p.Eg;
  const double E2 = E * E, E02 = E0 * E0, Eg2 = Eg * Eg;
  const double alpha = t.alpha;
  const double g2 = t.gamma * t.gamma;
  const double z4 = t.zeta4;

  if (E > Eg) {
    const double num = A * E0 * C * (E - Eg) * (E - Eg);
    const double den = (E2 - E02) * (E2 - E02) + C * C * E2;
    out.eps_i = num / (den * E);
  }

  const double log_term = (A * C * t.a_ln) / (2.0 * kPi * z4 * alpha * E0) *
                          std::log((E02 + Eg2 + alpha * Eg) / (E02 + Eg2 - alpha * Eg));
  const double atan_term = -(A * t.a_atan) / (kPi * z4 * E0) *
                           (kPi - std::atan((2.0 * Eg + alpha) / C) + std::atan((alpha - 2.0 * Eg) / C));
  const double gamma_term = 2.0 * (A * E0) / (kPi * z4 * alpha) * Eg * (E2 - g2) *
                            (kPi + 2.0 * std::atan(2.0 * (g2 - Eg2) / (alpha * C)));

  // The two ln|E − Eg| terms combine to a (E − Eg)²/E coefficient, which
  // removes the apparent singularity at the gap.
  const double K = A * E0 * C / (kPi * z4);
  const double diff = std::abs(E - Eg);
  const double near_gap = diff > 0.0 ? -(diff * diff / E) * std::log(diff) : 0.0;
  const double gap_terms = K * (near_gap + ((E + Eg) * (E + Eg) / E) * std::log(E + Eg) -
                                Eg * std::log((E02 - Eg2) * (E02 - Eg2) + Eg2 * C * C));

  out.eps_r = p.eps_inf + log_term + atan_term + gamma_term + gap_terms;
  return out;
}

ComplexIndex nk_from_dielectric(double eps_r, double eps_i) noexcept {
  const double mag = std::hypot(eps_r, eps_i);
  ComplexIndex out;
  if (mag == 0.0) return out;
  // Take the root of the larger branch directly and derive the other from
  // 2nk = ε_i to avoid cancellation in |ε| − |ε_r|.
  if (eps_r >= 0.0) {
    out.n = std::sqrt(0.5 * (mag + eps_r));
    out.k = eps_i / (2.0 * out.n);
  } else {
    out.k = std::sqrt(0.5 * (mag - eps_r));
    out.n = eps_i / (2.0 * out.k);
  }
  return out;
}

RefractiveIndexSpectrum evaluate_spectrum(const TaucLorentzParams& p, const WavelengthGrid& grid) {
  require_valid(p);
  RefractiveIndexSpectrum s{grid, std::vector<double>(grid.count()), std::vector<double>(grid.count())};
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const DielectricPoint e = dielectric_at_energy(p, photon_energy(grid.at(i)));
    const ComplexIndex nk = nk_from_dielectric(e.eps_r, e.eps_i);
    s.n[i] = nk.n;
    s.k[i] = nk.k;
  }
  return s;
}

std::vector<double> ParameterAxis::values() const {
  if (nodes < 1) throw DomainError("parameter axis needs at least one node");
  std::vector<double> v(static_cast<std::size_t>(nodes));
  if (nodes == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < nodes; ++i) {
    v[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nodes - 1);
  }
  v.back() = hi;
  return v;
}

std::size_t ParameterGridSpec::raw_cardinality() const {
  return static_cast<std::size_t>(A.nodes) * static_cast<std::size_t>(C.nodes) *
         static_cast<std::size_t>(E0.nodes) * static_cast<std::size_t>(Eg.nodes);
}

std::vector<TaucLorentzParams> enumerate_parameter_grid(const ParameterGridSpec& spec) {
  std::vector<TaucLorentzParams> out;
  out.reserve(spec.raw_cardinality());
  for (double a : spec.A.values())
    for (double c : spec.C.values())
      for (double e0 : spec.E0.values())
        for (double eg : spec.Eg.values()) out.push_back({a, c, e0, eg, spec.eps_inf});
  return out;
}

std::vector<TaucLorentzParams> valid_parameter_nodes(const ParameterGridSpec& spec) {
  std::vector<TaucLorentzParams> all = enumerate_parameter_grid(spec);
  std::erase_if(all, [](const TaucLorentzParams& p) { return !is_valid(p); });
  return all;
}

std::vector<TaucLorentzParams> sample_parameter_grid(const ParameterGridSpec& spec,
                                                     std::size_t count, std::uint64_t seed) {
  std::vector<TaucLorentzParams> pool = valid_parameter_nodes(spec);
  if (count > pool.size()) {
    throw CapacityError("requested " + std::to_string(count) + " parameter tuples but the grid has only " +
                        std::to_string(pool.size()) + " valid nodes");
  }
  // Partial Fisher-Yates: the first `count` slots end up a uniform sample
  // without replacement.
  SplitMix64 rng(derive_seed(seed, {0x5A4D504CULL}));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace filmnet
