#include "filmnet/optics.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "filmnet/errors.hpp"

namespace filmnet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const Complex kI{0.0, 1.0};

using Mat2 = std::array<Complex, 4>;  // row-major

Mat2 mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

struct IntensityMat {
  double m11, m12, m21, m22;

  IntensityMat operator*(const IntensityMat& o) const {
    return {m11 * o.m11 + m12 * o.m21, m11 * o.m12 + m12 * o.m22,
            m21 * o.m11 + m22 * o.m21, m21 * o.m12 + m22 * o.m22};
  }
};

// Intensity transfer matrix of an interface-like element with front/back
// reflectance and transmittance.
IntensityMat interface_matrix(const RT& front, const RT& back) {
  const double inv = 1.0 / front.T;
  return {inv, -back.R * inv, front.R * inv, (front.T * back.T - front.R * back.R) * inv};
}

Complex to_complex(const ConstantIndex& c) { return {c.n, c.k}; }

}  // namespace

Complex index_at(const IndexSource& source, std::size_t i) {
  return std::visit(
      [i](const auto& s) -> Complex {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ConstantIndex>) {
          return {s.n, s.k};
        } else {
          return {s.n.at(i), s.k.at(i)};
        }
      },
      source);
}

RT coherent_stack_rt(Complex incidence, std::span<const CoherentLayer> layers, Complex exit,
                     double lambda_nm) {
  if (!(lambda_nm > 0.0)) throw DomainError("wavelength must be positive");

  // Characteristic matrix for ñ = n + ik: [[cos δ, −i sin δ/ñ], [−i ñ sin δ, cos δ]].
  Mat2 m{Complex{1.0}, Complex{0.0}, Complex{0.0}, Complex{1.0}};
  for (const CoherentLayer& layer : layers) {
    const Complex delta = kTwoPi * layer.index * layer.thickness_nm / lambda_nm;
    const Complex c = std::cos(delta);
    const Complex s = std::sin(delta);
    m = mul(m, Mat2{c, -kI * s / layer.index, -kI * layer.index * s, c});
  }
  const Complex B = m[0] + m[1] * exit;
  const Complex C = m[2] + m[3] * exit;
  const Complex denom = incidence * B + C;
  const Complex r = (incidence * B - C) / denom;
  const Complex t = 2.0 * incidence / denom;
  return {std::norm(r), exit.real() / incidence.real() * std::norm(t)};
}

RT stack_rt(const Stack& stack, const WavelengthGrid& grid, std::size_t i) {
  const double lambda = grid.at(i);

  // Split the stack into coherent runs separated by incoherent layers.
  std::vector<CoherentLayer> run;
  Complex run_front = to_complex(stack.incidence);
  IntensityMat total{1.0, 0.0, 0.0, 1.0};

  auto close_run = [&](Complex run_back) {
    std::vector<CoherentLayer> reversed(run.rbegin(), run.rend());
    const RT front = coherent_stack_rt(run_front, run, run_back, lambda);
    const RT back = coherent_stack_rt(run_back, reversed, run_front, lambda);
    total = total * interface_matrix(front, back);
    run.clear();
  };

  for (const Layer& layer : stack.layers) {
    const Complex idx = index_at(layer.index, i);
    if (layer.coherence == Coherence::coherent) {
      if (!layer.thick && !(layer.thickness_nm > 0.0)) {
        throw DomainError("interior layer thickness must be positive");
      }
      run.push_back({idx, layer.thickness_nm});
      continue;
    }
    if (!layer.thick) throw DomainError("only thick layers may be incoherent");
    // Incoherent layers are treated as real-index media at the interfaces;
    // their absorption enters through the single-pass attenuation below.
    const Complex medium{idx.real(), 0.0};
    close_run(medium);
    const double pass = std::exp(-2.0 * kTwoPi * idx.imag() * layer.thickness_nm / lambda);
    total = total * IntensityMat{1.0 / pass, 0.0, 0.0, pass};
    run_front = medium;
  }
  close_run(to_complex(stack.exit));

  return {total.m21 / total.m11, 1.0 / total.m11};
}

OpticalSpectra stack_spectra(const Stack& stack, const WavelengthGrid& grid) {
  OpticalSpectra out{grid, std::vector<double>(grid.count()), std::vector<double>(grid.count())};
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const RT rt = stack_rt(stack, grid, i);
    out.R[i] = rt.R;
    out.T[i] = rt.T;
  }
  return out;
}

Stack film_on_substrate_stack(const RefractiveIndexSpectrum& film, double d_nm,
                              const SubstrateConfig& substrate) {
  Stack s;
  s.layers.push_back(Layer{d_nm, film, Coherence::coherent, false});
  s.layers.push_back(Layer{substrate.thickness_nm, ConstantIndex{substrate.n, 0.0}, substrate.coherence, true});
  return s;
}

OpticalSpectra film_on_substrate_rt(const RefractiveIndexSpectrum& film, double d_nm,
                                    const SubstrateConfig& substrate, const WavelengthGrid& grid) {
  if (!(film.grid == grid) || film.n.size() != grid.count() || film.k.size() != grid.count()) {
    throw ShapeError("film index is not sampled on the requested wavelength grid");
  }
  if (!(d_nm > 0.0)) throw DomainError("film thickness must be positive");
  return stack_spectra(film_on_substrate_stack(film, d_nm, substrate), grid);
}

OpticalSpectra reconstruct_spectra(double d_nm, const RefractiveIndexSpectrum& spectrum,
                                   const SubstrateConfig& substrate) {
  return film_on_substrate_rt(spectrum, d_nm, substrate, spectrum.grid);
}

}  // namespace filmnet
