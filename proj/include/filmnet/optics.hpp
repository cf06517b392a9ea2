#pragma once

// Normal-incidence transfer-matrix forward model for thin films on a thick
// substrate.

#include <complex>
#include <span>
#include <variant>
#include <vector>

#include "filmnet/dispersion.hpp"

namespace filmnet {

using Complex = std::complex<double>;

enum class Coherence { coherent, incoherent };

/// Wavelength-independent (n, k).
struct ConstantIndex {
  double n = 1.0;
  double k = 0.0;
};

using IndexSource = std::variant<ConstantIndex, RefractiveIndexSpectrum>;

/// ñ = n + ik of `source` at grid point `i` (constant sources ignore `i`).
Complex index_at(const IndexSource& source, std::size_t i);

struct Layer {
  double thickness_nm = 0.0;
  IndexSource index = ConstantIndex{};
  Coherence coherence = Coherence::coherent;
  /// Only thick layers may be treated incoherently.
  bool thick = false;
};

struct Stack {
  ConstantIndex incidence{1.0, 0.0};
  std::vector<Layer> layers;
  ConstantIndex exit{1.0, 0.0};
};

/// One homogeneous layer as seen at a single wavelength.
struct CoherentLayer {
  Complex index;
  double thickness_nm = 0.0;
};

struct RT {
  double R = 0.0;
  double T = 0.0;
};

struct OpticalSpectra {
  WavelengthGrid grid;
  std::vector<double> R;
  std::vector<double> T;
};

struct SubstrateConfig {
  double n = 1.52;
  double thickness_nm = 1.0e6;
  Coherence coherence = Coherence::incoherent;
};

/// Intensity R and T of a fully coherent stack between semi-infinite media,
/// via the product of characteristic matrices. Media must be lossless.
RT coherent_stack_rt(Complex incidence, std::span<const CoherentLayer> layers, Complex exit,
                     double lambda_nm);

/// R and T of an arbitrary stack at grid point `i` of `grid`. Runs of
/// coherent layers are solved with coherent_stack_rt; incoherent thick layers
/// join them through 2×2 intensity matrices (absorption included).
RT stack_rt(const Stack& stack, const WavelengthGrid& grid, std::size_t i);

OpticalSpectra stack_spectra(const Stack& stack, const WavelengthGrid& grid);

/// air / film(d) / substrate / air.
Stack film_on_substrate_stack(const RefractiveIndexSpectrum& film, double d_nm,
                              const SubstrateConfig& substrate);

/// Spectra of the canonical film-on-glass stack. Throws ShapeError if the
/// film is not sampled on `grid`, DomainError if d ≤ 0.
OpticalSpectra film_on_substrate_rt(const RefractiveIndexSpectrum& film, double d_nm,
                                    const SubstrateConfig& substrate, const WavelengthGrid& grid);

/// Forward-simulates predicted (d, n, k) so they can be compared against the
/// spectra they were predicted from.
OpticalSpectra reconstruct_spectra(double d_nm, const RefractiveIndexSpectrum& spectrum,
                                   const SubstrateConfig& substrate);

}  // namespace filmnet
