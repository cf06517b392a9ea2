#pragma once

// Source/target dataset construction: simulated Tauc-Lorentz materials paired
// with random film thicknesses, literature spectra ingestion and the
// material-disjoint splits used for training and evaluation.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "filmnet/dispersion.hpp"
#include "filmnet/optics.hpp"

namespace filmnet {

inline constexpr const char* kGeneratorVersion = "filmnet-datagen-1";

struct Sample {
  OpticalSpectra spectra;
  double d_nm = 0.0;
  RefractiveIndexSpectrum index;
  std::uint32_t material_id = 0;
};

struct SplitSpec {
  std::size_t n_train = 702;
  std::size_t n_val = 302;
  std::size_t n_test = 112;
  std::size_t d_per_train = 10;
  std::size_t d_per_val = 10;
  std::size_t d_per_test = 50;
  double d_min_nm = 10.0;
  double d_max_nm = 2010.0;
  std::uint64_t seed = 0;

  std::size_t material_count() const { return n_train + n_val + n_test; }
};

/// One material of a dataset: its id (index into the generating pool) and a
/// human-readable origin (TL parameters or the source file).
struct MaterialRecord {
  std::uint32_t id = 0;
  std::string label;
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
  SplitSpec spec;
  std::string generator_version = kGeneratorVersion;
  std::string kind = "source";  ///< "source" or "target"
  std::vector<MaterialRecord> materials;
  SubstrateConfig substrate;
};

/// Thickness for draw `draw` of material `material_id`, uniform on [lo, hi].
/// Depends only on its arguments, never on generation order.
double draw_thickness(std::uint64_t seed, std::uint32_t material_id, std::uint32_t draw, double lo, double hi);

/// Samples spec.material_count() TL tuples, assigns the first n_train to
/// training, the next n_val to validation and the rest to test, then pairs
/// each material with its thickness draws and runs the forward model.
DatasetSplit build_source_dataset(const SplitSpec& spec, const ParameterGridSpec& grid_spec,
                                  const SubstrateConfig& substrate,
                                  const WavelengthGrid& grid = WavelengthGrid::canonical());

struct TargetSpectra {
  std::vector<RefractiveIndexSpectrum> spectra;
  std::vector<std::string> labels;
  std::size_t clamped = 0;  ///< negative n/k values clamped to zero across all files
};

TargetSpectra load_target_spectra(const std::vector<std::filesystem::path>& files,
                                  const WavelengthGrid& grid = WavelengthGrid::canonical());

inline constexpr std::size_t kTransferDPerTrain = 10;
inline constexpr std::size_t kDirectDPerTrain = 500;
inline constexpr std::size_t kTargetDPerTest = 50;

/// Seeded permutation of the spectra; the first n_train train, the rest test.
/// No validation split. Material ids are indices into `spectra`.
DatasetSplit build_target_dataset(const std::vector<RefractiveIndexSpectrum>& spectra, std::size_t n_train,
                                  std::size_t d_per_train, std::size_t d_per_test, std::uint64_t seed,
                                  const SubstrateConfig& substrate, std::vector<std::string> labels = {});

/// Stand-in for literature perovskite data: each spectrum is the (n, k) of a
/// two-oscillator Tauc-Lorentz dielectric sum with continuous random
/// parameters, so it lies off the single-oscillator source grid.
std::vector<RefractiveIndexSpectrum> pseudo_target_generator(std::size_t count, std::uint64_t seed,
                                                             const WavelengthGrid& grid = WavelengthGrid::canonical());

/// Sum of two oscillators sharing ε_∞ (each term's own ε_∞ is ignored).
struct TwoOscillatorParams {
  TaucLorentzParams first;
  TaucLorentzParams second;
  double eps_inf = 1.0;
};

std::vector<TwoOscillatorParams> pseudo_target_parameters(std::size_t count, std::uint64_t seed);

RefractiveIndexSpectrum evaluate_two_oscillator(const TwoOscillatorParams& p, const WavelengthGrid& grid);

// On-disk layout: <dir>/manifest.json plus train.bin, validation.bin, test.bin.
void save_dataset(const std::filesystem::path& dir, const DatasetSplit& split);
DatasetSplit load_dataset(const std::filesystem::path& dir);

/// Binary sample file: "THKD1\0", u32 count, u32 grid count, then per sample
/// f64 d, f64[count] R, T, n, k (little-endian).
void write_samples(const std::filesystem::path& path, const std::vector<Sample>& samples, const WavelengthGrid& grid);

/// Material ids are assigned from `material_ids` with `d_per_material`
/// consecutive samples each.
std::vector<Sample> read_samples(const std::filesystem::path& path, const WavelengthGrid& grid,
                                 const std::vector<std::uint32_t>& material_ids, std::size_t d_per_material);

/// Distinct material ids of a sample list in first-appearance order.
std::vector<std::uint32_t> material_ids(const std::vector<Sample>& samples);

}  // namespace filmnet
