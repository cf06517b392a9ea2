#pragma once

// CSV readers and writers for refractive-index and optical spectra, plus
// resampling onto a wavelength grid.

#include <filesystem>
#include <string>
#include <vector>

#include "filmnet/dispersion.hpp"
#include "filmnet/optics.hpp"

namespace filmnet {

/// Three-column table as read from disk, in file order.
struct ColumnTable {
  std::vector<double> x;
  std::vector<double> a;
  std::vector<double> b;
};

/// Reads a CSV with exactly the given three header names. Blank lines are
/// skipped. Throws IoError if the file cannot be opened and ParseError (with
/// the 1-based line number) on malformed content or non-increasing x.
ColumnTable read_three_column_csv(const std::filesystem::path& path, const std::string& h0,
                                  const std::string& h1, const std::string& h2);

/// Linear interpolation of (x, y) at every grid wavelength. Grid points that
/// coincide with a source abscissa return that row's value exactly. Throws
/// CoverageError if the grid extends beyond [x.front(), x.back()].
std::vector<double> resample_linear(const std::vector<double>& x, const std::vector<double>& y,
                                    const WavelengthGrid& grid, const std::string& source = {});

struct LoadedIndex {
  RefractiveIndexSpectrum spectrum;
  std::size_t clamped = 0;  ///< values below zero that were clamped to 0
};

/// Reads `wavelength_nm,n,k` and resamples onto `grid`.
LoadedIndex read_index_csv(const std::filesystem::path& path, const WavelengthGrid& grid);

/// Reads `wavelength_nm,R,T` and resamples onto `grid`.
OpticalSpectra read_optical_csv(const std::filesystem::path& path, const WavelengthGrid& grid);

/// 17 significant digits, so values survive a write/read cycle exactly.
void write_index_csv(const std::filesystem::path& path, const RefractiveIndexSpectrum& s);
void write_optical_csv(const std::filesystem::path& path, const OpticalSpectra& s);

}  // namespace filmnet
