#include "filmnet/spectrum_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "filmnet/errors.hpp"

namespace filmnet {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& field, const std::string& source, std::size_t line) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw ParseError(source, line, "not a number: '" + field + "'");
  }
  if (!std::isfinite(v)) throw ParseError(source, line, "non-finite value '" + field + "'");
  return v;
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Rows>
void write_rows(const std::filesystem::path& path, const std::string& header, const WavelengthGrid& grid,
                const Rows& a, const Rows& b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << header << '\n';
  for (std::size_t i = 0; i < grid.count(); ++i) {
    os << format17(grid.at(i)) << ',' << format17(a[i]) << ',' << format17(b[i]) << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace

ColumnTable read_three_column_csv(const std::filesystem::path& path, const std::string& h0,
                                  const std::string& h1, const std::string& h2) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  const std::string source = path.string();

  ColumnTable t;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_commas(line);
    if (!header_seen) {
      if (f.size() != 3 || f[0] != h0 || f[1] != h1 || f[2] != h2) {
        throw ParseError(source, lineno, "expected header '" + h0 + "," + h1 + "," + h2 + "'");
      }
      header_seen = true;
      continue;
    }
    if (f.size() != 3) {
      throw ParseError(source, lineno, "expected 3 fields, found " + std::to_string(f.size()));
    }
    const double x = parse_number(f[0], source, lineno);
    if (!t.x.empty() && !(x > t.x.back())) {
      throw ParseError(source, lineno, "wavelengths must be strictly increasing");
    }
    t.x.push_back(x);
    t.a.push_back(parse_number(f[1], source, lineno));
    t.b.push_back(parse_number(f[2], source, lineno));
  }
  if (!header_seen) throw ParseError(source, lineno, "empty file");
  return t;
}

std::vector<double> resample_linear(const std::vector<double>& x, const std::vector<double>& y,
                                    const WavelengthGrid& grid, const std::string& source) {
  if (x.size() != y.size() || x.empty()) throw ShapeError("resample: mismatched or empty columns");
  if (grid.start_nm() < x.front() || grid.end_nm() > x.back()) {
    std::ostringstream os;
    os << (source.empty() ? std::string("spectrum") : source) << " covers [" << x.front() << ", "
       << x.back() << "] nm but [" << grid.start_nm() << ", " << grid.end_nm() << "] nm is required";
    throw CoverageError(os.str());
  }
  std::vector<double> out(grid.count());
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const double w = grid.at(i);
    const auto it = std::lower_bound(x.begin(), x.end(), w);
    const auto j = static_cast<std::size_t>(it - x.begin());
    if (*it == w) {
      out[i] = y[j];
      continue;
    }
    const double x0 = x[j - 1], x1 = x[j];
    out[i] = y[j - 1] + (y[j] - y[j - 1]) * (w - x0) / (x1 - x0);
  }
  return out;
}

LoadedIndex read_index_csv(const std::filesystem::path& path, const WavelengthGrid& grid) {
  const ColumnTable t = read_three_column_csv(path, "wavelength_nm", "n", "k");
  LoadedIndex out;
  out.spectrum.grid = grid;
  out.spectrum.n = resample_linear(t.x, t.a, grid, path.string());
  out.spectrum.k = resample_linear(t.x, t.b, grid, path.string());
  for (auto* v : {&out.spectrum.n, &out.spectrum.k}) {
    for (double& e : *v) {
      if (e < 0.0) {
        e = 0.0;
        ++out.clamped;
      }
    }
  }
  return out;
}

OpticalSpectra read_optical_csv(const std::filesystem::path& path, const WavelengthGrid& grid) {
  const ColumnTable t = read_three_column_csv(path, "wavelength_nm", "R", "T");
  OpticalSpectra s;
  s.grid = grid;
  s.R = resample_linear(t.x, t.a, grid, path.string());
  s.T = resample_linear(t.x, t.b, grid, path.string());
  return s;
}

void write_index_csv(const std::filesystem::path& path, const RefractiveIndexSpectrum& s) {
  write_rows(path, "wavelength_nm,n,k", s.grid, s.n, s.k);
}

void write_optical_csv(const std::filesystem::path& path, const OpticalSpectra& s) {
  write_rows(path, "wavelength_nm,R,T", s.grid, s.R, s.T);
}

}  // namespace filmnet
