#include "filmnet/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "filmnet/errors.hpp"
#include "filmnet/nn/training.hpp"
#include "filmnet/seeds.hpp"

namespace filmnet {

std::vector<double> relative_deviations(std::span<const double> preds, std::span<const double> actuals) {
  if (preds.size() != actuals.size()) throw ShapeError("predictions and actuals differ in length");
  std::vector<double> out(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!(actuals[i] > 0.0)) throw DomainError("actual values must be positive for relative deviation");
    out[i] = std::abs(preds[i] - actuals[i]) / actuals[i];
  }
  return out;
}

double within_deviation_accuracy(std::span<const double> preds, std::span<const double> actuals, double threshold) {
  return accuracy_report(preds, actuals, threshold).fraction_within;
}

double mape(std::span<const double> preds, std::span<const double> actuals) {
  return accuracy_report(preds, actuals).mape;
}

AccuracyReport accuracy_report(std::span<const double> preds, std::span<const double> actuals, double threshold) {
  AccuracyReport r;
  r.deviations = relative_deviations(preds, actuals);
  if (r.deviations.empty()) return r;
  const auto hits = std::count_if(r.deviations.begin(), r.deviations.end(), [&](double d) { return d <= threshold; });
  r.fraction_within = static_cast<double>(hits) / static_cast<double>(r.deviations.size());
  r.mape = 100.0 * std::accumulate(r.deviations.begin(), r.deviations.end(), 0.0) /
           static_cast<double>(r.deviations.size());
  return r;
}

double spectrum_deviation(std::span<const double> pred, std::span<const double> actual, double floor) {
  if (pred.size() != actual.size() || pred.empty()) throw ShapeError("spectra must share a non-empty grid");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum += std::abs(pred[i] - actual[i]) / std::max(std::abs(actual[i]), floor);
  }
  return sum / static_cast<double>(pred.size());
}

double spectrum_accuracy(const std::vector<std::vector<double>>& preds, const std::vector<std::vector<double>>& actuals,
                         double threshold, double floor) {
  if (preds.size() != actuals.size()) throw ShapeError("spectrum lists differ in length");
  if (preds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (spectrum_deviation(preds[i], actuals[i], floor) <= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd m;
  m.count = values.size();
  if (values.empty()) return m;
  // identical members give exactly their value and a zero spread
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    m.mean = values.front();
    return m;
  }
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(values.size()));
  return m;
}

ReconstructionResidual reconstruction_residual(double d_nm, const RefractiveIndexSpectrum& index,
                                               const OpticalSpectra& actual, const SubstrateConfig& substrate) {
  if (!(actual.grid == index.grid)) throw ShapeError("reconstruction needs spectra and index on one grid");
  const OpticalSpectra sim = reconstruct_spectra(d_nm, index, substrate);
  ReconstructionResidual r;
  r.dR.resize(sim.R.size());
  r.dT.resize(sim.T.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < sim.R.size(); ++i) {
    r.dR[i] = sim.R[i] - actual.R[i];
    r.dT[i] = sim.T[i] - actual.T[i];
    ss += r.dR[i] * r.dR[i] + r.dT[i] * r.dT[i];
  }
  r.rms = std::sqrt(ss / static_cast<double>(2 * sim.R.size()));
  return r;
}

ActivationMaps activation_maps(const nn::ModelWeights<double>& w, const OpticalSpectra& sample, int filters_per_layer,
                               std::uint64_t seed) {
  if (filters_per_layer <= 0) throw DomainError("filters_per_layer must be positive");
  const auto acts = nn::conv_activations(w, nn::spectra_to_input<double>(sample));
  ActivationMaps out;
  for (std::size_t s = 0; s < acts.size(); ++s) {
    const int width = static_cast<int>(acts[s].rows());
    int take = filters_per_layer;
    if (take > width) {
      take = width;
      out.clamped_stages.push_back(s);
    }
    std::vector<int> all(static_cast<std::size_t>(width));
    std::iota(all.begin(), all.end(), 0);
    SplitMix64 rng(derive_seed(seed, {0x41435453ULL, s}));
    portable_shuffle(all.begin(), all.end(), rng);
    std::vector<int> chosen(all.begin(), all.begin() + take);
    std::sort(chosen.begin(), chosen.end());

    nn::Mat<double> m(take, acts[s].cols());
    for (int r = 0; r < take; ++r) m.row(r) = acts[s].row(chosen[static_cast<std::size_t>(r)]);
    out.filters.push_back(std::move(chosen));
    out.maps.push_back(std::move(m));
  }
  return out;
}

std::vector<std::filesystem::path> write_activation_csvs(const std::filesystem::path& dir, const ActivationMaps& maps) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (std::size_t s = 0; s < maps.maps.size(); ++s) {
    const auto path = dir / ("activations_layer" + std::to_string(s + 1) + ".csv");
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    const auto& m = maps.maps[s];
    os << "filter";
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << ',' << c;
    os << '\n';
    char buf[40];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      os << maps.filters[s][static_cast<std::size_t>(r)];
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
        os << ',' << buf;
      }
      os << '\n';
    }
    paths.push_back(path);
  }
  return paths;
}

std::span<const FilmPair> deposition_films() {
  static constexpr std::array<FilmPair, 6> kFilms{{
      {154.17, 122.8},
      {99.29, 101.3},
      {389.89, 418.5},
      {265.07, 256.0},
      {460.35, 489.9},
      {311.15, 373.8},
  }};
  return kFilms;
}

}  // namespace filmnet
