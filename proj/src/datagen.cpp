#include "filmnet/datagen.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "filmnet/errors.hpp"
#include "filmnet/seeds.hpp"
#include "filmnet/spectrum_io.hpp"

namespace filmnet {

namespace {

constexpr char kSampleMagic[6] = {'T', 'H', 'K', 'D', '1', '\0'};

std::string tl_label(const TaucLorentzParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "TL(A=" << p.A << ",C=" << p.C << ",E0=" << p.E0 << ",Eg=" << p.Eg << ",eps_inf=" << p.eps_inf << ")";
  return os.str();
}

void append_samples(std::vector<Sample>& out, const RefractiveIndexSpectrum& index, std::uint32_t material_id,
                    std::size_t draws, const SplitSpec& spec, const SubstrateConfig& substrate,
                    const WavelengthGrid& grid) {
  for (std::size_t j = 0; j < draws; ++j) {
    Sample s;
    s.d_nm = draw_thickness(spec.seed, material_id, static_cast<std::uint32_t>(j), spec.d_min_nm, spec.d_max_nm);
    s.spectra = film_on_substrate_rt(index, s.d_nm, substrate, grid);
    s.index = index;
    s.material_id = material_id;
    out.push_back(std::move(s));
  }
}

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is, const std::string& source) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ParseError(source + ": truncated sample file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

nlohmann::json split_json(const std::string& file, const std::vector<Sample>& samples,
                          const std::vector<std::uint32_t>& ids, std::size_t d_per) {
  return {{"file", file}, {"samples", samples.size()}, {"materials", ids}, {"d_per_material", d_per}};
}

}  // namespace

double draw_thickness(std::uint64_t seed, std::uint32_t material_id, std::uint32_t draw, double lo, double hi) {
  return lo + (hi - lo) * unit_interval(derive_seed(seed, {0x44524157ULL, material_id, draw}));
}

DatasetSplit build_source_dataset(const SplitSpec& spec, const ParameterGridSpec& grid_spec,
                                  const SubstrateConfig& substrate, const WavelengthGrid& grid) {
  const std::vector<TaucLorentzParams> params = sample_parameter_grid(grid_spec, spec.material_count(), spec.seed);

  DatasetSplit out;
  out.spec = spec;
  out.kind = "source";
  out.substrate = substrate;
  out.train.reserve(spec.n_train * spec.d_per_train);
  out.validation.reserve(spec.n_val * spec.d_per_val);
  out.test.reserve(spec.n_test * spec.d_per_test);

  for (std::size_t m = 0; m < params.size(); ++m) {
    const auto id = static_cast<std::uint32_t>(m);
    out.materials.push_back({id, tl_label(params[m])});
    const RefractiveIndexSpectrum index = evaluate_spectrum(params[m], grid);
    if (m < spec.n_train) {
      append_samples(out.train, index, id, spec.d_per_train, spec, substrate, grid);
    } else if (m < spec.n_train + spec.n_val) {
      append_samples(out.validation, index, id, spec.d_per_val, spec, substrate, grid);
    } else {
      append_samples(out.test, index, id, spec.d_per_test, spec, substrate, grid);
    }
  }
  return out;
}

TargetSpectra load_target_spectra(const std::vector<std::filesystem::path>& files, const WavelengthGrid& grid) {
  TargetSpectra out;
  for (const auto& f : files) {
    LoadedIndex li = read_index_csv(f, grid);
    out.clamped += li.clamped;
    out.spectra.push_back(std::move(li.spectrum));
    out.labels.push_back(f.filename().string());
  }
  return out;
}

DatasetSplit build_target_dataset(const std::vector<RefractiveIndexSpectrum>& spectra, std::size_t n_train,
                                  std::size_t d_per_train, std::size_t d_per_test, std::uint64_t seed,
                                  const SubstrateConfig& substrate, std::vector<std::string> labels) {
  if (n_train > spectra.size()) {
    throw DomainError("n_train = " + std::to_string(n_train) + " exceeds the " +
                      std::to_string(spectra.size()) + " available spectra");
  }
  std::vector<std::uint32_t> order(spectra.size());
  std::iota(order.begin(), order.end(), 0u);
  SplitMix64 rng(derive_seed(seed, {0x53504C54ULL}));
  portable_shuffle(order.begin(), order.end(), rng);

  DatasetSplit out;
  out.kind = "target";
  out.substrate = substrate;
  out.spec.n_train = n_train;
  out.spec.n_val = 0;
  out.spec.n_test = spectra.size() - n_train;
  out.spec.d_per_train = d_per_train;
  out.spec.d_per_val = 0;
  out.spec.d_per_test = d_per_test;
  out.spec.seed = seed;

  for (std::uint32_t id = 0; id < spectra.size(); ++id) {
    out.materials.push_back({id, id < labels.size() ? labels[id] : "target-" + std::to_string(id)});
  }
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::uint32_t id = order[pos];
    const RefractiveIndexSpectrum& index = spectra[id];
    if (pos < n_train) {
      append_samples(out.train, index, id, d_per_train, out.spec, substrate, index.grid);
    } else {
      append_samples(out.test, index, id, d_per_test, out.spec, substrate, index.grid);
    }
  }
  return out;
}

std::vector<TwoOscillatorParams> pseudo_target_parameters(std::size_t count, std::uint64_t seed) {
  std::vector<TwoOscillatorParams> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SplitMix64 rng(derive_seed(seed, {0x50534454ULL, i}));
    TwoOscillatorParams p;
    const double gap = rng.uniform(1.50, 1.75);
    p.first = {rng.uniform(20.0, 80.0), rng.uniform(0.8, 2.5), gap + rng.uniform(0.6, 1.5), gap, 0.0};
    p.second = {rng.uniform(20.0, 100.0), rng.uniform(1.5, 4.0), rng.uniform(3.6, 5.5), gap, 0.0};
    p.eps_inf = rng.uniform(1.0, 2.0);
    out.push_back(p);
  }
  return out;
}

RefractiveIndexSpectrum evaluate_two_oscillator(const TwoOscillatorParams& p, const WavelengthGrid& grid) {
  RefractiveIndexSpectrum s{grid, std::vector<double>(grid.count()), std::vector<double>(grid.count())};
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const double E = photon_energy(grid.at(i));
    const DielectricPoint a = dielectric_at_energy(p.first, E);
    const DielectricPoint b = dielectric_at_energy(p.second, E);
    const ComplexIndex nk = nk_from_dielectric(p.eps_inf + (a.eps_r - p.first.eps_inf) + (b.eps_r - p.second.eps_inf),
                                               a.eps_i + b.eps_i);
    s.n[i] = nk.n;
    s.k[i] = nk.k;
  }
  return s;
}

std::vector<RefractiveIndexSpectrum> pseudo_target_generator(std::size_t count, std::uint64_t seed,
                                                             const WavelengthGrid& grid) {
  if (count == 0) throw DomainError("pseudo-target count must be positive");
  std::vector<RefractiveIndexSpectrum> out;
  for (const TwoOscillatorParams& p : pseudo_target_parameters(count, seed)) {
    out.push_back(evaluate_two_oscillator(p, grid));
  }
  return out;
}

void write_samples(const std::filesystem::path& path, const std::vector<Sample>& samples, const WavelengthGrid& grid) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(kSampleMagic, sizeof kSampleMagic);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(samples.size()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(grid.count()));
  for (const Sample& s : samples) {
    if (s.spectra.R.size() != grid.count() || s.index.n.size() != grid.count()) {
      throw ShapeError("sample is not on the dataset grid");
    }
    put_le(os, s.d_nm);
    for (const auto* v : {&s.spectra.R, &s.spectra.T, &s.index.n, &s.index.k}) {
      for (double x : *v) put_le(os, x);
    }
  }
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<Sample> read_samples(const std::filesystem::path& path, const WavelengthGrid& grid,
                                 const std::vector<std::uint32_t>& material_ids, std::size_t d_per_material) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const std::string source = path.string();
  char magic[6];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kSampleMagic, sizeof magic) != 0) {
    throw ParseError(source + ": bad magic, not a sample file");
  }
  const auto count = get_le<std::uint32_t>(is, source);
  const auto points = get_le<std::uint32_t>(is, source);
  if (points != grid.count()) throw ShapeError(source + ": grid count does not match the manifest");
  if (count != material_ids.size() * d_per_material) {
    throw ShapeError(source + ": sample count does not match the manifest");
  }
  std::vector<Sample> out(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Sample& s = out[i];
    s.d_nm = get_le<double>(is, source);
    s.spectra.grid = grid;
    s.index.grid = grid;
    for (auto* v : {&s.spectra.R, &s.spectra.T, &s.index.n, &s.index.k}) {
      v->resize(points);
      for (double& x : *v) x = get_le<double>(is, source);
    }
    s.material_id = material_ids[i / d_per_material];
  }
  if (is.peek() != std::char_traits<char>::eof()) throw ParseError(source + ": trailing bytes");
  return out;
}

std::vector<std::uint32_t> material_ids(const std::vector<Sample>& samples) {
  std::vector<std::uint32_t> ids;
  for (const Sample& s : samples) {
    if (ids.empty() || ids.back() != s.material_id) ids.push_back(s.material_id);
  }
  return ids;
}

void save_dataset(const std::filesystem::path& dir, const DatasetSplit& split) {
  const SubstrateConfig& substrate = split.substrate;
  std::filesystem::create_directories(dir);
  const WavelengthGrid grid = !split.train.empty()        ? split.train.front().spectra.grid
                              : !split.validation.empty() ? split.validation.front().spectra.grid
                              : !split.test.empty()       ? split.test.front().spectra.grid
                                                          : WavelengthGrid::canonical();
  write_samples(dir / "train.bin", split.train, grid);
  write_samples(dir / "validation.bin", split.validation, grid);
  write_samples(dir / "test.bin", split.test, grid);

  nlohmann::json materials = nlohmann::json::array();
  for (const MaterialRecord& m : split.materials) materials.push_back({{"id", m.id}, {"label", m.label}});

  // ids are listed explicitly: an empty split would otherwise lose them.
  auto ids_of = [&](const std::vector<Sample>& s, std::size_t n_materials, std::size_t d_per,
                    std::size_t offset) {
    if (!s.empty() || d_per != 0) return material_ids(s);
    std::vector<std::uint32_t> ids;
    if (split.kind == "source") {
      for (std::size_t i = 0; i < n_materials; ++i) ids.push_back(static_cast<std::uint32_t>(offset + i));
    }
    return ids;
  };
  const SplitSpec& sp = split.spec;
  nlohmann::json m = {
      {"format", "filmnet-dataset"},
      {"generator_version", split.generator_version},
      {"kind", split.kind},
      {"seed", sp.seed},
      {"grid", {{"start_nm", grid.start_nm()}, {"end_nm", grid.end_nm()}, {"step_nm", grid.step_nm()}}},
      {"thickness_range_nm", {sp.d_min_nm, sp.d_max_nm}},
      {"substrate",
       {{"n", substrate.n},
        {"thickness_nm", substrate.thickness_nm},
        {"coherence", substrate.coherence == Coherence::coherent ? "coherent" : "incoherent"}}},
      {"counts", {{"n_train", sp.n_train}, {"n_val", sp.n_val}, {"n_test", sp.n_test}}},
      {"splits",
       {{"train", split_json("train.bin", split.train, ids_of(split.train, sp.n_train, sp.d_per_train, 0), sp.d_per_train)},
        {"validation", split_json("validation.bin", split.validation,
                                  ids_of(split.validation, sp.n_val, sp.d_per_val, sp.n_train), sp.d_per_val)},
        {"test", split_json("test.bin", split.test,
                            ids_of(split.test, sp.n_test, sp.d_per_test, sp.n_train + sp.n_val), sp.d_per_test)}}},
      {"materials", materials},
  };
  std::ofstream os(dir / "manifest.json", std::ios::binary);
  if (!os) throw IoError("cannot write manifest in " + dir.string());
  os << m.dump(2) << '\n';
}

DatasetSplit load_dataset(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw IoError("no manifest.json in " + dir.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "manifest.json").string() + ": " + e.what());
  }
  try {
    DatasetSplit out;
    out.generator_version = m.at("generator_version").get<std::string>();
    out.kind = m.at("kind").get<std::string>();
    const auto& g = m.at("grid");
    const WavelengthGrid grid(g.at("start_nm").get<double>(), g.at("end_nm").get<double>(), g.at("step_nm").get<double>());
    SplitSpec& sp = out.spec;
    sp.seed = m.at("seed").get<std::uint64_t>();
    const auto& sub = m.at("substrate");
    out.substrate.n = sub.at("n").get<double>();
    out.substrate.thickness_nm = sub.at("thickness_nm").get<double>();
    out.substrate.coherence = sub.at("coherence").get<std::string>() == "coherent" ? Coherence::coherent
                                                                                   : Coherence::incoherent;
    sp.d_min_nm = m.at("thickness_range_nm").at(0).get<double>();
    sp.d_max_nm = m.at("thickness_range_nm").at(1).get<double>();
    sp.n_train = m.at("counts").at("n_train").get<std::size_t>();
    sp.n_val = m.at("counts").at("n_val").get<std::size_t>();
    sp.n_test = m.at("counts").at("n_test").get<std::size_t>();
    for (const auto& mat : m.at("materials")) {
      out.materials.push_back({mat.at("id").get<std::uint32_t>(), mat.at("label").get<std::string>()});
    }
    auto load = [&](const char* name, std::vector<Sample>& dst, std::size_t& d_per) {
      const auto& s = m.at("splits").at(name);
      d_per = s.at("d_per_material").get<std::size_t>();
      const auto ids = s.at("materials").get<std::vector<std::uint32_t>>();
      dst = read_samples(dir / s.at("file").get<std::string>(), grid, ids, d_per);
    };
    load("train", out.train, sp.d_per_train);
    load("validation", out.validation, sp.d_per_val);
    load("test", out.test, sp.d_per_test);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "manifest.json").string() + ": " + e.what());
  }
}

}  // namespace filmnet
