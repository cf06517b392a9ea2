#include "filmnet/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "filmnet/datagen.hpp"
#include "filmnet/errors.hpp"
#include "filmnet/metrics.hpp"
#include "filmnet/nn/checkpoint.hpp"
#include "filmnet/spectrum_io.hpp"
#include "filmnet/thickness_fit.hpp"
#include "filmnet/workflow.hpp"

namespace filmnet::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "0.1.0";

const std::map<std::string, nn::Precision> kPrecisions{{"f64", nn::Precision::f64}, {"f32", nn::Precision::f32}};
const std::map<std::string, nn::TaskMode> kModes{{"stl", nn::TaskMode::stl}, {"mtl", nn::TaskMode::mtl}};
const std::map<std::string, Coherence> kCoherence{{"incoherent", Coherence::incoherent},
                                                  {"coherent", Coherence::coherent}};
const std::map<std::string, Stage> kRetrainModes{{"partial", Stage::retrain_partial}, {"full", Stage::retrain_full}};

std::string default_output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? env : "runs";
}

// Options shared by several subcommands. Each subcommand owns its own copy so
// config sections never leak between them.
struct SubstrateOpts {
  double n = 1.52;
  double thickness_nm = 1.0e6;
  Coherence coherence = Coherence::incoherent;

  void add(CLI::App* app) {
    app->add_option("--substrate-n", n, "Substrate refractive index")->capture_default_str();
    app->add_option("--substrate-thickness", thickness_nm, "Substrate thickness (nm)")->capture_default_str();
    app->add_option("--substrate", coherence, "Substrate treatment")
        ->transform(CLI::CheckedTransformer(kCoherence, CLI::ignore_case))
        ->default_str("incoherent");
  }
  SubstrateConfig get() const { return {n, thickness_nm, coherence}; }
};

struct ScheduleOpts {
  nn::TrainSchedule s;

  void add(CLI::App* app, std::uint32_t default_epochs) {
    s.epochs = default_epochs;
    app->add_option("--epochs", s.epochs, "Training epochs")->capture_default_str();
    app->add_option("--batch-size", s.batch_size, "Mini-batch size")->capture_default_str();
    app->add_option("--learning-rate", s.learning_rate, "AdaGrad learning rate")->capture_default_str();
    app->add_option("--reset-start", s.reset_start, "First accumulator reset (epochs)")->capture_default_str();
    app->add_option("--reset-every", s.reset_every, "Accumulator reset period (0 disables)")->capture_default_str();
    app->add_option("--precision", s.precision, "Training arithmetic")
        ->transform(CLI::CheckedTransformer(kPrecisions, CLI::ignore_case))
        ->default_str("f64");
  }
};

// Architecture overrides on top of the default network. Stages are
// kernel:filters:pool; head lists give the hidden widths only.
struct NetworkOpts {
  std::string json_file;
  nn::TaskMode mode = nn::TaskMode::stl;
  std::vector<std::string> conv;
  std::vector<int> d_hidden;
  std::vector<int> nk_hidden;
  double dropout = 0.3;

  void add(CLI::App* app) {
    app->add_option("--network", json_file, "Network config JSON (overrides the built-in architecture)");
    app->add_option("--task", mode, "stl (thickness) or mtl (thickness, n, k)")
        ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case))
        ->default_str("stl");
    app->add_option("--conv", conv, "Conv stages as kernel:filters:pool");
    app->add_option("--d-hidden", d_hidden, "Hidden widths of the thickness head");
    app->add_option("--nk-hidden", nk_hidden, "Hidden widths of the n and k heads");
    app->add_option("--dropout", dropout, "Dropout rate of hidden dense layers")->capture_default_str();
  }

  nn::NetworkConfig build(int in_length) const {
    nn::NetworkConfig c;
    if (!json_file.empty()) {
      std::ifstream is(json_file);
      if (!is) throw IoError("cannot open " + json_file);
      std::stringstream ss;
      ss << is.rdbuf();
      c = nn::NetworkConfig::from_json(ss.str());
    } else {
      c = nn::NetworkConfig::full_scale(mode);
      c.dropout = dropout;
    }
    c.mode = mode;
    c.in_length = in_length;
    if (!conv.empty()) {
      c.conv.clear();
      for (const std::string& s : conv) {
        nn::ConvStage st;
        char a = 0, b = 0;
        std::istringstream is(s);
        if (!(is >> st.kernel >> a >> st.filters >> b >> st.pool) || a != ':' || b != ':' || !is.eof()) {
          throw ConfigError("bad conv stage '" + s + "', expected kernel:filters:pool");
        }
        c.conv.push_back(st);
      }
    }
    if (!d_hidden.empty()) {
      c.d_head = d_hidden;
      c.d_head.push_back(1);
    }
    if (!nk_hidden.empty()) {
      c.n_head = nk_hidden;
      c.n_head.push_back(in_length);
      c.k_head = c.n_head;
    }
    if (c.n_head.back() != in_length) c.n_head.back() = in_length;
    if (c.k_head.back() != in_length) c.k_head.back() = in_length;
    c.validate();
    return c;
  }
};

// Target material spectra from n,k CSV files or from the pseudo-target generator.
struct TargetOpts {
  std::vector<std::string> files;
  std::size_t pseudo = 0;
  std::uint64_t pseudo_seed = 0;
  std::size_t train_spectra = 13;
  std::size_t d_train = kTransferDPerTrain;
  std::size_t d_test = kTargetDPerTest;
  std::size_t splits = 1;

  void add(CLI::App* app, std::size_t default_d_train) {
    d_train = default_d_train;
    app->add_option("--targets", files, "Target n,k CSV files (wavelength_nm,n,k); wins over --pseudo-targets");
    app->add_option("--pseudo-targets", pseudo, "Use N generated two-oscillator spectra");
    app->add_option("--pseudo-seed", pseudo_seed, "Seed of the generated spectra")->capture_default_str();
    app->add_option("--train-spectra", train_spectra, "Target spectra used for training")->capture_default_str();
    app->add_option("--d-train", d_train, "Thicknesses per training spectrum")->capture_default_str();
    app->add_option("--d-test", d_test, "Thicknesses per test spectrum")->capture_default_str();
    app->add_option("--splits", splits, "Random target splits")->capture_default_str();
  }

  TargetSpectra load() const {
    if (!files.empty()) {
      std::vector<fs::path> paths(files.begin(), files.end());
      return load_target_spectra(paths);
    }
    if (pseudo == 0) throw ConfigError("give --targets files or --pseudo-targets N");
    TargetSpectra t;
    t.spectra = pseudo_target_generator(pseudo, pseudo_seed);
    for (std::size_t i = 0; i < pseudo; ++i) t.labels.push_back("pseudo_" + std::to_string(i));
    return t;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::vector<std::string> args;
  std::string output_root;
  std::uint64_t seed = 0;
};

fs::path output_dir(const Context& ctx, const std::string& explicit_dir, const std::string& name) {
  fs::path p = explicit_dir.empty() ? fs::path(ctx.output_root) / name : fs::path(explicit_dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
  return p;
}

// Everything needed to re-run the command: arguments, the resolved option
// values (as a loadable config section), seeds and versions. No timestamps,
// so reruns produce identical files.
void write_provenance(const fs::path& dir, const Context& ctx, const CLI::App& sub, nlohmann::json extra = {}) {
  nlohmann::json j;
  j["command"] = sub.get_name();
  j["arguments"] = ctx.args;
  j["resolved_config"] = sub.config_to_str(true, false);
  j["seed"] = ctx.seed;
  j["tool_version"] = kToolVersion;
  j["generator_version"] = kGeneratorVersion;
  if (!extra.is_null()) j["details"] = std::move(extra);
  std::ofstream os(dir / "provenance.json");
  if (!os) throw IoError("cannot write " + (dir / "provenance.json").string());
  os << j.dump(2) << '\n';
}

std::vector<nn::ModelWeights<double>> load_checkpoints(const std::vector<std::string>& files) {
  std::vector<nn::ModelWeights<double>> out;
  for (const std::string& f : files) out.push_back(nn::load_checkpoint(f));
  return out;
}

std::vector<fs::path> save_checkpoints(const fs::path& dir, const std::string& prefix,
                                       const std::vector<nn::ModelWeights<double>>& ckpts,
                                       const std::vector<std::uint64_t>& seeds) {
  std::vector<fs::path> paths;
  for (std::size_t i = 0; i < ckpts.size(); ++i) {
    paths.push_back(dir / (prefix + "seed" + std::to_string(seeds[i]) + ".ckpt"));
    nn::save_checkpoint(paths.back(), ckpts[i]);
  }
  return paths;
}

std::vector<std::uint64_t> ensemble_seeds(std::uint64_t master, std::size_t n) {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(master + i + 1);
  return s;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

void print_aggregate(std::ostream& os, const std::vector<AggregateRow>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %7s %5s %18s %18s\n", "stage", "spectra", "runs", "d within 10% (%)",
                "d MAPE (%)");
  os << buf;
  for (const AggregateRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %7zu %5zu %9.2f ± %6.2f %9.2f ± %6.2f\n", to_string(r.stage).c_str(),
                  r.retrain_count, r.d_accuracy.count, 100 * r.d_accuracy.mean, 100 * r.d_accuracy.std, r.d_mape.mean,
                  r.d_mape.std);
    os << buf;
    if (r.n_accuracy) {
      std::snprintf(buf, sizeof buf, "%-29s n within 10%%: %.2f ± %.2f  k within 10%%: %.2f ± %.2f\n", "",
                    100 * r.n_accuracy->mean, 100 * r.n_accuracy->std, 100 * r.k_accuracy->mean,
                    100 * r.k_accuracy->std);
      os << buf;
    }
  }
}

void write_reports(const fs::path& dir, const std::vector<RunRecord>& runs) {
  write_runs_csv(dir / "runs.csv", runs);
  write_aggregate_csv(dir / "aggregate.csv", aggregate_runs(runs));
  write_predictions_csv(dir / "predictions.csv", runs);
  write_loss_csv(dir / "loss.csv", runs);
}

int in_length_of(const std::vector<Sample>& samples) {
  if (samples.empty()) throw DomainError("dataset has no samples");
  return static_cast<int>(samples.front().spectra.grid.count());
}

// ---------------------------------------------------------------------------

struct SimulateCmd {
  SplitSpec spec;
  double eps_inf = 1.0;
  std::string out_dir;
  SubstrateOpts substrate;

  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("simulate", "Build the simulated source dataset");
    c->add_option("--train-materials", spec.n_train, "Training materials")->capture_default_str();
    c->add_option("--val-materials", spec.n_val, "Validation materials")->capture_default_str();
    c->add_option("--test-materials", spec.n_test, "Test materials")->capture_default_str();
    c->add_option("--d-train", spec.d_per_train, "Thicknesses per training material")->capture_default_str();
    c->add_option("--d-val", spec.d_per_val, "Thicknesses per validation material")->capture_default_str();
    c->add_option("--d-test", spec.d_per_test, "Thicknesses per test material")->capture_default_str();
    c->add_option("--d-min", spec.d_min_nm, "Smallest thickness (nm)")->capture_default_str();
    c->add_option("--d-max", spec.d_max_nm, "Largest thickness (nm)")->capture_default_str();
    c->add_option("--eps-inf", eps_inf, "High-frequency dielectric constant")->capture_default_str();
    c->add_option("--out", out_dir, "Dataset directory (default <root>/source)");
    substrate.add(c);
    return c;
  }

  void run(Context& ctx, const CLI::App& sub) {
    spec.seed = ctx.seed;
    ParameterGridSpec grid;
    grid.eps_inf = eps_inf;
    const fs::path dir = output_dir(ctx, out_dir, "source");
    const DatasetSplit d = build_source_dataset(spec, grid, substrate.get());
    save_dataset(dir, d);
    write_provenance(dir, ctx, sub,
                     {{"train", d.train.size()}, {"validation", d.validation.size()}, {"test", d.test.size()}});
    ctx.out << "train " << d.train.size() << "\nvalidation " << d.validation.size() << "\ntest " << d.test.size()
            << "\nwritten to " << dir.string() << '\n';
  }
};

struct PretrainCmd {
  std::string dataset;
  std::string out_dir;
  std::size_t ensemble = 3;
  NetworkOpts network;
  ScheduleOpts schedule;
  bool direct = false;
  TargetOpts targets;
  SubstrateOpts substrate;

  CLI::App* add(CLI::App& app, bool direct_mode) {
    direct = direct_mode;
    CLI::App* c = direct ? app.add_subcommand("direct", "Train from random weights on target data only")
                         : app.add_subcommand("pretrain", "Train the ensemble on the source dataset");
    if (direct) {
      targets.add(c, kDirectDPerTrain);
      substrate.add(c);
    } else {
      c->add_option("--dataset", dataset, "Source dataset directory")->required();
    }
    c->add_option("--ensemble", ensemble, "Ensemble members (seeds seed+1 … seed+N)")->capture_default_str();
    c->add_option("--out", out_dir, "Output directory");
    network.add(c);
    schedule.add(c, 2000);
    return c;
  }

  void run(Context& ctx, const CLI::App& sub) {
    if (ensemble == 0) throw ConfigError("--ensemble must be at least 1");
    ExperimentPlan plan;
    plan.schedule = schedule.s;
    plan.ensemble_seeds = ensemble_seeds(ctx.seed, ensemble);
    plan.eval_precision = schedule.s.precision;
    const fs::path dir = output_dir(ctx, out_dir, direct ? "direct" : "pretrain");
    std::vector<RunRecord> runs;
    nlohmann::json files = nlohmann::json::array();

    auto train_one = [&](const DatasetSplit& data, std::size_t split, const std::string& prefix) {
      plan.network = network.build(in_length_of(data.train));
      ExperimentResult r = direct ? direct_train(plan, data) : pretrain(plan, data);
      for (RunRecord& rec : r.runs) {
        rec.split = split;
        runs.push_back(std::move(rec));
      }
      for (const fs::path& p : save_checkpoints(dir, prefix, r.checkpoints, plan.ensemble_seeds)) {
        files.push_back(p.filename().string());
      }
    };

    nlohmann::json details;
    if (direct) {
      const TargetSpectra t = targets.load();
      for (std::size_t s = 0; s < targets.splits; ++s) {
        const DatasetSplit data = build_target_dataset(t.spectra, targets.train_spectra, targets.d_train,
                                                       targets.d_test, split_seed(ctx.seed, s), substrate.get(),
                                                       t.labels);
        train_one(data, s, "split" + std::to_string(s) + "_");
      }
    } else {
      const DatasetSplit data = load_dataset(dataset);
      train_one(data, 0, "");
    }
    write_reports(dir, runs);
    details["checkpoints"] = files;
    details["ensemble_seeds"] = plan.ensemble_seeds;
    details["train_samples"] = runs.empty() ? 0 : runs.front().train_samples;
    write_provenance(dir, ctx, sub, details);
    print_aggregate(ctx.out, aggregate_runs(runs));
  }
};

struct RetrainCmd {
  std::vector<std::string> checkpoints;
  Stage mode = Stage::retrain_partial;
  std::vector<std::size_t> counts;
  std::string out_dir;
  ScheduleOpts schedule;
  TargetOpts targets;
  SubstrateOpts substrate;

  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("retrain", "Transfer pretrained checkpoints to target data");
    c->add_option("--checkpoint", checkpoints, "Pretrained checkpoint files")->required();
    c->add_option("--mode", mode, "partial (frozen conv trunk) or full")
        ->transform(CLI::CheckedTransformer(kRetrainModes, CLI::ignore_case))
        ->default_str("partial");
    c->add_option("--sweep", counts, "Sweep these training-spectrum counts instead of --train-spectra");
    c->add_option("--out", out_dir, "Output directory");
    targets.add(c, kTransferDPerTrain);
    substrate.add(c);
    schedule.add(c, 200);
    return c;
  }

  void run(Context& ctx, const CLI::App& sub) {
    const auto sources = load_checkpoints(checkpoints);
    ExperimentPlan plan;
    plan.network = sources.front().config;
    plan.retrain_schedule = schedule.s;
    plan.eval_precision = schedule.s.precision;
    plan.ensemble_seeds = ensemble_seeds(ctx.seed, sources.size());
    plan.n_splits = targets.splits;
    plan.split_seed = ctx.seed;
    plan.d_per_train = targets.d_train;
    plan.d_per_test = targets.d_test;
    plan.substrate = substrate.get();
    const TargetSpectra t = targets.load();
    const fs::path dir = output_dir(ctx, out_dir, "retrain");

    std::vector<RunRecord> runs;
    nlohmann::json details;
    if (!counts.empty()) {
      plan.sweep_counts = counts;
      SweepResult r = sweep_retrain_count(sources, t.spectra, mode, plan);
      runs = std::move(r.runs);
    } else {
      nlohmann::json files = nlohmann::json::array();
      for (std::size_t s = 0; s < targets.splits; ++s) {
        const DatasetSplit data = build_target_dataset(t.spectra, targets.train_spectra, targets.d_train,
                                                       targets.d_test, split_seed(ctx.seed, s), plan.substrate,
                                                       t.labels);
        ExperimentResult r = retrain_ensemble(sources, data, mode, plan, s);
        for (const fs::path& p :
             save_checkpoints(dir, "split" + std::to_string(s) + "_", r.checkpoints, plan.ensemble_seeds)) {
          files.push_back(p.filename().string());
        }
        for (RunRecord& rec : r.runs) runs.push_back(std::move(rec));
      }
      details["checkpoints"] = files;
    }
    write_reports(dir, runs);
    details["sources"] = checkpoints;
    details["ensemble_seeds"] = plan.ensemble_seeds;
    write_provenance(dir, ctx, sub, details);
    print_aggregate(ctx.out, aggregate_runs(runs));
  }
};

struct PredictCmd {
  std::vector<std::string> checkpoints;
  std::vector<std::string> spectra;
  std::string out_dir;
  nn::Precision precision = nn::Precision::f64;

  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("predict", "Ensemble thickness prediction from measured R, T spectra");
    c->add_option("--checkpoint", checkpoints, "Checkpoint files")->required();
    c->add_option("--spectra", spectra, "R,T CSV files (wavelength_nm,R,T)")->required();
    c->add_option("--out", out_dir, "Output directory");
    c->add_option("--precision", precision, "Inference arithmetic")
        ->transform(CLI::CheckedTransformer(kPrecisions, CLI::ignore_case))
        ->default_str("f64");
    return c;
  }

  void run(Context& ctx, const CLI::App& sub) {
    const auto ckpts = load_checkpoints(checkpoints);
    std::vector<OpticalSpectra> input;
    for (const std::string& f : spectra) input.push_back(read_optical_csv(f, WavelengthGrid::canonical()));
    const EnsemblePrediction p = ensemble_predict(ckpts, input, precision);
    const fs::path dir = output_dir(ctx, out_dir, "predict");
    std::ofstream os(dir / "predictions.csv");
    if (!os) throw IoError("cannot write " + (dir / "predictions.csv").string());
    os << "file,d_mean_nm,d_std_nm\n";
    char buf[128];
    for (std::size_t i = 0; i < spectra.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", p.mean_nm[i], p.std_nm[i]);
      os << fs::path(spectra[i]).filename().string() << buf;
      std::snprintf(buf, sizeof buf, "%.1f ± %.1f nm", p.mean_nm[i], p.std_nm[i]);
      ctx.out << spectra[i] << ": " << buf << '\n';
    }
    write_provenance(dir, ctx, sub);
  }
};

struct EvaluateCmd {
  std::vector<std::string> checkpoints;
  std::string dataset;
  std::string split = "test";
  bool films = false;
  double threshold = 0.10;
  std::string out_dir;
  nn::Precision precision = nn::Precision::f64;

  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("evaluate", "Accuracy and MAPE of checkpoints on a labelled split");
    auto* ck = c->add_option("--checkpoint", checkpoints, "Checkpoint files");
    auto* ds = c->add_option("--dataset", dataset, "Dataset directory");
    auto* fl = c->add_flag("--deposition-films", films, "Score the six deposited-film predictions instead");
    fl->excludes(ck)->excludes(ds);
    c->add_option("--split", split, "train, validation or test")
        ->check(CLI::IsMember({"train", "validation", "test"}))
        ->capture_default_str();
    c->add_option("--threshold", threshold, "Relative deviation counted as accurate")->capture_default_str();
    c->add_option("--out", out_dir, "Output directory");
    c->add_option("--precision", precision, "Inference arithmetic")
        ->transform(CLI::CheckedTransformer(kPrecisions, CLI::ignore_case))
        ->default_str("f64");
    return c;
  }

  void print_block(std::ostream& os, const std::string& label, std::size_t n, double acc, double err) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s samples %6zu  within %.0f%%: %6s %%  MAPE: %.2f %%\n", label.c_str(), n,
                  100 * threshold, percent(acc).c_str(), err);
    os << buf;
  }

  void run(Context& ctx, const CLI::App& sub) {
    const fs::path dir = output_dir(ctx, out_dir, "evaluate");
    std::ofstream os(dir / "evaluation.csv");
    if (!os) throw IoError("cannot write " + (dir / "evaluation.csv").string());
    os << "model,samples,d_accuracy,d_mape_pct\n";
    char buf[128];

    if (films) {
      std::vector<double> pred, meas;
      for (const FilmPair& f : deposition_films()) {
        pred.push_back(f.predicted_nm);
        meas.push_back(f.measured_nm);
      }
      const AccuracyReport r = accuracy_report(pred, meas, threshold);
      print_block(ctx.out, "deposition films", pred.size(), r.fraction_within, r.mape);
      std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g\n", pred.size(), r.fraction_within, r.mape);
      os << "deposition_films" << buf;
      write_provenance(dir, ctx, sub);
      return;
    }
    if (checkpoints.empty() || dataset.empty()) throw ConfigError("evaluate needs --checkpoint and --dataset");

    const DatasetSplit d = load_dataset(dataset);
    const std::vector<Sample>& samples = split == "train" ? d.train : split == "validation" ? d.validation : d.test;
    ExperimentPlan plan;
    plan.threshold = threshold;
    plan.eval_precision = precision;
    const auto ckpts = load_checkpoints(checkpoints);
    for (std::size_t i = 0; i < ckpts.size(); ++i) {
      const RunMetrics m = evaluate_model(ckpts[i], samples, plan);
      print_block(ctx.out, fs::path(checkpoints[i]).filename().string(), m.samples, m.d_accuracy, m.d_mape);
      std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g\n", m.samples, m.d_accuracy, m.d_mape);
      os << fs::path(checkpoints[i]).filename().string() << buf;
    }
    if (ckpts.size() > 1) {
      std::vector<OpticalSpectra> spectra;
      std::vector<double> truth;
      for (const Sample& s : samples) {
        spectra.push_back(s.spectra);
        truth.push_back(s.d_nm);
      }
      const EnsemblePrediction p = ensemble_predict(ckpts, spectra, precision);
      const AccuracyReport r = accuracy_report(p.mean_nm, truth, threshold);
      print_block(ctx.out, "ensemble mean", truth.size(), r.fraction_within, r.mape);
      std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g\n", truth.size(), r.fraction_within, r.mape);
      os << "ensemble_mean" << buf;
    }
    write_provenance(dir, ctx, sub);
  }
};

struct FitCmd {
  std::string spectra;
  std::string index;
  FitOptions options;
  std::string out_dir;
  SubstrateOpts substrate;

  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("fit", "Grid-search thickness fit with a known n, k");
    c->add_option("--spectra", spectra, "R,T CSV (wavelength_nm,R,T)")->required();
    c->add_option("--index", index, "n,k CSV (wavelength_nm,n,k)")->required();
    c->add_option("--d-min", options.d_min_nm, "Smallest candidate (nm)")->capture_default_str();
    c->add_option("--d-max", options.d_max_nm, "Largest candidate (nm)")->capture_default_str();
    c->add_option("--step", options.step_nm, "Candidate spacing (nm)")->capture_default_str();
    c->add_option("--weight-r", options.weight_R, "Weight of R residuals")->capture_default_str();
    c->add_option("--weight-t", options.weight_T, "Weight of T residuals")->capture_default_str();
    c->add_option("--out", out_dir, "Output directory");
    substrate.add(c);
    return c;
  }

  void run(Context& ctx, const CLI::App& sub) {
    const WavelengthGrid grid = WavelengthGrid::canonical();
    const OpticalSpectra measured = read_optical_csv(spectra, grid);
    const LoadedIndex nk = read_index_csv(index, grid);
    const FitResult r = grid_search_thickness(measured, nk.spectrum, substrate.get(), options);
    const fs::path dir = output_dir(ctx, out_dir, "fit");
    char buf[96];
    {
      std::ofstream os(dir / "fit.csv");
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.best_d, r.residual_rms);
      os << "best_d_nm,residual_rms\n" << buf;
      if (!os) throw IoError("cannot write " + (dir / "fit.csv").string());
    }
    std::ofstream os(dir / "fit_curve.csv");
    os << "d_nm,residual_rms\n";
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.candidates[i], r.residual_curve[i]);
      os << buf;
    }
    if (!os) throw IoError("cannot write " + (dir / "fit_curve.csv").string());
    std::snprintf(buf, sizeof buf, "best d %.1f nm (residual rms %.3g)\n", r.best_d, r.residual_rms);
    ctx.out << buf;
    write_provenance(dir, ctx, sub, {{"best_d_nm", r.best_d}, {"residual_rms", r.residual_rms}});
  }
};

struct ActivationsCmd {
  std::string checkpoint;
  std::string spectra;
  int filters = 10;
  std::string out_dir;

  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("activations", "Dump conv activation maps of random filters");
    c->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    c->add_option("--spectra", spectra, "R,T CSV of the input sample")->required();
    c->add_option("--filters", filters, "Filters per conv layer")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--out", out_dir, "Output directory");
    return c;
  }

  void run(Context& ctx, const CLI::App& sub) {
    const auto w = nn::load_checkpoint(checkpoint);
    const OpticalSpectra s = read_optical_csv(spectra, WavelengthGrid::canonical());
    const ActivationMaps maps = activation_maps(w, s, filters, ctx.seed);
    const fs::path dir = output_dir(ctx, out_dir, "activations");
    nlohmann::json files = nlohmann::json::array();
    for (const fs::path& p : write_activation_csvs(dir, maps)) {
      files.push_back(p.filename().string());
      ctx.out << p.string() << '\n';
    }
    write_provenance(dir, ctx, sub, {{"files", files}, {"clamped_stages", maps.clamped_stages}});
  }
};

struct DiffCmd {
  std::string a, b;

  CLI::App* add(CLI::App& app) {
    auto* c = app.add_subcommand("diff", "Compare two checkpoints array by array");
    c->add_option("first", a, "Checkpoint")->required();
    c->add_option("second", b, "Checkpoint")->required();
    return c;
  }

  void run(Context& ctx, const CLI::App&) {
    const nn::CheckpointDiff d = nn::diff_checkpoints(nn::load_checkpoint(a), nn::load_checkpoint(b));
    ctx.out << "same_config " << (d.same_config ? "yes" : "no") << "\nconv_identical "
            << (d.conv_identical ? "yes" : "no") << "\nheads_identical " << (d.heads_identical ? "yes" : "no")
            << "\nmax_abs_conv " << d.max_abs_conv << "\nmax_abs_heads " << d.max_abs_heads << '\n';
  }
};

int classify(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const CoverageError*>(&e)) {
    return kExitIo;
  }
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitIo;
  return kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thin-film thickness estimation from R/T spectra", "filmnet"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML preset; flags given on the command line take precedence");
  Context ctx{out, err, args, default_output_root(), 0};
  app.add_option("--output-root", ctx.output_root, "Default parent of output directories")
      ->default_str("$" + std::string(kOutputRootEnv) + " or runs");
  app.add_option("--seed", ctx.seed, "Master seed")->capture_default_str();

  SimulateCmd simulate;
  PretrainCmd pretrain_cmd, direct_cmd;
  RetrainCmd retrain_cmd;
  PredictCmd predict;
  EvaluateCmd evaluate;
  FitCmd fit;
  ActivationsCmd activations;
  DiffCmd diff;
  std::vector<std::pair<CLI::App*, std::function<void()>>> handlers;
  auto reg = [&](CLI::App* sub, auto& cmd) { handlers.emplace_back(sub, [&ctx, &cmd, sub] { cmd.run(ctx, *sub); }); };
  reg(simulate.add(app), simulate);
  reg(pretrain_cmd.add(app, false), pretrain_cmd);
  reg(retrain_cmd.add(app), retrain_cmd);
  reg(direct_cmd.add(app, true), direct_cmd);
  reg(predict.add(app), predict);
  reg(evaluate.add(app), evaluate);
  reg(fit.add(app), fit);
  reg(activations.add(app), activations);
  reg(diff.add(app), diff);

  // CLI11 wants argv order reversed when parsing from a vector
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (auto& [sub, fn] : handlers) {
      if (sub->parsed()) fn();
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return classify(e);
  }
  return kExitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace filmnet::cli
