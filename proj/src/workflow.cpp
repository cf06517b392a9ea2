#include "filmnet/workflow.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "filmnet/errors.hpp"
#include "filmnet/seeds.hpp"

namespace filmnet {

namespace {

bool same_architecture(const nn::NetworkConfig& a, const nn::NetworkConfig& b) {
  if (a.in_channels != b.in_channels || a.in_length != b.in_length || !(a.conv == b.conv) || a.mode != b.mode) {
    return false;
  }
  for (int h = 0; h < nn::kHeadCount; ++h) {
    if (a.head_active(h) && a.head_widths(h) != b.head_widths(h)) return false;
  }
  return true;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pct(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * m.mean, 100.0 * m.std);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

ExperimentResult train_ensemble(const ExperimentPlan& plan, Stage stage, const DatasetSplit& data) {
  ExperimentResult out;
  for (std::uint64_t seed : plan.ensemble_seeds) {
    nn::ModelWeights<double> w = nn::init_weights(plan.network, seed);
    nn::TrainOptions opt;
    opt.seed = seed;
    RunRecord rec;
    rec.stage = stage;
    rec.seed = seed;
    rec.retrain_count = data.spec.n_train;
    rec.train_samples = data.train.size();
    const nn::TrainResult r =
        nn::train_model(w, plan.schedule, data.train, opt, data.validation.empty() ? nullptr : &data.validation);
    rec.loss_trace = r.loss_trace;
    rec.validation_trace = r.validation_trace;
    rec.metrics = evaluate_model(w, data.test, plan);
    out.runs.push_back(std::move(rec));
    out.checkpoints.push_back(std::move(w));
  }
  return out;
}

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::pretrain: return "pretrain";
    case Stage::retrain_partial: return "retrain_partial";
    case Stage::retrain_full: return "retrain_full";
    case Stage::direct: return "direct";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : {Stage::pretrain, Stage::retrain_partial, Stage::retrain_full, Stage::direct}) {
    if (to_string(st) == s) return st;
  }
  throw ConfigError("unknown stage '" + s + "'");
}

RunMetrics evaluate_model(const nn::ModelWeights<double>& w, const std::vector<Sample>& test, const ExperimentPlan& plan) {
  RunMetrics m;
  m.samples = test.size();
  if (test.empty()) return m;
  const nn::ModelOutputs out = nn::predict_samples(w, test, plan.eval_precision);
  m.d_pred_nm = out.d_nm;
  for (const Sample& s : test) m.d_true_nm.push_back(s.d_nm);
  const AccuracyReport r = accuracy_report(m.d_pred_nm, m.d_true_nm, plan.threshold);
  m.d_accuracy = r.fraction_within;
  m.d_mape = r.mape;
  if (w.config.mode == nn::TaskMode::mtl) {
    std::vector<std::vector<double>> n_true, k_true;
    for (const Sample& s : test) {
      n_true.push_back(s.index.n);
      k_true.push_back(s.index.k);
    }
    m.n_accuracy = spectrum_accuracy(out.n, n_true, plan.threshold, plan.nk_floor);
    m.k_accuracy = spectrum_accuracy(out.k, k_true, plan.threshold, plan.nk_floor);
  }
  return m;
}

ExperimentResult pretrain(const ExperimentPlan& plan, const DatasetSplit& source) {
  return train_ensemble(plan, Stage::pretrain, source);
}

ExperimentResult direct_train(const ExperimentPlan& plan, const DatasetSplit& target) {
  return train_ensemble(plan, Stage::direct, target);
}

nn::ModelWeights<double> retrain(const nn::ModelWeights<double>& source, const std::vector<Sample>& train, Stage mode,
                                 const ExperimentPlan& plan, std::uint64_t seed, nn::TrainResult* trace) {
  if (mode != Stage::retrain_partial && mode != Stage::retrain_full) {
    throw ConfigError("retrain mode must be retrain_partial or retrain_full");
  }
  if (!same_architecture(source.config, plan.network)) {
    throw ShapeError("checkpoint architecture does not match the experiment plan");
  }
  if (plan.retrain_schedule.epochs == 0) return source;

  nn::ModelWeights<double> w = source;
  nn::reset_accumulators(w);
  w.epoch = 0;
  nn::TrainOptions opt;
  opt.freeze_conv = mode == Stage::retrain_partial;
  opt.seed = seed;
  nn::TrainResult r = nn::train_model(w, plan.retrain_schedule, train, opt);
  if (trace) *trace = std::move(r);
  return w;
}

ExperimentResult retrain_ensemble(const std::vector<nn::ModelWeights<double>>& sources, const DatasetSplit& target,
                                  Stage mode, const ExperimentPlan& plan, std::size_t split_index) {
  ExperimentResult out;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::uint64_t seed = i < plan.ensemble_seeds.size() ? plan.ensemble_seeds[i] : i + 1;
    RunRecord rec;
    rec.stage = mode;
    rec.split = split_index;
    rec.seed = seed;
    rec.retrain_count = target.spec.n_train;
    rec.train_samples = target.train.size();
    nn::ModelWeights<double> w;
    if (target.train.empty()) {
      if (!same_architecture(sources[i].config, plan.network)) {
        throw ShapeError("checkpoint architecture does not match the experiment plan");
      }
      w = sources[i];
    } else {
      nn::TrainResult trace;
      w = retrain(sources[i], target.train, mode, plan, seed, &trace);
      rec.loss_trace = trace.loss_trace;
    }
    rec.metrics = evaluate_model(w, target.test, plan);
    out.runs.push_back(std::move(rec));
    out.checkpoints.push_back(std::move(w));
  }
  return out;
}

std::uint64_t split_seed(std::uint64_t master, std::size_t index) {
  return derive_seed(master, {0x53504C49ULL, index});
}

SweepResult sweep_retrain_count(const std::vector<nn::ModelWeights<double>>& checkpoints,
                                const std::vector<RefractiveIndexSpectrum>& spectra, Stage mode,
                                const ExperimentPlan& plan) {
  if (checkpoints.empty()) throw DomainError("sweep needs at least one checkpoint");
  for (std::size_t count : plan.sweep_counts) {
    if (count >= spectra.size()) {
      throw DomainError("retraining count " + std::to_string(count) + " leaves no test spectra out of " +
                        std::to_string(spectra.size()));
    }
  }
  SweepResult out;
  for (std::size_t count : plan.sweep_counts) {
    std::vector<double> acc, err;
    for (std::size_t s = 0; s < plan.n_splits; ++s) {
      const DatasetSplit target = build_target_dataset(spectra, count, plan.d_per_train, plan.d_per_test,
                                                       split_seed(plan.split_seed, s), plan.substrate);
      ExperimentResult r = retrain_ensemble(checkpoints, target, mode, plan, s);
      for (RunRecord& rec : r.runs) {
        acc.push_back(rec.metrics.d_accuracy);
        err.push_back(rec.metrics.d_mape);
        out.runs.push_back(std::move(rec));
      }
    }
    out.rows.push_back({count, mean_std(acc), mean_std(err)});
  }
  return out;
}

EnsemblePrediction ensemble_predict(const std::vector<nn::ModelWeights<double>>& checkpoints,
                                    const std::vector<OpticalSpectra>& spectra, nn::Precision precision) {
  if (checkpoints.empty()) throw DomainError("ensemble needs at least one checkpoint");
  for (const auto& c : checkpoints) {
    if (!same_architecture(c.config, checkpoints.front().config)) {
      throw ShapeError("ensemble checkpoints have different architectures");
    }
  }
  EnsemblePrediction out;
  for (const auto& c : checkpoints) out.members_nm.push_back(nn::predict_spectra(c, spectra, precision).d_nm);
  std::vector<double> column(checkpoints.size());
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    for (std::size_t m = 0; m < checkpoints.size(); ++m) column[m] = out.members_nm[m][i];
    const MeanStd ms = mean_std(column);
    out.mean_nm.push_back(ms.mean);
    out.std_nm.push_back(ms.std);
  }
  return out;
}

std::vector<AggregateRow> aggregate_runs(const std::vector<RunRecord>& runs) {
  std::vector<std::pair<Stage, std::size_t>> keys;
  std::map<std::pair<Stage, std::size_t>, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : runs) {
    const auto key = std::make_pair(r.stage, r.retrain_count);
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const auto& key : keys) {
    std::vector<double> acc, err, n, k;
    for (const RunRecord* r : groups[key]) {
      acc.push_back(r->metrics.d_accuracy);
      err.push_back(r->metrics.d_mape);
      if (r->metrics.n_accuracy) n.push_back(*r->metrics.n_accuracy);
      if (r->metrics.k_accuracy) k.push_back(*r->metrics.k_accuracy);
    }
    AggregateRow row;
    row.stage = key.first;
    row.retrain_count = key.second;
    row.d_accuracy = mean_std(acc);
    row.d_mape = mean_std(err);
    if (!n.empty()) row.n_accuracy = mean_std(n);
    if (!k.empty()) row.k_accuracy = mean_std(k);
    out.push_back(row);
  }
  return out;
}

void write_runs_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs) {
  std::ofstream os = open_out(path);
  os << "stage,split,seed,retrain_count,train_samples,test_samples,d_accuracy,d_mape_pct,n_accuracy,k_accuracy\n";
  for (const RunRecord& r : runs) {
    os << to_string(r.stage) << ',' << r.split << ',' << r.seed << ',' << r.retrain_count << ',' << r.train_samples
       << ',' << r.metrics.samples << ',' << fmt17(r.metrics.d_accuracy) << ',' << fmt17(r.metrics.d_mape) << ','
       << (r.metrics.n_accuracy ? fmt17(*r.metrics.n_accuracy) : "") << ','
       << (r.metrics.k_accuracy ? fmt17(*r.metrics.k_accuracy) : "") << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<RunRecord> read_runs_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw ParseError(path.string(), 1, "empty file");
  std::vector<RunRecord> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 10) throw ParseError(path.string(), lineno, "expected 10 fields");
    try {
      RunRecord r;
      r.stage = stage_from_string(f[0]);
      r.split = std::stoull(f[1]);
      r.seed = std::stoull(f[2]);
      r.retrain_count = std::stoull(f[3]);
      r.train_samples = std::stoull(f[4]);
      r.metrics.samples = std::stoull(f[5]);
      r.metrics.d_accuracy = std::stod(f[6]);
      r.metrics.d_mape = std::stod(f[7]);
      if (!f[8].empty()) r.metrics.n_accuracy = std::stod(f[8]);
      if (!f[9].empty()) r.metrics.k_accuracy = std::stod(f[9]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError(path.string(), lineno, "malformed run row");
    }
  }
  return out;
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  std::ofstream os = open_out(path);
  os << "stage,retrain_count,runs,d_accuracy_pct,d_mape_pct,n_accuracy_pct,k_accuracy_pct\n";
  for (const AggregateRow& r : rows) {
    os << to_string(r.stage) << ',' << r.retrain_count << ',' << r.d_accuracy.count << ',' << pct(r.d_accuracy) << ','
       << pct({r.d_mape.mean / 100.0, r.d_mape.std / 100.0, r.d_mape.count}) << ','
       << (r.n_accuracy ? pct(*r.n_accuracy) : "") << ',' << (r.k_accuracy ? pct(*r.k_accuracy) : "") << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs) {
  std::ofstream os = open_out(path);
  os << "stage,split,seed,retrain_count,sample,d_true_nm,d_pred_nm\n";
  for (const RunRecord& r : runs) {
    for (std::size_t i = 0; i < r.metrics.d_pred_nm.size(); ++i) {
      os << to_string(r.stage) << ',' << r.split << ',' << r.seed << ',' << r.retrain_count << ',' << i << ','
         << fmt17(r.metrics.d_true_nm[i]) << ',' << fmt17(r.metrics.d_pred_nm[i]) << '\n';
    }
  }
  if (!os) throw IoError("write failed for " + path.string());
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<RunRecord>& runs) {
  std::ofstream os = open_out(path);
  os << "stage,split,seed,retrain_count,epoch,train_loss,validation_loss\n";
  for (const RunRecord& r : runs) {
    for (std::size_t e = 0; e < r.loss_trace.size(); ++e) {
      os << to_string(r.stage) << ',' << r.split << ',' << r.seed << ',' << r.retrain_count << ',' << e + 1 << ','
         << fmt17(r.loss_trace[e]) << ',' << (e < r.validation_trace.size() ? fmt17(r.validation_trace[e]) : "")
         << '\n';
    }
  }
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace filmnet
