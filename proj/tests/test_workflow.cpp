#include "doctest.h"

#include <cmath>
#include <set>

#include "filmnet/errors.hpp"
#include "filmnet/nn/checkpoint.hpp"
#include "filmnet/workflow.hpp"
#include "nn_support.hpp"
#include "test_support.hpp"

using namespace filmnet;

namespace {

const WavelengthGrid kToyGrid(350.0, 357.0, 1.0);

ExperimentPlan toy_plan(nn::TaskMode mode = nn::TaskMode::stl) {
  ExperimentPlan p;
  p.network = testing::toy_config(mode);
  p.network.d_head = {8, 4, 1};
  p.schedule.epochs = 3;
  p.schedule.learning_rate = 0.01;
  p.retrain_schedule.epochs = 20;
  p.retrain_schedule.learning_rate = 0.01;
  p.retrain_schedule.batch_size = 16;
  p.sweep_counts = {0, 1, 2};
  p.n_splits = 2;
  p.d_per_train = 4;
  p.d_per_test = 3;
  p.split_seed = 77;
  return p;
}

DatasetSplit toy_source(std::size_t train = 12, std::size_t val = 3, std::size_t test = 4) {
  SplitSpec s;
  s.n_train = train;
  s.n_val = val;
  s.n_test = test;
  s.d_per_train = 4;
  s.d_per_val = 2;
  s.d_per_test = 3;
  s.seed = 5;
  return build_source_dataset(s, ParameterGridSpec{}, SubstrateConfig{}, kToyGrid);
}

std::vector<RefractiveIndexSpectrum> toy_targets(std::size_t n = 6) { return pseudo_target_generator(n, 9, kToyGrid); }

}  // namespace

TEST_CASE("stage names round trip") {
  for (Stage s : {Stage::pretrain, Stage::retrain_partial, Stage::retrain_full, Stage::direct}) {
    CHECK(stage_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_AS(stage_from_string("finetune"), ConfigError);
}

TEST_CASE("pretraining gives one distinct checkpoint per seed") {
  const ExperimentPlan plan = toy_plan();
  const DatasetSplit src = toy_source();
  const ExperimentResult r = pretrain(plan, src);
  REQUIRE(r.checkpoints.size() == 3);
  REQUIRE(r.runs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.runs[i].seed == plan.ensemble_seeds[i]);
    CHECK(r.runs[i].loss_trace.size() == 3);
    CHECK(r.runs[i].validation_trace.size() == 3);
    CHECK(r.runs[i].train_samples == 48);
    CHECK(r.runs[i].metrics.samples == 12);
    CHECK(r.checkpoints[i].epoch == 3);
    for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(nn::bit_identical(r.checkpoints[i], r.checkpoints[j]));
  }

  testing::TempDir dir("wf_pretrain");
  nn::save_checkpoint(dir / "seed1.ckpt", r.checkpoints[0]);
  const auto loaded = nn::load_checkpoint(dir / "seed1.ckpt");
  CHECK(nn::bit_identical(loaded, r.checkpoints[0]));

  // metrics recomputed from the saved checkpoint match the train-time ones
  const RunMetrics again = evaluate_model(loaded, src.test, plan);
  CHECK(std::abs(again.d_accuracy - r.runs[0].metrics.d_accuracy) <= 1e-12);
  CHECK(std::abs(again.d_mape - r.runs[0].metrics.d_mape) <= 1e-12);

  // the same plan reproduces the same weights
  const ExperimentResult twice = pretrain(plan, src);
  for (std::size_t i = 0; i < 3; ++i) CHECK(nn::bit_identical(twice.checkpoints[i], r.checkpoints[i]));
}

TEST_CASE("direct training shares the pretraining path") {
  ExperimentPlan plan = toy_plan();
  plan.ensemble_seeds = {4};
  DatasetSplit src = toy_source(10, 0, 3);
  const ExperimentResult a = pretrain(plan, src);
  const ExperimentResult b = direct_train(plan, src);
  CHECK(b.runs[0].stage == Stage::direct);
  CHECK(nn::bit_identical(a.checkpoints[0], b.checkpoints[0]));
  CHECK(a.runs[0].metrics.d_mape == b.runs[0].metrics.d_mape);
}

TEST_CASE("multitask evaluation reports n and k accuracy") {
  ExperimentPlan plan = toy_plan(nn::TaskMode::mtl);
  plan.ensemble_seeds = {1};
  const ExperimentResult r = pretrain(plan, toy_source(8, 0, 3));
  REQUIRE(r.runs[0].metrics.n_accuracy.has_value());
  REQUIRE(r.runs[0].metrics.k_accuracy.has_value());
  CHECK(*r.runs[0].metrics.n_accuracy >= 0.0);
  CHECK(*r.runs[0].metrics.n_accuracy <= 1.0);
  ExperimentPlan stl = toy_plan();
  stl.ensemble_seeds = {1};
  CHECK_FALSE(pretrain(stl, toy_source(8, 0, 3)).runs[0].metrics.n_accuracy.has_value());
}

TEST_CASE("partial retraining keeps the trunk bit-identical") {
  ExperimentPlan plan = toy_plan();
  const auto src = nn::init_weights(plan.network, 11);
  const DatasetSplit target = build_target_dataset(toy_targets(), 3, 4, 3, 21, SubstrateConfig{});

  for (nn::Precision p : {nn::Precision::f64, nn::Precision::f32}) {
    plan.retrain_schedule.precision = p;
    const auto w = retrain(src, target.train, Stage::retrain_partial, plan, 1);
    const nn::CheckpointDiff d = nn::diff_checkpoints(src, w);
    CHECK(d.conv_identical);
    CHECK_FALSE(d.heads_identical);
    CHECK(w.epoch == plan.retrain_schedule.epochs);
  }

  const auto full = retrain(src, target.train, Stage::retrain_full, plan, 1);
  CHECK_FALSE(nn::diff_checkpoints(src, full).conv_identical);
  CHECK_THROWS_AS(retrain(src, target.train, Stage::direct, plan, 1), ConfigError);
}

TEST_CASE("retraining starts from a fresh optimizer") {
  ExperimentPlan plan = toy_plan();
  auto src = nn::init_weights(plan.network, 3);
  const DatasetSplit target = build_target_dataset(toy_targets(), 3, 4, 3, 21, SubstrateConfig{});
  auto stale = src;
  stale.epoch = 777;
  for (auto& t : stale.accum.tensors()) {
    for (double& v : t.values) v = 1e6;
  }
  const auto a = retrain(src, target.train, Stage::retrain_full, plan, 2);
  const auto b = retrain(stale, target.train, Stage::retrain_full, plan, 2);
  CHECK(nn::bit_identical(a, b));
}

TEST_CASE("zero-epoch retraining is the identity") {
  ExperimentPlan plan = toy_plan();
  plan.retrain_schedule.epochs = 0;
  const auto src = nn::init_weights(plan.network, 3);
  const DatasetSplit target = build_target_dataset(toy_targets(), 3, 4, 3, 21, SubstrateConfig{});
  CHECK(nn::bit_identical(retrain(src, target.train, Stage::retrain_partial, plan, 1), src));
}

TEST_CASE("retraining rejects a mismatched checkpoint") {
  const ExperimentPlan plan = toy_plan();
  nn::NetworkConfig other = plan.network;
  other.conv[0].filters = 3;
  const auto src = nn::init_weights(other, 1);
  const DatasetSplit target = build_target_dataset(toy_targets(), 3, 4, 3, 21, SubstrateConfig{});
  CHECK_THROWS_AS(retrain(src, target.train, Stage::retrain_partial, plan, 1), ShapeError);
  CHECK_THROWS_AS(retrain_ensemble({src}, target, Stage::retrain_partial, plan), ShapeError);
}

TEST_CASE("retraining lowers the target loss") {
  ExperimentPlan plan = toy_plan();
  plan.retrain_schedule.epochs = 150;
  plan.retrain_schedule.learning_rate = 0.03;
  const ExperimentResult pre = pretrain(plan, toy_source());
  const DatasetSplit target = build_target_dataset(toy_targets(8), 6, 6, 3, 4, SubstrateConfig{});
  const auto train_set = nn::make_training_set<double>(target.train, plan.network);
  const double before = nn::evaluate_loss(pre.checkpoints[0], train_set);
  const auto after_w = retrain(pre.checkpoints[0], target.train, Stage::retrain_full, plan, 1);
  const double after = nn::evaluate_loss(after_w, train_set);
  CHECK(after < before);
}

TEST_CASE("ensemble retraining records one run per checkpoint") {
  ExperimentPlan plan = toy_plan();
  plan.retrain_schedule.epochs = 5;
  std::vector<nn::ModelWeights<double>> ckpts;
  for (std::uint64_t s : {1, 2, 3}) ckpts.push_back(nn::init_weights(plan.network, s));
  const DatasetSplit target = build_target_dataset(toy_targets(), 2, 4, 3, 8, SubstrateConfig{});
  const ExperimentResult r = retrain_ensemble(ckpts, target, Stage::retrain_partial, plan, 4);
  REQUIRE(r.runs.size() == 3);
  for (const RunRecord& rec : r.runs) {
    CHECK(rec.split == 4);
    CHECK(rec.retrain_count == 2);
    CHECK(rec.train_samples == 8);
    CHECK(rec.metrics.samples == 12);
    CHECK(rec.loss_trace.size() == 5);
  }
}

TEST_CASE("split seeds are deterministic and distinct") {
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(split_seed(7, i) == split_seed(7, i));
    seen.insert(split_seed(7, i));
  }
  CHECK(seen.size() == 20);
  CHECK(split_seed(7, 0) != split_seed(8, 0));
}

TEST_CASE("retraining-count sweep") {
  ExperimentPlan plan = toy_plan();
  plan.retrain_schedule.epochs = 4;
  std::vector<nn::ModelWeights<double>> ckpts{nn::init_weights(plan.network, 1), nn::init_weights(plan.network, 2)};
  const auto spectra = toy_targets(5);

  const SweepResult r = sweep_retrain_count(ckpts, spectra, Stage::retrain_partial, plan);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.runs.size() == 3 * 2 * 2);

  // count 0 is a plain evaluation of the checkpoints over every spectrum
  for (std::size_t i = 0; i < 4; ++i) {
    const RunRecord& rec = r.runs[i];
    CHECK(rec.retrain_count == 0);
    CHECK(rec.train_samples == 0);
    CHECK(rec.metrics.samples == 15);
    CHECK(rec.loss_trace.empty());
  }
  const DatasetSplit all = build_target_dataset(spectra, 0, 4, 3, split_seed(77, 0), SubstrateConfig{});
  const RunMetrics direct = evaluate_model(ckpts[0], all.test, plan);
  CHECK(direct.d_mape == r.runs[0].metrics.d_mape);

  for (std::size_t row = 0; row < 3; ++row) {
    std::vector<double> acc;
    for (std::size_t i = 0; i < 4; ++i) acc.push_back(r.runs[row * 4 + i].metrics.d_accuracy);
    CHECK(r.rows[row].count == plan.sweep_counts[row]);
    CHECK(r.rows[row].d_accuracy.mean == doctest::Approx(mean_std(acc).mean).epsilon(1e-15));
    CHECK(r.rows[row].d_accuracy.count == 4);
  }

  // aggregates recomputed from the CSV agree with the in-memory ones
  testing::TempDir dir("wf_sweep");
  write_runs_csv(dir / "runs.csv", r.runs);
  const auto back = read_runs_csv(dir / "runs.csv");
  REQUIRE(back.size() == r.runs.size());
  const auto agg = aggregate_runs(back);
  REQUIRE(agg.size() == 3);
  for (std::size_t row = 0; row < 3; ++row) {
    CHECK(agg[row].retrain_count == r.rows[row].count);
    CHECK(std::abs(agg[row].d_accuracy.mean - r.rows[row].d_accuracy.mean) <= 1e-12);
    CHECK(std::abs(agg[row].d_mape.mean - r.rows[row].d_mape.mean) <= 1e-12);
    CHECK(std::abs(agg[row].d_mape.std - r.rows[row].d_mape.std) <= 1e-12);
  }

  plan.sweep_counts = {0, 5};
  CHECK_THROWS_AS(sweep_retrain_count(ckpts, spectra, Stage::retrain_partial, plan), DomainError);
  CHECK_THROWS_AS(sweep_retrain_count({}, spectra, Stage::retrain_partial, toy_plan()), DomainError);
}

TEST_CASE("default sweep covers counts 0 to 17") {
  const ExperimentPlan plan;
  REQUIRE(plan.sweep_counts.size() == 18);
  for (std::size_t i = 0; i < 18; ++i) CHECK(plan.sweep_counts[i] == i);
  CHECK(plan.n_splits == 5);
  CHECK(plan.ensemble_seeds.size() == 3);
  CHECK(plan.retrain_schedule.epochs == 200);
}

TEST_CASE("ensemble prediction statistics") {
  const ExperimentPlan plan = toy_plan();
  const auto a = nn::init_weights(plan.network, 1);
  const auto b = nn::init_weights(plan.network, 2);
  const DatasetSplit target = build_target_dataset(toy_targets(), 0, 4, 2, 8, SubstrateConfig{});
  std::vector<OpticalSpectra> spectra;
  for (const Sample& s : target.test) spectra.push_back(s.spectra);

  const EnsemblePrediction single = ensemble_predict({a}, spectra);
  for (double s : single.std_nm) CHECK(s == 0.0);
  const EnsemblePrediction dup = ensemble_predict({a, a, a}, spectra);
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    CHECK(dup.std_nm[i] == 0.0);
    CHECK(dup.mean_nm[i] == doctest::Approx(single.mean_nm[i]).epsilon(1e-14));
  }

  const EnsemblePrediction two = ensemble_predict({a, b}, spectra);
  REQUIRE(two.members_nm.size() == 2);
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    const double x = two.members_nm[0][i], y = two.members_nm[1][i];
    CHECK(two.mean_nm[i] == doctest::Approx((x + y) / 2).epsilon(1e-14));
    CHECK(two.std_nm[i] == doctest::Approx(std::abs(x - y) / 2).epsilon(1e-12));
  }

  nn::NetworkConfig other = plan.network;
  other.d_head = {5, 1};
  CHECK_THROWS_AS(ensemble_predict({a, nn::init_weights(other, 1)}, spectra), ShapeError);
  CHECK_THROWS_AS(ensemble_predict({}, spectra), DomainError);
}

TEST_CASE("report files") {
  ExperimentPlan plan = toy_plan();
  plan.ensemble_seeds = {1};
  const ExperimentResult r = pretrain(plan, toy_source(6, 2, 2));
  testing::TempDir dir("wf_reports");
  write_aggregate_csv(dir / "aggregate.csv", aggregate_runs(r.runs));
  write_predictions_csv(dir / "predictions.csv", r.runs);
  write_loss_csv(dir / "loss.csv", r.runs);

  const std::string agg = testing::read_bytes(dir / "aggregate.csv");
  CHECK(agg.find("pretrain,6,1,") != std::string::npos);
  CHECK(agg.find(" ± ") != std::string::npos);

  const std::string pred = testing::read_bytes(dir / "predictions.csv");
  std::size_t lines = 0;
  for (char c : pred) lines += c == '\n';
  CHECK(lines == 1 + 6);

  const std::string loss = testing::read_bytes(dir / "loss.csv");
  lines = 0;
  for (char c : loss) lines += c == '\n';
  CHECK(lines == 1 + 3);

  testing::write_text(dir / "bad.csv", "header\npretrain,0,1\n");
  CHECK_THROWS_AS(read_runs_csv(dir / "bad.csv"), ParseError);
  CHECK_THROWS_AS(read_runs_csv(dir / "missing.csv"), IoError);
}
