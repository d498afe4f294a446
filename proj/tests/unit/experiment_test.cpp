// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "support.hpp"
#include "tuneclip/experiment.hpp"

namespace tuneclip {
namespace {

RunConfig tiny(const std::filesystem::path& out = "unused") {
  RunConfig cfg = parse_config(
      "n = 64\nk_concepts = 4\nd_img = 8\nd_txt = 8\nhidden = 6\nembed = 4\n"
      "pretrain_epochs = 3\npretrain_batch = 16\npretrain_lr = 0.01\n"
      "batch = 16\nosr_epochs = 2\nfinetune_epochs = 2\nlr = 0.01\n"
      "gamma_decay_epochs = 2\nseed = 3\n");
  cfg.output_dir = out;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(PrepareData, SplitSizesAndDeterminism) {
  const RunConfig cfg = tiny();
  const DataSplit a = prepare_data(cfg);
  EXPECT_EQ(a.train.size(), 48u);
  EXPECT_EQ(a.test.size(), 16u);
  const DataSplit b = prepare_data(cfg);
  EXPECT_TRUE(std::ranges::equal(a.train.images.values(), b.train.images.values()));
  EXPECT_EQ(a.test.concepts, b.test.concepts);
}

TEST(PrepareData, LoadsDatasetFile) {
  test::TempDir dir;
  RunConfig cfg = tiny();
  const DataSplit generated = prepare_data(cfg);
  save_dataset(generate([&] {
                 DatasetSpec s = cfg.dataset;
                 s.seed = seed_plan(cfg).data;
                 return s;
               }()),
               dir / "d.bin");
  cfg.dataset_path = dir / "d.bin";
  const DataSplit loaded = prepare_data(cfg);
  EXPECT_TRUE(std::ranges::equal(loaded.train.images.values(), generated.train.images.values()));
}

TEST(PrepareInitialModel, PretrainingBeatsChance) {
  const RunConfig cfg = tiny();
  const Benchmark bench = prepare_benchmark(cfg);
  EXPECT_GT(eval_recall_at_k(bench.omega0, bench.data.test, 1).mean(), 1.0 / 16.0);
}

TEST(PrepareInitialModel, LoadsInitCheckpoint) {
  test::TempDir dir;
  RunConfig cfg = tiny();
  const Benchmark bench = prepare_benchmark(cfg);
  save_checkpoint(initial_checkpoint(cfg, bench.omega0), dir / "p.fcck");
  cfg.init_checkpoint = dir / "p.fcck";
  EXPECT_EQ(prepare_initial_model(cfg, bench.data.train).omega, bench.omega0.omega);
  cfg.dataset.noise_sigma = 0.2;
  EXPECT_ERROR_KIND(prepare_initial_model(cfg, bench.data.train), ErrorKind::config_hash);
  cfg.force = true;
  EXPECT_NO_THROW(prepare_initial_model(cfg, bench.data.train));
}

TEST(RunArm, OsrOnlyLeavesWeightsAlone) {
  RunConfig cfg = tiny();
  cfg.arm = Arm::osr_only;
  const Benchmark bench = prepare_benchmark(cfg);
  const ArmResult r = run_arm(cfg, bench);
  EXPECT_EQ(r.checkpoint.omega, bench.omega0.omega);
  EXPECT_EQ(r.checkpoint.stage, CheckpointStage::recovered);
  ASSERT_EQ(r.records.size(), 3u);
  // Zero statistics at row 0, then errors shrink as recovery proceeds.
  EXPECT_GT(r.records[0].m_err, r.records[2].m_err);
  EXPECT_GT(r.records[0].u_err_x, r.records[2].u_err_x);
  for (const MetricsRecord& rec : r.records) EXPECT_EQ(rec.loss, r.records[0].loss);
}

TEST(RunArm, ZeroEpochsReportsStartingPoint) {
  RunConfig cfg = tiny();
  cfg.finetune_epochs = 0;
  const Benchmark bench = prepare_benchmark(cfg);
  for (Arm arm : {Arm::tuneclip, Arm::fastclip_zero_init, Arm::openclip_mbcl, Arm::gcl_with_osr}) {
    cfg.arm = arm;
    const ArmResult r = run_arm(cfg, bench);
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.checkpoint.omega, bench.omega0.omega);
    const RecallPair recall = eval_recall_at_k(bench.omega0, bench.data.test, 1);
    EXPECT_EQ(r.records[0].r1_i2t, recall.i2t);
    EXPECT_EQ(r.records[0].r1_t2i, recall.t2i);
  }
}

TEST(RunArm, RecordsPerEpochAndNanWhenNotApplicable) {
  RunConfig cfg = tiny();
  const Benchmark bench = prepare_benchmark(cfg);
  cfg.arm = Arm::openclip_mbcl;
  const ArmResult mbcl = run_arm(cfg, bench);
  ASSERT_EQ(mbcl.records.size(), 3u);
  for (const MetricsRecord& rec : mbcl.records) {
    EXPECT_TRUE(std::isnan(rec.u_err_x));
    EXPECT_TRUE(std::isnan(rec.m_err));
    EXPECT_EQ(rec.wall_s, 0.0);
  }
  EXPECT_TRUE(mbcl.checkpoint.estimator.u_x.empty());
  cfg.arm = Arm::tuneclip;
  const ArmResult t = run_arm(cfg, bench);
  for (const MetricsRecord& rec : t.records) EXPECT_FALSE(std::isnan(rec.u_err_x));
  EXPECT_EQ(t.checkpoint.estimator.size(), 48u);
  cfg.oracle = false;
  for (const MetricsRecord& rec : run_arm(cfg, bench).records) EXPECT_TRUE(std::isnan(rec.m_err));
}

TEST(RunArm, HingeSaturationFlagged) {
  RunConfig cfg = tiny();
  const Benchmark bench = prepare_benchmark(cfg);
  cfg.loss.margin = 2.0;
  EXPECT_TRUE(run_arm(cfg, bench).hinge_saturated);
  cfg.loss.margin = 0.1;
  EXPECT_FALSE(run_arm(cfg, bench).hinge_saturated);
}

TEST(RunExperiment, WritesByteIdenticalArtifacts) {
  test::TempDir dir;
  const RunSummary a = run_experiment(tiny(dir / "a"));
  const RunSummary b = run_experiment(tiny(dir / "b"));
  EXPECT_TRUE(a.all_passed());
  EXPECT_EQ(slurp(a.metrics_path), slurp(b.metrics_path));
  EXPECT_EQ(slurp(a.checkpoint_path), slurp(b.checkpoint_path));

  std::ifstream csv(a.metrics_path);
  const std::vector<MetricsRecord> rows = read_metrics_csv(csv);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows.back().r1_i2t, a.result.records.back().r1_i2t);
  EXPECT_EQ(slurp(a.metrics_path).substr(0, std::string(kMetricsHeader).size()), kMetricsHeader);

  const auto j = nlohmann::json::parse(slurp(a.summary_path));
  EXPECT_EQ(j.at("status"), "ok");
  EXPECT_EQ(j.at("arm"), "tuneclip");
  EXPECT_EQ(j.at("assertions").size(), a.assertions.size());
  EXPECT_EQ(load_checkpoint(a.checkpoint_path), a.result.checkpoint);
}

TEST(RunExperiment, FailureNamesStage) {
  test::TempDir dir;
  RunConfig cfg = tiny(dir / "f");
  cfg.dataset_path = dir / "missing.bin";
  try {
    run_experiment(cfg);
    ADD_FAILURE() << "expected failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
    EXPECT_NE(std::string(e.what()).find("stage data"), std::string::npos) << e.what();
  }
  const auto j = nlohmann::json::parse(slurp(dir / "f" / "summary.json"));
  EXPECT_EQ(j.at("status"), "failed");
  EXPECT_EQ(j.at("stage"), "data");
}

TEST(RunExperiment, MissingSeedIsConfigError) {
  RunConfig cfg = tiny();
  cfg.seed.reset();
  EXPECT_ERROR_KIND(run_experiment(cfg), ErrorKind::config);
}

TEST(MarginSweep, SingleMarginMatchesSingleRun) {
  RunConfig cfg = tiny();
  cfg.margins = {0.1};
  cfg.seeds = {3};
  const MarginSweepResult sweep = experiment_margin_sweep(cfg);
  ASSERT_EQ(sweep.rows.size(), 1u);
  const ArmResult single = run_arm(cfg, prepare_benchmark(cfg));
  EXPECT_EQ(sweep.rows[0].r1_i2t, single.records.back().r1_i2t);
  EXPECT_EQ(sweep.rows[0].r1_t2i, single.records.back().r1_t2i);
  EXPECT_FALSE(sweep.seeds[0].interior);
  EXPECT_EQ(sweep.interior_count, 0u);
}

TEST(MarginSweep, SaturatedMarginFlagged) {
  RunConfig cfg = tiny();
  cfg.margins = {0.1, 2.0};
  cfg.seeds = {3};
  cfg.finetune_epochs = 1;
  const MarginSweepResult sweep = experiment_margin_sweep(cfg);
  EXPECT_FALSE(sweep.rows[0].hinge_saturated);
  EXPECT_TRUE(sweep.rows[1].hinge_saturated);
  std::ostringstream csv;
  write_margin_csv(csv, sweep);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "seed,margin,r1_i2t,r1_t2i,r1_mean,fn_std,hinge_saturated");
}

TEST(Coldstart, RowsAndSummaries) {
  RunConfig cfg = tiny();
  cfg.seeds = {3, 4};
  cfg.oracle = false;
  const ColdstartResult r = experiment_coldstart(cfg);
  EXPECT_EQ(r.rows.size(), 2u * 3u * 3u);
  ASSERT_EQ(r.arms.size(), 3u);
  for (const ColdstartArmSummary& s : r.arms) {
    EXPECT_EQ(s.seeds, 2u);
    EXPECT_LE(s.epoch1_below + s.never_below, 2u);
  }
  ASSERT_TRUE(r.tuneclip_final_best.has_value());
  EXPECT_LE(*r.tuneclip_final_best, 2u);
  cfg.arms = {Arm::openclip_mbcl};
  EXPECT_FALSE(experiment_coldstart(cfg).tuneclip_final_best.has_value());
}

TEST(OsrScaling, RowsPerLengthAndSeed) {
  RunConfig cfg = tiny();
  cfg.osr_epochs_list = {1, 2, 4};
  cfg.seeds = {3, 4};
  const OsrScalingResult r = experiment_osr_scaling(cfg);
  EXPECT_EQ(r.rows.size(), 6u);
  ASSERT_EQ(r.means.size(), 3u);
  EXPECT_TRUE(r.u_slope.has_value());
  for (const OsrScalingRow& row : r.rows) {
    EXPECT_EQ(row.gamma, osr_scaled_gamma(cfg.osr_scaling_c, row.epochs));
    EXPECT_EQ(row.beta1, 1.0 - row.gamma);
    EXPECT_GT(row.u_err, 0.0);
  }
  cfg.osr_epochs_list = {2};
  const OsrScalingResult single = experiment_osr_scaling(cfg);
  EXPECT_FALSE(single.u_slope.has_value());
  EXPECT_FALSE(single.u_strictly_decreasing);
}

TEST(OsrScaledGamma, Values) {
  EXPECT_EQ(osr_scaled_gamma(0.5, 1), 0.5);
  EXPECT_EQ(osr_scaled_gamma(0.5, 4), 0.25);
  EXPECT_EQ(osr_scaled_gamma(3.0, 4), 1.0);
}

TEST(LoglogSlope, PowerLawsAndDegenerateInput) {
  const std::vector<double> x{1, 2, 4, 8};
  EXPECT_NEAR(*loglog_slope(x, {3, 1.5, 0.75, 0.375}), -1.0, 1e-14);
  EXPECT_NEAR(*loglog_slope(x, {1, 4, 16, 64}), 2.0, 1e-14);
  EXPECT_FALSE(loglog_slope({2}, {1}).has_value());
  EXPECT_FALSE(loglog_slope({2, 2}, {1, 3}).has_value());
  EXPECT_FALSE(loglog_slope({1, 2}, {1, 0}).has_value());
  EXPECT_FALSE(loglog_slope({1, 2}, {1}).has_value());
}

TEST(Saves, WriteCsvAndSummary) {
  test::TempDir dir;
  RunConfig cfg = tiny(dir / "exp");
  cfg.seeds = {3};
  cfg.osr_epochs_list = {1, 2};
  const std::string text = save_osr_scaling(cfg, experiment_osr_scaling(cfg));
  EXPECT_FALSE(text.empty());
  EXPECT_TRUE(std::filesystem::exists(dir / "exp" / "osr_scaling.csv"));
  EXPECT_NO_THROW(nlohmann::json::parse(slurp(dir / "exp" / "osr_scaling_summary.json")));
}

}  // namespace
}  // namespace tuneclip
