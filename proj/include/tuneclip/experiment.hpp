// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tuneclip/checkpoint.hpp"
#include "tuneclip/config.hpp"
#include "tuneclip/datagen.hpp"
#include "tuneclip/metrics.hpp"
#include "tuneclip/model.hpp"

namespace tuneclip {

const char* library_version() noexcept;

struct DataSplit {
  PairedDataset train;
  PairedDataset test;
};

/// Generates (or loads) the dataset and partitions it.
DataSplit prepare_data(const RunConfig& cfg);

/// Starting weights: loaded from cfg.init_checkpoint, or initialized and
/// pretrained on `train`.
TwoTowerModel prepare_initial_model(const RunConfig& cfg, const PairedDataset& train);

struct Benchmark {
  DataSplit data;
  TwoTowerModel omega0;
};

Benchmark prepare_benchmark(const RunConfig& cfg);

/// Pretrained weights packaged as a checkpoint with the run's identity.
Checkpoint initial_checkpoint(const RunConfig& cfg, const TwoTowerModel& omega0);

struct ArmResult {
  Arm arm = Arm::tuneclip;
  /// Row 0 evaluates omega0 with the statistics the arm starts from. Row e
  /// follows fine-tuning epoch e, or recovery epoch e for osr_only.
  std::vector<MetricsRecord> records;
  Checkpoint checkpoint;
  bool hinge_saturated = false;
};

/// Runs the arm's stages on a prepared benchmark. No filesystem access.
ArmResult run_arm(const RunConfig& cfg, const Benchmark& bench);

struct Assertion {
  std::string name;
  bool passed = false;
};

struct RunSummary {
  ArmResult result;
  std::vector<Assertion> assertions;
  std::filesystem::path metrics_path;
  std::filesystem::path checkpoint_path;
  std::filesystem::path summary_path;
  bool all_passed() const;
};

/// Full pipeline for cfg.arm. Writes metrics.csv, checkpoint.fcck and
/// summary.json under cfg.output_dir. A failing stage leaves a summary with
/// the stage name (and state_dump.fcck when training diverged) and rethrows
/// with both in the message.
RunSummary run_experiment(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Multi-seed experiments

struct ColdstartRow {
  std::uint64_t seed = 0;
  Arm arm = Arm::tuneclip;
  std::size_t epoch = 0;
  double r1_i2t = 0.0;
  double r1_t2i = 0.0;
  double baseline_r1 = 0.0;  // mean held-out R@1 of omega0
  double fn_std = 0.0;
  double r1_mean() const noexcept { return 0.5 * (r1_i2t + r1_t2i); }
};

struct ColdstartArmSummary {
  Arm arm = Arm::tuneclip;
  std::size_t seeds = 0;
  std::size_t epoch1_below = 0;  // seeds whose epoch-1 R@1 is strictly below baseline
  std::size_t never_below = 0;   // seeds that never go strictly below baseline
};

struct ColdstartResult {
  std::vector<ColdstartRow> rows;
  std::vector<ColdstartArmSummary> arms;
  /// Seeds where tuneclip's final R@1 is at least every other arm's; absent
  /// when tuneclip is not among the arms.
  std::optional<std::size_t> tuneclip_final_best;
};

/// Every arm in cfg.arms for every seed in cfg.seeds, sharing omega0 per seed.
ColdstartResult experiment_coldstart(const RunConfig& cfg);
void write_coldstart_csv(std::ostream& out, const ColdstartResult& result);

struct MarginRow {
  std::uint64_t seed = 0;
  double margin = 0.0;
  double r1_i2t = 0.0;
  double r1_t2i = 0.0;
  double fn_std = 0.0;
  bool hinge_saturated = false;
  double r1_mean() const noexcept { return 0.5 * (r1_i2t + r1_t2i); }
};

struct MarginSeedSummary {
  std::uint64_t seed = 0;
  double best_margin = 0.0;  // first argmax of final R@1
  bool interior = false;     // argmax is neither the first nor the last margin
};

struct MarginSweepResult {
  std::vector<MarginRow> rows;
  std::vector<MarginSeedSummary> seeds;
  std::size_t interior_count = 0;
};

/// Squared hinge active on every pair: gaps never fall below -2.
inline bool hinge_saturated(double margin) { return margin >= 2.0; }

/// The tuneclip arm once per margin in cfg.margins, for every seed.
MarginSweepResult experiment_margin_sweep(const RunConfig& cfg);
void write_margin_csv(std::ostream& out, const MarginSweepResult& result);

struct OsrScalingRow {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double gamma = 0.0;
  double beta1 = 0.0;
  double u_err = 0.0;  // U_x + U_z
  double m_err = 0.0;
};

struct OsrScalingMean {
  std::size_t epochs = 0;
  double u_err = 0.0;
  double m_err = 0.0;
};

struct OsrScalingResult {
  std::vector<OsrScalingRow> rows;
  std::vector<OsrScalingMean> means;  // across seeds, per recovery length
  std::optional<double> u_slope;      // least-squares slope of log mean U vs log E
  std::optional<double> m_slope;
  bool u_strictly_decreasing = false;
  bool m_strictly_decreasing = false;
};

/// gamma = 1 - beta1 = min(1, c / sqrt(E)) with a constant gamma schedule.
double osr_scaled_gamma(double c, std::size_t epochs);

/// Statistics recovery for every E in cfg.osr_epochs_list and every seed,
/// measuring the final estimator and moment errors at omega0.
OsrScalingResult experiment_osr_scaling(const RunConfig& cfg);
void write_osr_scaling_csv(std::ostream& out, const OsrScalingResult& result);

/// Least-squares slope of log(y) against log(x); absent with fewer than two
/// distinct x or any non-positive value.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Write <name>.csv and <name>_summary.json under cfg.output_dir and return
/// a short text summary.
std::string save_coldstart(const RunConfig& cfg, const ColdstartResult& result);
std::string save_margin_sweep(const RunConfig& cfg, const MarginSweepResult& result);
std::string save_osr_scaling(const RunConfig& cfg, const OsrScalingResult& result);

}  // namespace tuneclip
