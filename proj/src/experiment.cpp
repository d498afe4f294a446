// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "tuneclip/binary_io.hpp"
#include "tuneclip/error.hpp"
#include "tuneclip/oracle.hpp"

#ifndef TUNECLIP_VERSION
#define TUNECLIP_VERSION "0.0.0"
#endif

namespace tuneclip {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

LossConfig arm_loss_config(const RunConfig& cfg, Arm arm) {
  LossConfig lc = cfg.loss;
  lc.variant = arm_loss(arm, cfg.loss.variant);
  lc.tau = cfg.model.tau;
  return lc;
}

// One metrics row. Estimator and moment errors are measured against exact
// values at `model` when the oracle is on and the arm keeps moving averages.
MetricsRecord evaluate(const RunConfig& cfg, const LossConfig& lc, const DataSplit& data, const TwoTowerModel& model,
                       const EstimatorState* est, const MomentState* ms, std::size_t epoch, double wall) {
  MetricsRecord r;
  r.epoch = epoch;
  r.loss = loss_scalar_full(model, data.train, lc);
  const RecallPair recall = eval_recall_at_k(model, data.test, 1);
  r.r1_i2t = recall.i2t;
  r.r1_t2i = recall.t2i;
  r.u_err_x = r.u_err_z = r.m_err = kNaN;
  if (cfg.oracle && est != nullptr && ms != nullptr && lc.variant != LossVariant::mbcl) {
    const OracleReport report = exact_loss_and_grad(model, data.train, lc);
    const TheoremQuantities q = estimation_errors(*est, *ms, report, data.train.size());
    r.u_err_x = q.u_err_x;
    r.u_err_z = q.u_err_z;
    r.m_err = q.m_err;
  }
  const FnStats fn = fn_similarity_stats(model, data.train, cfg.fn_top_k);
  r.fn_mean = fn.fn_mean;
  r.fn_std = fn.fn_std;
  r.tp_mean = fn.tp_mean;
  r.tn_mean = fn.tn_mean;
  r.wall_s = cfg.record_wall_time ? wall : 0.0;
  return r;
}

Checkpoint base_checkpoint(const RunConfig& cfg, CheckpointStage stage) {
  const SeedPlan seeds = seed_plan(cfg);
  Checkpoint c;
  c.stage = stage;
  c.config_hash = config_hash(cfg);
  c.data_seed = seeds.data;
  c.model_seed = seeds.model;
  c.train_seed = seeds.train;
  c.dims = cfg.model;
  return c;
}

ArmResult run_arm_staged(const RunConfig& cfg, const Benchmark& bench, std::string& stage) {
  cfg.validate();
  const SeedPlan seeds = seed_plan(cfg);
  const LossConfig lc = arm_loss_config(cfg, cfg.arm);
  const DataSplit& data = bench.data;
  const std::size_t n = data.train.size();
  const std::size_t p = bench.omega0.omega.size();

  ArmResult out;
  out.arm = cfg.arm;
  out.hinge_saturated = lc.variant == LossVariant::hgcl && hinge_saturated(lc.margin);
  out.checkpoint = base_checkpoint(cfg, CheckpointStage::finetuned);

  std::optional<OsrResult> stats;
  if (arm_runs_osr(cfg.arm)) {
    stage = "osr";
    OsrConfig oc;
    oc.epochs = cfg.osr_epochs;
    oc.batch = cfg.batch;
    oc.beta1 = cfg.beta1;
    oc.beta2 = cfg.beta2;
    oc.schedule = cfg.schedule;
    oc.loss = lc;
    oc.seed = seeds.osr;
    OsrObserver observer;
    auto start = Clock::now();
    if (cfg.arm == Arm::osr_only) {
      const EstimatorState zero_est = EstimatorState::zeros(n);
      const MomentState zero_ms = MomentState::zeros(p, cfg.beta1, cfg.beta2);
      out.records.push_back(evaluate(cfg, lc, data, bench.omega0, &zero_est, &zero_ms, 0, 0.0));
      start = Clock::now();
      observer = [&](std::size_t epoch, const MomentState& ms, const EstimatorState& est) {
        const double wall = seconds_since(start);
        out.records.push_back(evaluate(cfg, lc, data, bench.omega0, &est, &ms, epoch, wall));
        start = Clock::now();
      };
    }
    stats = osr_run(bench.omega0, data.train, oc, observer);
  }

  if (cfg.arm == Arm::osr_only) {
    out.checkpoint.stage = CheckpointStage::recovered;
    out.checkpoint.omega = bench.omega0.omega;
    out.checkpoint.moments = stats->moments;
    out.checkpoint.estimator = stats->estimator;
    return out;
  }

  stage = "finetune";
  FinetuneConfig fc;
  fc.loss = lc;
  fc.schedule = cfg.schedule;
  fc.epochs = cfg.finetune_epochs;
  fc.batch = cfg.batch;
  fc.beta1 = cfg.beta1;
  fc.beta2 = cfg.beta2;
  fc.weight_decay = cfg.weight_decay;
  fc.seed = seeds.train;

  if (lc.variant == LossVariant::mbcl) {
    out.records.push_back(evaluate(cfg, lc, data, bench.omega0, nullptr, nullptr, 0, 0.0));
  } else {
    const EstimatorState est0 = stats ? stats->estimator : EstimatorState::zeros(n);
    MomentState ms0 = stats ? stats->moments : MomentState::zeros(p);
    out.records.push_back(evaluate(cfg, lc, data, bench.omega0, &est0, &ms0, 0, 0.0));
  }
  const EpochObserver observer = [&](const EpochLog& log, const FinetuneResult& progress) {
    const EstimatorState* est = progress.estimator ? &*progress.estimator : nullptr;
    out.records.push_back(evaluate(cfg, lc, data, progress.model, est, &progress.moments, log.epoch, log.wall_s));
  };
  FinetuneResult result = lc.variant == LossVariant::mbcl
                              ? mbcl_finetune_run(bench.omega0, data.train, fc, observer)
                              : finetune_run(bench.omega0, data.train, stats, fc, observer);
  out.checkpoint.omega = std::move(result.model.omega);
  out.checkpoint.moments = std::move(result.moments);
  if (result.estimator) out.checkpoint.estimator = std::move(*result.estimator);
  return out;
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  io::write_file_atomic(path, std::span<const char>(text.data(), text.size()));
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) raise(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

Json config_json(const RunConfig& cfg) {
  Json j = Json::object();
  for (const ConfigKey& key : config_keys()) j[key.name] = get_config_value(cfg, key.name);
  return j;
}

Json record_json(const MetricsRecord& r) {
  return Json{{"epoch", r.epoch},     {"loss", r.loss},       {"r1_i2t", r.r1_i2t},   {"r1_t2i", r.r1_t2i},
              {"u_err_x", r.u_err_x}, {"u_err_z", r.u_err_z}, {"m_err", r.m_err},     {"fn_mean", r.fn_mean},
              {"fn_std", r.fn_std},   {"tp_mean", r.tp_mean}, {"tn_mean", r.tn_mean}, {"wall_s", r.wall_s}};
}

Json header_json(const RunConfig& cfg) {
  return Json{{"library_version", library_version()}, {"config", config_json(cfg)}};
}

std::string csv_text(const std::vector<MetricsRecord>& rows) {
  std::ostringstream ss;
  write_metrics_csv(ss, rows);
  return ss.str();
}

bool all_finite_loss(const std::vector<MetricsRecord>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const MetricsRecord& r) { return std::isfinite(r.loss); });
}

}  // namespace

const char* library_version() noexcept { return TUNECLIP_VERSION; }

DataSplit prepare_data(const RunConfig& cfg) {
  const SeedPlan seeds = seed_plan(cfg);
  PairedDataset full;
  if (cfg.dataset_path) {
    full = load_dataset(*cfg.dataset_path);
    if (full.images.cols() != cfg.model.d_img || full.texts.cols() != cfg.model.d_txt) {
      raise(ErrorKind::schema, "dataset " + cfg.dataset_path->string() + " has widths " +
                                   std::to_string(full.images.cols()) + "/" + std::to_string(full.texts.cols()) +
                                   ", config expects " + std::to_string(cfg.model.d_img) + "/" +
                                   std::to_string(cfg.model.d_txt));
    }
  } else {
    DatasetSpec spec = cfg.dataset;
    spec.seed = seeds.data;
    full = generate(spec);
  }
  auto [train, test] = split(full, cfg.test_fraction, seeds.split);
  return {std::move(train), std::move(test)};
}

TwoTowerModel prepare_initial_model(const RunConfig& cfg, const PairedDataset& train) {
  if (cfg.init_checkpoint) {
    CheckpointExpectations expect;
    expect.config_hash = config_hash(cfg);
    expect.dims = cfg.model;
    expect.force = cfg.force;
    const Checkpoint c = load_checkpoint(*cfg.init_checkpoint, expect);
    TwoTowerModel m = c.model();
    m.dims.tau = cfg.model.tau;
    return m;
  }
  const SeedPlan seeds = seed_plan(cfg);
  PretrainConfig pc = cfg.pretrain;
  pc.seed = seeds.pretrain;
  return pretrain_toy(init_model(cfg.model, seeds.model), train, pc);
}

Benchmark prepare_benchmark(const RunConfig& cfg) {
  cfg.validate();
  Benchmark b;
  b.data = prepare_data(cfg);
  b.omega0 = prepare_initial_model(cfg, b.data.train);
  return b;
}

Checkpoint initial_checkpoint(const RunConfig& cfg, const TwoTowerModel& omega0) {
  Checkpoint c = base_checkpoint(cfg, CheckpointStage::pretrained);
  c.omega = omega0.omega;
  c.moments.m.clear();
  c.moments.v.clear();
  return c;
}

ArmResult run_arm(const RunConfig& cfg, const Benchmark& bench) {
  std::string stage;
  return run_arm_staged(cfg, bench, stage);
}

bool RunSummary::all_passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

RunSummary run_experiment(const RunConfig& cfg) {
  RunSummary summary;
  summary.metrics_path = cfg.output_dir / "metrics.csv";
  summary.checkpoint_path = cfg.output_dir / "checkpoint.fcck";
  summary.summary_path = cfg.output_dir / "summary.json";

  std::string stage = "config";
  std::optional<std::filesystem::path> dump;
  try {
    cfg.validate();
    seed_plan(cfg);
    ensure_dir(cfg.output_dir);
    stage = "data";
    Benchmark bench;
    bench.data = prepare_data(cfg);
    stage = "pretrain";
    bench.omega0 = prepare_initial_model(cfg, bench.data.train);
    try {
      summary.result = run_arm_staged(cfg, bench, stage);
    } catch (const TrainingError& e) {
      if (const TrainingSnapshot* snap = e.snapshot()) {
        Checkpoint c = base_checkpoint(cfg, CheckpointStage::failed);
        c.omega = snap->omega;
        c.moments = snap->moments;
        if (snap->estimator) c.estimator = *snap->estimator;
        dump = cfg.output_dir / "state_dump.fcck";
        save_checkpoint(c, *dump);
      }
      throw;
    }
    stage = "write";
    const std::vector<MetricsRecord>& rows = summary.result.records;
    write_text(summary.metrics_path, csv_text(rows));
    save_checkpoint(summary.result.checkpoint, summary.checkpoint_path);

    auto check = [&](const char* name, bool ok) { summary.assertions.push_back({name, ok}); };
    check("recalls_in_unit_interval", std::all_of(rows.begin(), rows.end(), [](const MetricsRecord& r) {
            return r.r1_i2t >= 0.0 && r.r1_i2t <= 1.0 && r.r1_t2i >= 0.0 && r.r1_t2i <= 1.0;
          }));
    check("fn_std_nonnegative",
          std::all_of(rows.begin(), rows.end(), [](const MetricsRecord& r) { return r.fn_std >= 0.0; }));
    check("losses_finite", all_finite_loss(rows));
    if (cfg.arm == Arm::osr_only) check("omega_unchanged", summary.result.checkpoint.omega == bench.omega0.omega);

    Json j = header_json(cfg);
    j["status"] = "ok";
    j["arm"] = to_string(cfg.arm);
    char hash[16];
    std::snprintf(hash, sizeof hash, "%08x", summary.result.checkpoint.config_hash);
    j["config_hash"] = hash;
    j["hinge_saturated"] = summary.result.hinge_saturated;
    j["baseline"] = record_json(rows.front());
    j["final"] = record_json(rows.back());
    Json checks = Json::array();
    for (const Assertion& a : summary.assertions) checks.push_back({{"name", a.name}, {"passed", a.passed}});
    j["assertions"] = checks;
    j["artifacts"] = {{"metrics", summary.metrics_path.string()}, {"checkpoint", summary.checkpoint_path.string()}};
    write_text(summary.summary_path, json_text(j));
    return summary;
  } catch (const Error& e) {
    std::string message = "stage " + stage + " failed: " + e.what();
    if (dump) message += "; state dump: " + dump->string();
    try {
      if (stage != "config") {
        Json j = header_json(cfg);
        j["status"] = "failed";
        j["stage"] = stage;
        j["error"] = e.what();
        j["state_dump"] = dump ? Json(dump->string()) : Json(nullptr);
        write_text(summary.summary_path, json_text(j));
      }
    } catch (const Error&) {
      // The original failure is the one worth reporting.
    }
    throw Error(e.kind(), message);
  }
}

// ---------------------------------------------------------------------------

ColdstartResult experiment_coldstart(const RunConfig& cfg) {
  cfg.validate();
  ColdstartResult out;
  for (Arm arm : cfg.arms) out.arms.push_back({arm, 0, 0, 0});
  const bool has_tuneclip = std::find(cfg.arms.begin(), cfg.arms.end(), Arm::tuneclip) != cfg.arms.end();
  if (has_tuneclip) out.tuneclip_final_best = 0;

  for (std::uint64_t seed : cfg.seeds) {
    RunConfig run = with_seed(cfg, seed);
    const Benchmark bench = prepare_benchmark(run);
    const double baseline = eval_recall_at_k(bench.omega0, bench.data.test, 1).mean();
    std::vector<double> finals;
    for (std::size_t a = 0; a < cfg.arms.size(); ++a) {
      run.arm = cfg.arms[a];
      const ArmResult result = run_arm(run, bench);
      ColdstartArmSummary& s = out.arms[a];
      ++s.seeds;
      bool below = false;
      for (const MetricsRecord& r : result.records) {
        out.rows.push_back({seed, run.arm, r.epoch, r.r1_i2t, r.r1_t2i, baseline, r.fn_std});
        if (r.epoch >= 1 && r.r1_mean() < baseline) below = true;
        if (r.epoch == 1 && r.r1_mean() < baseline) ++s.epoch1_below;
      }
      if (!below) ++s.never_below;
      finals.push_back(result.records.back().r1_mean());
    }
    if (has_tuneclip) {
      const auto t = static_cast<std::size_t>(
          std::find(cfg.arms.begin(), cfg.arms.end(), Arm::tuneclip) - cfg.arms.begin());
      const bool best = std::all_of(finals.begin(), finals.end(), [&](double f) { return finals[t] >= f; });
      if (best) ++*out.tuneclip_final_best;
    }
  }
  return out;
}

void write_coldstart_csv(std::ostream& out, const ColdstartResult& result) {
  out << "seed,arm,epoch,r1_i2t,r1_t2i,r1_mean,baseline_r1,below_baseline,fn_std\n";
  for (const ColdstartRow& r : result.rows) {
    out << r.seed << ',' << to_string(r.arm) << ',' << r.epoch << ',' << format_real(r.r1_i2t) << ','
        << format_real(r.r1_t2i) << ',' << format_real(r.r1_mean()) << ',' << format_real(r.baseline_r1) << ','
        << (r.r1_mean() < r.baseline_r1 ? 1 : 0) << ',' << format_real(r.fn_std) << '\n';
  }
}

MarginSweepResult experiment_margin_sweep(const RunConfig& cfg) {
  cfg.validate();
  MarginSweepResult out;
  for (std::uint64_t seed : cfg.seeds) {
    RunConfig run = with_seed(cfg, seed);
    run.arm = Arm::tuneclip;
    const Benchmark bench = prepare_benchmark(run);
    MarginSeedSummary s;
    s.seed = seed;
    double best = -1.0;
    std::size_t best_index = 0;
    for (std::size_t k = 0; k < cfg.margins.size(); ++k) {
      run.loss.margin = cfg.margins[k];
      const ArmResult result = run_arm(run, bench);
      const MetricsRecord& last = result.records.back();
      MarginRow row{seed, cfg.margins[k], last.r1_i2t, last.r1_t2i, last.fn_std, result.hinge_saturated};
      if (row.r1_mean() > best) {
        best = row.r1_mean();
        best_index = k;
      }
      out.rows.push_back(row);
    }
    s.best_margin = cfg.margins[best_index];
    s.interior = best_index > 0 && best_index + 1 < cfg.margins.size();
    if (s.interior) ++out.interior_count;
    out.seeds.push_back(s);
  }
  return out;
}

void write_margin_csv(std::ostream& out, const MarginSweepResult& result) {
  out << "seed,margin,r1_i2t,r1_t2i,r1_mean,fn_std,hinge_saturated\n";
  for (const MarginRow& r : result.rows) {
    out << r.seed << ',' << format_real(r.margin) << ',' << format_real(r.r1_i2t) << ',' << format_real(r.r1_t2i)
        << ',' << format_real(r.r1_mean()) << ',' << format_real(r.fn_std) << ',' << (r.hinge_saturated ? 1 : 0)
        << '\n';
  }
}

double osr_scaled_gamma(double c, std::size_t epochs) {
  return std::min(1.0, c / std::sqrt(static_cast<double>(epochs)));
}

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::nullopt;
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

OsrScalingResult experiment_osr_scaling(const RunConfig& cfg) {
  cfg.validate();
  const Arm arm = cfg.arm == Arm::osr_only ? Arm::osr_only : Arm::tuneclip;
  const LossConfig lc = arm_loss_config(cfg, arm);
  OsrScalingResult out;
  for (std::size_t epochs : cfg.osr_epochs_list) out.means.push_back({epochs, 0.0, 0.0});
  for (std::uint64_t seed : cfg.seeds) {
    const RunConfig run = with_seed(cfg, seed);
    const Benchmark bench = prepare_benchmark(run);
    const OracleReport exact = exact_loss_and_grad(bench.omega0, bench.data.train, lc);
    for (std::size_t k = 0; k < cfg.osr_epochs_list.size(); ++k) {
      const std::size_t epochs = cfg.osr_epochs_list[k];
      const double gamma = osr_scaled_gamma(cfg.osr_scaling_c, epochs);
      OsrConfig oc;
      oc.epochs = epochs;
      oc.batch = cfg.batch;
      oc.beta1 = 1.0 - gamma;
      oc.beta2 = cfg.beta2;
      oc.schedule = cfg.schedule;
      oc.schedule.gamma_kind = GammaSchedule::constant;
      oc.schedule.gamma_floor = gamma;
      oc.loss = lc;
      oc.seed = seed_plan(run).osr;
      const OsrResult stats = osr_run(bench.omega0, bench.data.train, oc);
      const TheoremQuantities q = estimation_errors(stats.estimator, stats.moments, exact, bench.data.train.size());
      out.rows.push_back({seed, epochs, gamma, oc.beta1, q.u_err_x + q.u_err_z, q.m_err});
      out.means[k].u_err += (q.u_err_x + q.u_err_z) / static_cast<double>(cfg.seeds.size());
      out.means[k].m_err += q.m_err / static_cast<double>(cfg.seeds.size());
    }
  }
  std::vector<double> e, u, m;
  for (const OsrScalingMean& mean : out.means) {
    e.push_back(static_cast<double>(mean.epochs));
    u.push_back(mean.u_err);
    m.push_back(mean.m_err);
  }
  out.u_slope = loglog_slope(e, u);
  out.m_slope = loglog_slope(e, m);
  out.u_strictly_decreasing = out.m_strictly_decreasing = out.means.size() >= 2;
  for (std::size_t k = 1; k < out.means.size(); ++k) {
    if (!(out.means[k].u_err < out.means[k - 1].u_err)) out.u_strictly_decreasing = false;
    if (!(out.means[k].m_err < out.means[k - 1].m_err)) out.m_strictly_decreasing = false;
  }
  return out;
}

void write_osr_scaling_csv(std::ostream& out, const OsrScalingResult& result) {
  out << "seed,epochs,gamma,beta1,u_err,m_err\n";
  for (const OsrScalingRow& r : result.rows) {
    out << r.seed << ',' << r.epochs << ',' << format_real(r.gamma) << ',' << format_real(r.beta1) << ','
        << format_real(r.u_err) << ',' << format_real(r.m_err) << '\n';
  }
}

std::string save_coldstart(const RunConfig& cfg, const ColdstartResult& result) {
  ensure_dir(cfg.output_dir);
  std::ostringstream csv;
  write_coldstart_csv(csv, result);
  write_text(cfg.output_dir / "coldstart.csv", csv.str());

  Json j = header_json(cfg);
  Json arms = Json::array();
  std::ostringstream text;
  text << "arm                  seeds  epoch1_below  never_below\n";
  for (const ColdstartArmSummary& s : result.arms) {
    arms.push_back({{"arm", to_string(s.arm)},
                    {"seeds", s.seeds},
                    {"epoch1_below_baseline", s.epoch1_below},
                    {"never_below_baseline", s.never_below}});
    char line[128];
    std::snprintf(line, sizeof line, "%-20s %5zu %13zu %12zu\n", to_string(s.arm), s.seeds, s.epoch1_below,
                  s.never_below);
    text << line;
  }
  j["arms"] = arms;
  j["tuneclip_final_best"] = result.tuneclip_final_best ? Json(*result.tuneclip_final_best) : Json(nullptr);
  if (result.tuneclip_final_best) {
    text << "tuneclip final R@1 >= every other arm on " << *result.tuneclip_final_best << " seed(s)\n";
  }
  write_text(cfg.output_dir / "coldstart_summary.json", json_text(j));
  return text.str();
}

std::string save_margin_sweep(const RunConfig& cfg, const MarginSweepResult& result) {
  ensure_dir(cfg.output_dir);
  std::ostringstream csv;
  write_margin_csv(csv, result);
  write_text(cfg.output_dir / "margin_sweep.csv", csv.str());

  Json j = header_json(cfg);
  Json seeds = Json::array();
  std::ostringstream text;
  for (const MarginSeedSummary& s : result.seeds) {
    seeds.push_back({{"seed", s.seed}, {"best_margin", s.best_margin}, {"interior", s.interior}});
    text << "seed " << s.seed << ": best margin " << s.best_margin
         << (s.interior ? " (interior)" : " (endpoint)") << '\n';
  }
  bool saturated = false;
  for (const MarginRow& r : result.rows) saturated = saturated || r.hinge_saturated;
  j["seeds"] = seeds;
  j["interior_count"] = result.interior_count;
  j["hinge_saturated"] = saturated;
  text << "interior argmax on " << result.interior_count << " of " << result.seeds.size() << " seed(s)\n";
  if (saturated) text << "hinge saturated: a margin >= 2 keeps every pair active\n";
  write_text(cfg.output_dir / "margin_sweep_summary.json", json_text(j));
  return text.str();
}

std::string save_osr_scaling(const RunConfig& cfg, const OsrScalingResult& result) {
  ensure_dir(cfg.output_dir);
  std::ostringstream csv;
  write_osr_scaling_csv(csv, result);
  write_text(cfg.output_dir / "osr_scaling.csv", csv.str());

  Json j = header_json(cfg);
  Json means = Json::array();
  std::ostringstream text;
  text << "E      mean U_x+U_z           mean M\n";
  for (const OsrScalingMean& m : result.means) {
    means.push_back({{"epochs", m.epochs}, {"u_err", m.u_err}, {"m_err", m.m_err}});
    char line[128];
    std::snprintf(line, sizeof line, "%-6zu %-22.6e %.6e\n", m.epochs, m.u_err, m.m_err);
    text << line;
  }
  j["means"] = means;
  j["u_slope"] = result.u_slope ? Json(*result.u_slope) : Json(nullptr);
  j["m_slope"] = result.m_slope ? Json(*result.m_slope) : Json(nullptr);
  j["u_strictly_decreasing"] = result.u_strictly_decreasing;
  j["m_strictly_decreasing"] = result.m_strictly_decreasing;
  if (result.u_slope) {
    text << "log-log slope: U " << format_real(*result.u_slope) << ", M "
         << (result.m_slope ? format_real(*result.m_slope) : std::string("absent")) << '\n';
  } else {
    text << "log-log slope: absent (needs two or more recovery lengths)\n";
  }
  write_text(cfg.output_dir / "osr_scaling_summary.json", json_text(j));
  return text.str();
}

}  // namespace tuneclip
