// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/tuneclip.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tuneclip/checks.hpp"
#include "tuneclip/checkpoint.hpp"
#include "tuneclip/config.hpp"
#include "tuneclip/datagen.hpp"
#include "tuneclip/error.hpp"
#include "tuneclip/experiment.hpp"
#include "tuneclip/metrics.hpp"

struct tc_config {
  tuneclip::RunConfig cfg;
  std::set<std::string> assigned;
};

struct tc_dataset {
  tuneclip::PairedDataset data;
};

struct tc_checkpoint {
  tuneclip::Checkpoint ckpt;
};

struct tc_report {
  std::string text;
  std::vector<std::pair<std::string, double>> values;
  bool passed = true;

  void add(std::string name, double value) { values.emplace_back(std::move(name), value); }
};

namespace {

using tuneclip::ErrorKind;

thread_local std::string g_last_error;

tc_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return TC_ERR_CONFIG;
    case ErrorKind::parse: return TC_ERR_PARSE;
    case ErrorKind::schema: return TC_ERR_SCHEMA;
    case ErrorKind::shape: return TC_ERR_SHAPE;
    case ErrorKind::numeric: return TC_ERR_NUMERIC;
    case ErrorKind::normalization: return TC_ERR_NORMALIZATION;
    case ErrorKind::state: return TC_ERR_STATE;
    case ErrorKind::training: return TC_ERR_TRAINING;
    case ErrorKind::io: return TC_ERR_IO;
    case ErrorKind::checksum: return TC_ERR_CHECKSUM;
    case ErrorKind::version: return TC_ERR_VERSION;
    case ErrorKind::config_hash: return TC_ERR_CONFIG_HASH;
    case ErrorKind::refused: return TC_ERR_REFUSED;
    case ErrorKind::assertion: return TC_ERR_ASSERTION;
  }
  return TC_ERR_INTERNAL;
}

tc_status fail(tc_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
tc_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return TC_OK;
  } catch (const tuneclip::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(TC_ERR_INTERNAL, e.what());
  }
}

#define TC_REQUIRE(cond, what)                                          \
  do {                                                                  \
    if (!(cond)) return fail(TC_ERR_INVALID_ARGUMENT, what " is NULL"); \
  } while (0)

std::uint64_t required_seed(const tuneclip::RunConfig& cfg) {
  if (!cfg.seed) tuneclip::raise(ErrorKind::config, "a seed is required");
  return *cfg.seed;
}

std::string fmt(const char* pattern, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

}  // namespace

extern "C" {

const char* tc_version(void) { return tuneclip::library_version(); }

const char* tc_last_error(void) { return g_last_error.c_str(); }

const char* tc_status_name(tc_status status) {
  switch (status) {
    case TC_OK: return "ok";
    case TC_ERR_CONFIG: return "config";
    case TC_ERR_PARSE: return "parse";
    case TC_ERR_SCHEMA: return "schema";
    case TC_ERR_SHAPE: return "shape";
    case TC_ERR_NUMERIC: return "numeric";
    case TC_ERR_NORMALIZATION: return "normalization";
    case TC_ERR_STATE: return "state";
    case TC_ERR_TRAINING: return "training";
    case TC_ERR_IO: return "io";
    case TC_ERR_CHECKSUM: return "checksum";
    case TC_ERR_VERSION: return "version";
    case TC_ERR_CONFIG_HASH: return "config_hash";
    case TC_ERR_REFUSED: return "refused";
    case TC_ERR_ASSERTION: return "assertion";
    case TC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case TC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

// --- config ---------------------------------------------------------------

tc_status tc_config_create(tc_config** out) {
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] { *out = new tc_config(); });
}

void tc_config_destroy(tc_config* cfg) { delete cfg; }

tc_status tc_config_load_file(tc_config* cfg, const char* path) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(path, "path");
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) tuneclip::raise(ErrorKind::io, std::string("cannot open config file ") + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    cfg->cfg = tuneclip::parse_config(text, cfg->cfg);
    // Record which keys the file assigned.
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      line = line.substr(0, line.find('#'));
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(0, eq);
      key.erase(0, key.find_first_not_of(" \t\r"));
      key.erase(key.find_last_not_of(" \t\r") + 1);
      cfg->assigned.insert(key);
    }
  });
}

tc_status tc_config_set(tc_config* cfg, const char* key, const char* value) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(key, "key");
  TC_REQUIRE(value, "value");
  return guarded([&] {
    tuneclip::set_config_value(cfg->cfg, key, value);
    cfg->assigned.insert(key);
  });
}

tc_status tc_config_get(const tc_config* cfg, const char* key, char* buf, size_t cap, size_t* len) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(key, "key");
  return guarded([&] {
    const std::string value = tuneclip::get_config_value(cfg->cfg, key);
    if (len != nullptr) *len = value.size();
    if (buf != nullptr && cap > value.size()) std::memcpy(buf, value.c_str(), value.size() + 1);
  });
}

int tc_config_is_set(const tc_config* cfg, const char* key) {
  if (cfg == nullptr || key == nullptr) return 0;
  return cfg->assigned.count(key) ? 1 : 0;
}

tc_status tc_config_validate(const tc_config* cfg) {
  TC_REQUIRE(cfg, "cfg");
  return guarded([&] { cfg->cfg.validate(); });
}

size_t tc_config_key_count(void) { return tuneclip::config_keys().size(); }

const char* tc_config_key_name(size_t index) {
  const auto& keys = tuneclip::config_keys();
  return index < keys.size() ? keys[index].name : nullptr;
}

const char* tc_config_key_help(size_t index) {
  const auto& keys = tuneclip::config_keys();
  return index < keys.size() ? keys[index].help : nullptr;
}

// --- datasets -------------------------------------------------------------

tc_status tc_dataset_generate(const tc_config* cfg, tc_dataset** out) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    cfg->cfg.validate();
    tuneclip::DatasetSpec spec = cfg->cfg.dataset;
    spec.seed = tuneclip::seed_plan(cfg->cfg).data;
    *out = new tc_dataset{tuneclip::generate(spec)};
  });
}

tc_status tc_dataset_load(const char* path, tc_dataset** out) {
  TC_REQUIRE(path, "path");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] { *out = new tc_dataset{tuneclip::load_dataset(path)}; });
}

tc_status tc_dataset_save(const tc_dataset* data, const char* path) {
  TC_REQUIRE(data, "data");
  TC_REQUIRE(path, "path");
  return guarded([&] { tuneclip::save_dataset(data->data, path); });
}

size_t tc_dataset_size(const tc_dataset* data) { return data == nullptr ? 0 : data->data.size(); }

void tc_dataset_destroy(tc_dataset* data) { delete data; }

// --- checkpoints ----------------------------------------------------------

tc_status tc_pretrain(const tc_config* cfg, tc_checkpoint** out) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    const tuneclip::Benchmark bench = tuneclip::prepare_benchmark(cfg->cfg);
    *out = new tc_checkpoint{tuneclip::initial_checkpoint(cfg->cfg, bench.omega0)};
  });
}

tc_status tc_checkpoint_load(const char* path, const tc_config* cfg, int force, tc_checkpoint** out) {
  TC_REQUIRE(path, "path");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    tuneclip::CheckpointExpectations expect;
    if (cfg != nullptr) {
      expect.config_hash = tuneclip::config_hash(cfg->cfg);
      expect.dims = cfg->cfg.model;
      expect.force = force != 0;
      if (!cfg->cfg.dataset_path) {
        // Estimators are sized to the training split.
        const double n = cfg->cfg.dataset.n;
        expect.n = cfg->cfg.dataset.n - static_cast<std::size_t>(std::llround(n * cfg->cfg.test_fraction));
      }
    }
    *out = new tc_checkpoint{tuneclip::load_checkpoint(path, expect)};
  });
}

tc_status tc_checkpoint_save(const tc_checkpoint* ckpt, const char* path) {
  TC_REQUIRE(ckpt, "ckpt");
  TC_REQUIRE(path, "path");
  return guarded([&] { tuneclip::save_checkpoint(ckpt->ckpt, path); });
}

size_t tc_checkpoint_parameter_count(const tc_checkpoint* ckpt) {
  return ckpt == nullptr ? 0 : ckpt->ckpt.omega.size();
}

const char* tc_checkpoint_stage(const tc_checkpoint* ckpt) {
  return ckpt == nullptr ? nullptr : tuneclip::to_string(ckpt->ckpt.stage);
}

void tc_checkpoint_destroy(tc_checkpoint* ckpt) { delete ckpt; }

// --- reports --------------------------------------------------------------

const char* tc_report_text(const tc_report* report) { return report == nullptr ? "" : report->text.c_str(); }

int tc_report_passed(const tc_report* report) { return report != nullptr && report->passed ? 1 : 0; }

tc_status tc_report_get(const tc_report* report, const char* name, double* value) {
  TC_REQUIRE(report, "report");
  TC_REQUIRE(name, "name");
  TC_REQUIRE(value, "value");
  for (const auto& [key, v] : report->values) {
    if (key == name) {
      *value = v;
      return TC_OK;
    }
  }
  return fail(TC_ERR_INVALID_ARGUMENT, std::string("report has no value named ") + name);
}

void tc_report_destroy(tc_report* report) { delete report; }

tc_status tc_run(const tc_config* cfg, tc_report** out) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    required_seed(cfg->cfg);
    const tuneclip::RunSummary s = tuneclip::run_experiment(cfg->cfg);
    auto r = std::make_unique<tc_report>();
    const auto& rows = s.result.records;
    const tuneclip::MetricsRecord& first = rows.front();
    const tuneclip::MetricsRecord& last = rows.back();
    std::ostringstream text;
    text << "arm " << tuneclip::to_string(s.result.arm) << ": " << rows.size() - 1 << " epoch(s)\n";
    text << "held-out R@1 (i2t/t2i): start " << tuneclip::format_real(first.r1_i2t) << " / "
         << tuneclip::format_real(first.r1_t2i) << ", final " << tuneclip::format_real(last.r1_i2t) << " / "
         << tuneclip::format_real(last.r1_t2i) << '\n';
    text << "final fn_std " << tuneclip::format_real(last.fn_std) << '\n';
    for (const auto& a : s.assertions) text << (a.passed ? "PASS " : "FAIL ") << a.name << '\n';
    text << "wrote " << s.metrics_path.string() << ", " << s.checkpoint_path.string() << ", "
         << s.summary_path.string() << '\n';
    r->text = text.str();
    r->passed = s.all_passed();
    r->add("epochs", static_cast<double>(rows.size() - 1));
    r->add("baseline_r1", first.r1_mean());
    r->add("final_r1", last.r1_mean());
    r->add("final_fn_std", last.fn_std);
    *out = r.release();
  });
}

tc_status tc_grad_check(const tc_config* cfg, size_t cases, tc_report** out) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    const tuneclip::GradCheckResult res = tuneclip::grad_check_suite(required_seed(cfg->cfg), cases);
    auto r = std::make_unique<tc_report>();
    std::ostringstream text;
    for (const auto& c : res.cases) {
      char line[96];
      std::snprintf(line, sizeof line, "%-5s B=%zu rel_error=%.3e %s\n", tuneclip::to_string(c.variant), c.batch,
                    c.rel_error, c.rel_error <= res.tolerance ? "ok" : "FAIL");
      text << line;
    }
    text << "max relative error " << fmt("%.3e", res.max_rel_error) << " (tolerance "
         << fmt("%.0e", res.tolerance) << ")\n";
    r->text = text.str();
    r->passed = res.passed;
    r->add("cases", static_cast<double>(res.cases.size()));
    r->add("max_rel_error", res.max_rel_error);
    *out = r.release();
  });
}

tc_status tc_oracle_check(const tc_config* cfg, size_t n, const char* json_path, tc_report** out) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    const tuneclip::OracleCheckResult res = tuneclip::oracle_check(required_seed(cfg->cfg), n);
    if (json_path != nullptr) {
      nlohmann::ordered_json j;
      j["n"] = res.n;
      j["gcl"] = nlohmann::ordered_json::parse(tuneclip::to_json(res.gcl));
      j["hgcl"] = nlohmann::ordered_json::parse(tuneclip::to_json(res.hgcl));
      const std::string text = j.dump(2) + "\n";
      std::ofstream f(json_path, std::ios::binary | std::ios::trunc);
      if (!f) tuneclip::raise(ErrorKind::io, std::string("cannot write ") + json_path);
      f << text;
    }
    auto r = std::make_unique<tc_report>();
    std::ostringstream text;
    text << "n=" << res.n << " max per-coordinate error: gcl " << fmt("%.3e", res.max_abs_gcl) << ", hgcl "
         << fmt("%.3e", res.max_abs_hgcl) << " (tolerance " << fmt("%.0e", res.tolerance) << ")\n";
    r->text = text.str();
    r->passed = res.passed;
    r->add("max_abs_gcl", res.max_abs_gcl);
    r->add("max_abs_hgcl", res.max_abs_hgcl);
    *out = r.release();
  });
}

tc_status tc_exp_coldstart(const tc_config* cfg, tc_report** out) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    const tuneclip::ColdstartResult res = tuneclip::experiment_coldstart(cfg->cfg);
    auto r = std::make_unique<tc_report>();
    r->text = tuneclip::save_coldstart(cfg->cfg, res);
    for (const auto& s : res.arms) {
      const std::string arm = tuneclip::to_string(s.arm);
      r->add(arm + ".epoch1_below", static_cast<double>(s.epoch1_below));
      r->add(arm + ".never_below", static_cast<double>(s.never_below));
    }
    if (res.tuneclip_final_best) r->add("tuneclip_final_best", static_cast<double>(*res.tuneclip_final_best));
    *out = r.release();
  });
}

tc_status tc_exp_margin(const tc_config* cfg, tc_report** out) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    const tuneclip::MarginSweepResult res = tuneclip::experiment_margin_sweep(cfg->cfg);
    auto r = std::make_unique<tc_report>();
    r->text = tuneclip::save_margin_sweep(cfg->cfg, res);
    r->add("interior_count", static_cast<double>(res.interior_count));
    *out = r.release();
  });
}

tc_status tc_exp_osr_scaling(const tc_config* cfg, tc_report** out) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    const tuneclip::OsrScalingResult res = tuneclip::experiment_osr_scaling(cfg->cfg);
    auto r = std::make_unique<tc_report>();
    r->text = tuneclip::save_osr_scaling(cfg->cfg, res);
    if (res.u_slope) r->add("u_slope", *res.u_slope);
    if (res.m_slope) r->add("m_slope", *res.m_slope);
    r->add("u_strictly_decreasing", res.u_strictly_decreasing ? 1.0 : 0.0);
    r->add("m_strictly_decreasing", res.m_strictly_decreasing ? 1.0 : 0.0);
    *out = r.release();
  });
}

tc_status tc_evaluate(const tc_config* cfg, const tc_checkpoint* ckpt, size_t k, tc_report** out) {
  TC_REQUIRE(cfg, "cfg");
  TC_REQUIRE(ckpt, "ckpt");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    cfg->cfg.validate();
    tuneclip::CheckpointExpectations expect;
    expect.dims = cfg->cfg.model;
    tuneclip::check_checkpoint(ckpt->ckpt, expect);
    const tuneclip::DataSplit data = tuneclip::prepare_data(cfg->cfg);
    tuneclip::TwoTowerModel model = ckpt->ckpt.model();
    const tuneclip::RecallPair recall = tuneclip::eval_recall_at_k(model, data.test, k);
    const tuneclip::FnStats fn = tuneclip::fn_similarity_stats(model, data.train, cfg->cfg.fn_top_k);
    auto r = std::make_unique<tc_report>();
    std::ostringstream text;
    text << "R@" << k << " i2t " << tuneclip::format_real(recall.i2t) << ", t2i " << tuneclip::format_real(recall.t2i)
         << " on " << data.test.size() << " held-out pairs\n";
    if (fn.no_false_negatives) {
      text << "no false negatives: every concept is unique\n";
    } else {
      text << "fn_mean " << tuneclip::format_real(fn.fn_mean) << ", fn_std " << tuneclip::format_real(fn.fn_std)
           << ", tp_mean " << tuneclip::format_real(fn.tp_mean) << ", tn_mean " << tuneclip::format_real(fn.tn_mean)
           << '\n';
    }
    r->text = text.str();
    r->add("r_i2t", recall.i2t);
    r->add("r_t2i", recall.t2i);
    r->add("fn_mean", fn.fn_mean);
    r->add("fn_std", fn.fn_std);
    r->add("tp_mean", fn.tp_mean);
    r->add("tn_mean", fn.tn_mean);
    r->add("no_false_negatives", fn.no_false_negatives ? 1.0 : 0.0);
    *out = r.release();
  });
}

tc_status tc_report_metrics(const char* csv_path, tc_report** out) {
  TC_REQUIRE(csv_path, "csv_path");
  TC_REQUIRE(out, "out");
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) tuneclip::raise(ErrorKind::io, std::string("cannot open ") + csv_path);
    const std::vector<tuneclip::MetricsRecord> rows = tuneclip::read_metrics_csv(in);
    if (rows.empty()) tuneclip::raise(ErrorKind::schema, std::string(csv_path) + " has no rows");
    auto r = std::make_unique<tc_report>();
    const double base = rows.front().r1_mean();
    double lowest = base;
    for (std::size_t i = 1; i < rows.size(); ++i) lowest = std::min(lowest, rows[i].r1_mean());
    std::ostringstream text;
    text << "epoch  loss                 r1_mean  delta    fn_std\n";
    for (const auto& row : rows) {
      char line[128];
      std::snprintf(line, sizeof line, "%-6zu %-20.12g %-8.4f %+-8.4f %.5f\n", row.epoch, row.loss, row.r1_mean(),
                    row.r1_mean() - base, row.fn_std);
      text << line;
    }
    text << "lowest R@1 after start " << fmt("%+.4f", lowest - base) << " relative to epoch 0\n";
    r->text = text.str();
    r->passed = true;
    r->add("epochs", static_cast<double>(rows.size() - 1));
    r->add("baseline_r1", base);
    r->add("final_r1", rows.back().r1_mean());
    r->add("min_delta", lowest - base);
    r->add("final_fn_std", rows.back().fn_std);
    *out = r.release();
  });
}

}  // extern "C"
