// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Talks to the library only through tuneclip.h.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "tuneclip/tuneclip.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

int exit_code(tc_status status) {
  switch (status) {
    case TC_OK:
      return kExitOk;
    case TC_ERR_CONFIG:
    case TC_ERR_INVALID_ARGUMENT:
      return kExitUsage;
    case TC_ERR_NUMERIC:
    case TC_ERR_NORMALIZATION:
    case TC_ERR_TRAINING:
      return kExitNumeric;
    default:
      return kExitFailure;
  }
}

int report_error(tc_status status) {
  std::fprintf(stderr, "error: %s\n", tc_last_error());
  return exit_code(status);
}

struct ConfigDeleter {
  void operator()(tc_config* p) const { tc_config_destroy(p); }
};
struct ReportDeleter {
  void operator()(tc_report* p) const { tc_report_destroy(p); }
};
struct CheckpointDeleter {
  void operator()(tc_checkpoint* p) const { tc_checkpoint_destroy(p); }
};
struct DatasetDeleter {
  void operator()(tc_dataset* p) const { tc_dataset_destroy(p); }
};

using ConfigPtr = std::unique_ptr<tc_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<tc_report, ReportDeleter>;

// Options shared by every subcommand that takes a run configuration.
struct ConfigOptions {
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;  // key -> value, from per-key flags
};

std::string flag_name(const std::string& key) {
  std::string out = key;
  for (char& c : out) {
    if (c == '_') c = '-';
  }
  return out;
}

bool is_bool_key(const tc_config* defaults, const char* key) {
  char buf[16];
  size_t len = 0;
  if (tc_config_get(defaults, key, buf, sizeof buf, &len) != TC_OK) return false;
  const std::string v(buf, len < sizeof buf ? len : 0);
  return v == "true" || v == "false";
}

void add_config_options(CLI::App* cmd, ConfigOptions& opts, const tc_config* defaults,
                        const std::vector<std::string>& skip = {}) {
  cmd->add_option("--config", opts.file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.sets, "override one key, as key=value (repeatable)");
  auto* group = cmd->add_option_group("Config keys", "Each key of the config file is also a flag");
  for (size_t i = 0; i < tc_config_key_count(); ++i) {
    const std::string key = tc_config_key_name(i);
    if (std::find(skip.begin(), skip.end(), key) != skip.end()) continue;
    const std::string name = "--" + flag_name(key);
    const std::string help = tc_config_key_help(i);
    if (is_bool_key(defaults, key.c_str())) {
      group->add_flag_function(
          name, [&opts, key](std::int64_t count) { opts.flags[key] = count > 0 ? "true" : "false"; },
          help);
    } else {
      group->add_option_function<std::string>(
          name, [&opts, key](const std::string& v) { opts.flags[key] = v; }, help);
    }
  }
}

// Builds the configuration: defaults, then the file, then --set, then flags.
tc_status build_config(const ConfigOptions& opts, ConfigPtr& out) {
  tc_config* raw = nullptr;
  tc_status st = tc_config_create(&raw);
  if (st != TC_OK) return st;
  out.reset(raw);
  if (!opts.file.empty() && (st = tc_config_load_file(raw, opts.file.c_str())) != TC_OK) return st;
  for (const std::string& kv : opts.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return TC_ERR_INVALID_ARGUMENT;
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    if ((st = tc_config_set(raw, trim(kv.substr(0, eq)).c_str(), trim(kv.substr(eq + 1)).c_str())) != TC_OK) return st;
  }
  for (const auto& [key, value] : opts.flags) {
    if ((st = tc_config_set(raw, key.c_str(), value.c_str())) != TC_OK) return st;
  }
  return tc_config_validate(raw);
}

bool has_seed(const tc_config* cfg) { return tc_config_is_set(cfg, "seed") != 0; }

int missing_seed(const char* command) {
  std::fprintf(stderr, "error: %s needs --seed (or seed = ... in the config)\n", command);
  return kExitUsage;
}

// Reads *raw only after the command has filled it.
int finish(tc_status status, tc_report* const* raw) {
  ReportPtr report(*raw);
  if (status != TC_OK) return report_error(status);
  std::fputs(tc_report_text(report.get()), stdout);
  return tc_report_passed(report.get()) ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tuneclip: contrastive fine-tuning with statistics recovery on synthetic paired data"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", std::string(tc_version()));
  app.footer("Config files hold `key = value` lines; `#` starts a comment. Flags override the file.");

  tc_config* defaults_raw = nullptr;
  if (tc_config_create(&defaults_raw) != TC_OK) return report_error(TC_ERR_INTERNAL);
  ConfigPtr defaults(defaults_raw);

  std::map<std::string, ConfigOptions> opts;
  std::map<std::string, std::function<int()>> actions;
  auto command = [&](const std::string& name, const std::string& help,
                     const std::vector<std::string>& skip = {}) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_config_options(cmd, opts[name], defaults.get(), skip);
    return cmd;
  };

  // gen-data
  std::string data_out;
  {
    auto* cmd = command("gen-data", "generate the synthetic paired dataset");
    cmd->add_option("--out", data_out, "dataset file to write")->required();
    actions["gen-data"] = [&] {
      ConfigPtr cfg;
      if (tc_status st = build_config(opts["gen-data"], cfg); st != TC_OK) return report_error(st);
      if (!has_seed(cfg.get())) return missing_seed("gen-data");
      tc_dataset* raw = nullptr;
      if (tc_status st = tc_dataset_generate(cfg.get(), &raw); st != TC_OK) return report_error(st);
      std::unique_ptr<tc_dataset, DatasetDeleter> data(raw);
      if (tc_status st = tc_dataset_save(data.get(), data_out.c_str()); st != TC_OK) return report_error(st);
      std::printf("wrote %zu pairs to %s\n", tc_dataset_size(data.get()), data_out.c_str());
      return kExitOk;
    };
  }

  // pretrain
  std::string pretrain_out;
  {
    auto* cmd = command("pretrain", "pretrain the starting weights and save them as a checkpoint");
    cmd->add_option("--out", pretrain_out, "checkpoint to write (default: <output_dir>/pretrained.fcck)");
    actions["pretrain"] = [&] {
      ConfigPtr cfg;
      if (tc_status st = build_config(opts["pretrain"], cfg); st != TC_OK) return report_error(st);
      if (!has_seed(cfg.get())) return missing_seed("pretrain");
      std::string path = pretrain_out;
      if (path.empty()) {
        char dir[4096];
        size_t len = 0;
        tc_config_get(cfg.get(), "output_dir", dir, sizeof dir, &len);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        path = (std::filesystem::path(dir) / "pretrained.fcck").string();
      }
      tc_checkpoint* raw = nullptr;
      if (tc_status st = tc_pretrain(cfg.get(), &raw); st != TC_OK) return report_error(st);
      std::unique_ptr<tc_checkpoint, CheckpointDeleter> ckpt(raw);
      if (tc_status st = tc_checkpoint_save(ckpt.get(), path.c_str()); st != TC_OK) return report_error(st);
      std::printf("wrote %zu parameters to %s\n", tc_checkpoint_parameter_count(ckpt.get()), path.c_str());
      return kExitOk;
    };
  }

  // osr and finetune run one arm each.
  for (const char* name : {"osr", "finetune"}) {
    const std::string sub = name;
    command(sub, sub == "osr" ? "recover optimizer statistics at fixed weights (the osr_only arm)"
                              : "run the configured arm end to end (default arm: tuneclip)");
    actions[sub] = [&, sub] {
      ConfigPtr cfg;
      if (tc_status st = build_config(opts[sub], cfg); st != TC_OK) return report_error(st);
      if (!has_seed(cfg.get())) return missing_seed(sub.c_str());
      if (sub == "osr") tc_config_set(cfg.get(), "arm", "osr_only");
      tc_report* raw = nullptr;
      return finish(tc_run(cfg.get(), &raw), &raw);
    };
  }

  // grad-check
  size_t grad_cases = 24;
  {
    auto* cmd = command("grad-check", "compare analytic gradients with central differences");
    cmd->add_option("--cases", grad_cases, "number of random cases")->capture_default_str()->check(CLI::PositiveNumber);
    actions["grad-check"] = [&] {
      ConfigPtr cfg;
      if (tc_status st = build_config(opts["grad-check"], cfg); st != TC_OK) return report_error(st);
      if (!has_seed(cfg.get())) return missing_seed("grad-check");
      tc_report* raw = nullptr;
      return finish(tc_grad_check(cfg.get(), grad_cases, &raw), &raw);
    };
  }

  // oracle-check; its --n is the check size, not the dataset size.
  size_t oracle_n = 64;
  std::string oracle_json;
  {
    auto* cmd = command("oracle-check", "compare the full-batch estimator with the exact gradient", {"n"});
    cmd->add_option("--n", oracle_n, "number of pairs")->capture_default_str()->check(CLI::Range(2, 4096));
    cmd->add_option("--json", oracle_json, "write the exact oracle reports to this file");
    actions["oracle-check"] = [&] {
      ConfigPtr cfg;
      if (tc_status st = build_config(opts["oracle-check"], cfg); st != TC_OK) return report_error(st);
      if (!has_seed(cfg.get())) return missing_seed("oracle-check");
      tc_report* raw = nullptr;
      return finish(tc_oracle_check(cfg.get(), oracle_n, oracle_json.empty() ? nullptr : oracle_json.c_str(), &raw),
                    &raw);
    };
  }

  // Multi-seed experiments take their seed list from `seeds`; --seed runs a
  // single seed instead.
  using ExpFn = tc_status (*)(const tc_config*, tc_report**);
  const std::vector<std::tuple<std::string, std::string, ExpFn>> experiments{
      {"exp-coldstart", "compare the arms' held-out recall over fine-tuning", tc_exp_coldstart},
      {"exp-margin", "sweep the hinge margin", tc_exp_margin},
      {"exp-osr-scaling", "measure recovery error against recovery length", tc_exp_osr_scaling},
  };
  for (const auto& [name, help, fn] : experiments) {
    command(name, help);
    actions[name] = [&, name = name, fn = fn] {
      ConfigPtr cfg;
      if (tc_status st = build_config(opts[name], cfg); st != TC_OK) return report_error(st);
      if (has_seed(cfg.get())) {
        char buf[32];
        size_t len = 0;
        tc_config_get(cfg.get(), "seed", buf, sizeof buf, &len);
        if (tc_status st = tc_config_set(cfg.get(), "seeds", buf); st != TC_OK) return report_error(st);
      } else if (!tc_config_is_set(cfg.get(), "seeds")) {
        std::fprintf(stderr, "error: %s needs --seed or a seeds list (seeds = 1,2,3)\n", name.c_str());
        return kExitUsage;
      }
      tc_report* raw = nullptr;
      return finish(fn(cfg.get(), &raw), &raw);
    };
  }

  // eval
  std::string eval_ckpt;
  size_t eval_k = 1;
  {
    auto* cmd = command("eval", "held-out recall and false-negative statistics of a checkpoint");
    cmd->add_option("--checkpoint", eval_ckpt, "checkpoint to evaluate")->required()->check(CLI::ExistingFile);
    cmd->add_option("--k", eval_k, "recall cutoff")->capture_default_str()->check(CLI::PositiveNumber);
    actions["eval"] = [&] {
      ConfigPtr cfg;
      if (tc_status st = build_config(opts["eval"], cfg); st != TC_OK) return report_error(st);
      if (!has_seed(cfg.get())) return missing_seed("eval");
      char force[8];
      size_t len = 0;
      tc_config_get(cfg.get(), "force", force, sizeof force, &len);
      tc_checkpoint* raw = nullptr;
      if (tc_status st = tc_checkpoint_load(eval_ckpt.c_str(), cfg.get(), std::string(force) == "true", &raw);
          st != TC_OK)
        return report_error(st);
      std::unique_ptr<tc_checkpoint, CheckpointDeleter> ckpt(raw);
      tc_report* report = nullptr;
      return finish(tc_evaluate(cfg.get(), ckpt.get(), eval_k, &report), &report);
    };
  }

  // report
  std::string metrics_path;
  {
    auto* cmd = app.add_subcommand("report", "summarize a metrics CSV");
    cmd->add_option("--metrics", metrics_path, "metrics.csv written by osr or finetune")
        ->required()
        ->check(CLI::ExistingFile);
    actions["report"] = [&] {
      tc_report* raw = nullptr;
      return finish(tc_report_metrics(metrics_path.c_str(), &raw), &raw);
    };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  for (CLI::App* sub : app.get_subcommands()) return actions.at(sub->get_name())();
  return kExitUsage;
}
