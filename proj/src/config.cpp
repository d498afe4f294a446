// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/config.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "tuneclip/error.hpp"

namespace tuneclip {

const char* to_string(Arm arm) noexcept {
  switch (arm) {
    case Arm::tuneclip: return "tuneclip";
    case Arm::fastclip_zero_init: return "fastclip_zero_init";
    case Arm::openclip_mbcl: return "openclip_mbcl";
    case Arm::osr_only: return "osr_only";
    case Arm::gcl_with_osr: return "gcl_with_osr";
  }
  return "unknown";
}

Arm parse_arm(std::string_view text) {
  for (Arm a : {Arm::tuneclip, Arm::fastclip_zero_init, Arm::openclip_mbcl, Arm::osr_only, Arm::gcl_with_osr}) {
    if (text == to_string(a)) return a;
  }
  raise(ErrorKind::config, "unknown arm '" + std::string(text) + "'");
}

LossVariant arm_loss(Arm arm, LossVariant configured) {
  switch (arm) {
    case Arm::tuneclip: return LossVariant::hgcl;
    case Arm::fastclip_zero_init: return LossVariant::gcl;
    case Arm::openclip_mbcl: return LossVariant::mbcl;
    case Arm::gcl_with_osr: return LossVariant::gcl;
    case Arm::osr_only: return configured;
  }
  return configured;
}

bool arm_runs_osr(Arm arm) noexcept {
  return arm == Arm::tuneclip || arm == Arm::osr_only || arm == Arm::gcl_with_osr;
}

bool arm_runs_finetune(Arm arm) noexcept { return arm != Arm::osr_only; }

void RunConfig::validate() const {
  DatasetSpec spec = dataset;
  spec.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) raise(ErrorKind::config, "test_fraction must lie in (0, 1)");
  model.validate();
  if (model.d_img != dataset.d_img || model.d_txt != dataset.d_txt) {
    raise(ErrorKind::config, "model input widths must match the dataset widths");
  }
  if (pretrain.batch < 1) raise(ErrorKind::config, "pretrain_batch must be >= 1");
  if (!(pretrain.lr > 0.0)) raise(ErrorKind::config, "pretrain_lr must be > 0");
  LossConfig lc = loss;
  lc.variant = arm_loss(arm, loss.variant);
  lc.validate();
  if (arm == Arm::osr_only && lc.variant == LossVariant::mbcl) {
    raise(ErrorKind::config, "arm osr_only needs loss gcl or hgcl");
  }
  schedule.validate();
  if (batch < 1) raise(ErrorKind::config, "batch must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) raise(ErrorKind::config, "beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) raise(ErrorKind::config, "beta2 must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) raise(ErrorKind::config, "weight_decay must be >= 0");
  if (fn_top_k < 1) raise(ErrorKind::config, "fn_top_k must be >= 1");
  if (arms.empty()) raise(ErrorKind::config, "arms must not be empty");
  if (margins.empty()) raise(ErrorKind::config, "margins must not be empty");
  for (double m : margins) {
    if (!(m >= 0.0)) raise(ErrorKind::config, "margins must be >= 0");
  }
  if (osr_epochs_list.empty()) raise(ErrorKind::config, "osr_epochs_list must not be empty");
  for (std::size_t i = 0; i < osr_epochs_list.size(); ++i) {
    if (osr_epochs_list[i] < 1) raise(ErrorKind::config, "osr_epochs_list entries must be >= 1");
    if (i > 0 && osr_epochs_list[i] <= osr_epochs_list[i - 1]) {
      raise(ErrorKind::config, "osr_epochs_list must be sorted ascending without repeats");
    }
  }
  if (!(osr_scaling_c > 0.0)) raise(ErrorKind::config, "osr_scaling_c must be > 0");
  if (seeds.empty()) raise(ErrorKind::config, "seeds must not be empty");
}

SeedPlan seed_plan(const RunConfig& cfg) {
  auto pick = [&](const std::optional<std::uint64_t>& own, std::uint64_t offset, const char* name) {
    if (own) return *own;
    if (cfg.seed) return *cfg.seed + offset;
    raise(ErrorKind::config, std::string("no seed given: set seed or ") + name);
  };
  SeedPlan plan;
  plan.data = pick(cfg.data_seed, 0, "data_seed");
  plan.model = pick(cfg.model_seed, 200, "model_seed");
  plan.train = pick(cfg.train_seed, 400, "train_seed");
  plan.split = plan.data + 100;
  plan.pretrain = plan.model + 100;
  plan.osr = plan.train + 100;
  return plan;
}

RunConfig with_seed(const RunConfig& cfg, std::uint64_t seed) {
  RunConfig out = cfg;
  out.seed = seed;
  out.data_seed.reset();
  out.model_seed.reset();
  out.train_seed.reset();
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  raise(ErrorKind::config, "invalid value '" + std::string(value) + "' for " + std::string(key));
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v);
  return out;
}

std::uint32_t to_u32(std::string_view key, std::string_view v) {
  const std::uint64_t x = to_u64(key, v);
  if (x > 0xffffffffULL) bad_value(key, v);
  return static_cast<std::uint32_t>(x);
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = v.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? v.size() : comma;
    out.push_back(trim(v.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string real_text(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ',';
    out += fmt(items[i]);
  }
  return out;
}

struct KeyHandler {
  ConfigKey key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

void set_opt_u64(std::optional<std::uint64_t>& slot, std::string_view key, std::string_view v) {
  if (v.empty()) slot.reset();
  else slot = to_u64(key, v);
}

std::string opt_u64(const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : std::string(); }

const std::vector<KeyHandler>& handlers() {
  static const std::vector<KeyHandler> table = [] {
    std::vector<KeyHandler> t;
    auto add = [&](const char* name, const char* help, auto set, auto get) {
      t.push_back({{name, help}, set, get});
    };
    // Data.
    add("n", "number of generated pairs",
        [](RunConfig& c, std::string_view v) { c.dataset.n = to_u32("n", v); },
        [](const RunConfig& c) { return std::to_string(c.dataset.n); });
    add("d_img", "image feature width",
        [](RunConfig& c, std::string_view v) { c.dataset.d_img = c.model.d_img = to_u32("d_img", v); },
        [](const RunConfig& c) { return std::to_string(c.dataset.d_img); });
    add("d_txt", "text feature width",
        [](RunConfig& c, std::string_view v) { c.dataset.d_txt = c.model.d_txt = to_u32("d_txt", v); },
        [](const RunConfig& c) { return std::to_string(c.dataset.d_txt); });
    add("k_concepts", "number of planted concepts",
        [](RunConfig& c, std::string_view v) { c.dataset.k_concepts = to_u32("k_concepts", v); },
        [](const RunConfig& c) { return std::to_string(c.dataset.k_concepts); });
    add("noise_sigma", "per-sample latent noise scale",
        [](RunConfig& c, std::string_view v) { c.dataset.noise_sigma = to_real("noise_sigma", v); },
        [](const RunConfig& c) { return real_text(c.dataset.noise_sigma); });
    add("dataset_path", "load the dataset from this file instead of generating it",
        [](RunConfig& c, std::string_view v) {
          if (v.empty()) c.dataset_path.reset();
          else c.dataset_path = std::filesystem::path(std::string(v));
        },
        [](const RunConfig& c) { return c.dataset_path ? c.dataset_path->string() : std::string(); });
    add("test_fraction", "held-out share of the dataset",
        [](RunConfig& c, std::string_view v) { c.test_fraction = to_real("test_fraction", v); },
        [](const RunConfig& c) { return real_text(c.test_fraction); });
    // Model.
    add("hidden", "hidden width of each tower",
        [](RunConfig& c, std::string_view v) { c.model.hidden = to_u32("hidden", v); },
        [](const RunConfig& c) { return std::to_string(c.model.hidden); });
    add("embed", "embedding width",
        [](RunConfig& c, std::string_view v) { c.model.embed = to_u32("embed", v); },
        [](const RunConfig& c) { return std::to_string(c.model.embed); });
    add("tau", "temperature",
        [](RunConfig& c, std::string_view v) { c.model.tau = c.loss.tau = to_real("tau", v); },
        [](const RunConfig& c) { return real_text(c.model.tau); });
    // Pretraining.
    add("pretrain_epochs", "epochs of mini-batch contrastive pretraining",
        [](RunConfig& c, std::string_view v) { c.pretrain.epochs = to_u64("pretrain_epochs", v); },
        [](const RunConfig& c) { return std::to_string(c.pretrain.epochs); });
    add("pretrain_lr", "pretraining learning rate",
        [](RunConfig& c, std::string_view v) { c.pretrain.lr = to_real("pretrain_lr", v); },
        [](const RunConfig& c) { return real_text(c.pretrain.lr); });
    add("pretrain_batch", "pretraining batch size",
        [](RunConfig& c, std::string_view v) { c.pretrain.batch = to_u64("pretrain_batch", v); },
        [](const RunConfig& c) { return std::to_string(c.pretrain.batch); });
    add("init_checkpoint", "start from the weights in this checkpoint instead of pretraining",
        [](RunConfig& c, std::string_view v) {
          if (v.empty()) c.init_checkpoint.reset();
          else c.init_checkpoint = std::filesystem::path(std::string(v));
        },
        [](const RunConfig& c) { return c.init_checkpoint ? c.init_checkpoint->string() : std::string(); });
    add("force", "accept an init_checkpoint made under a different config hash",
        [](RunConfig& c, std::string_view v) { c.force = to_bool("force", v); },
        [](const RunConfig& c) { return std::string(c.force ? "true" : "false"); });
    // Loss.
    add("loss", "loss for arm osr_only: gcl or hgcl (other arms fix their own)",
        [](RunConfig& c, std::string_view v) { c.loss.variant = parse_loss_variant(v); },
        [](const RunConfig& c) { return std::string(to_string(c.loss.variant)); });
    add("epsilon", "offset inside the log",
        [](RunConfig& c, std::string_view v) { c.loss.epsilon = to_real("epsilon", v); },
        [](const RunConfig& c) { return real_text(c.loss.epsilon); });
    add("margin", "hinge margin",
        [](RunConfig& c, std::string_view v) { c.loss.margin = to_real("margin", v); },
        [](const RunConfig& c) { return real_text(c.loss.margin); });
    add("margin_smoothing", "softplus sharpness for a smoothed hinge; 0 keeps the exact hinge",
        [](RunConfig& c, std::string_view v) { c.loss.margin_smoothing = to_real("margin_smoothing", v); },
        [](const RunConfig& c) { return real_text(c.loss.margin_smoothing); });
    // Optimization.
    add("lr", "fine-tuning peak learning rate",
        [](RunConfig& c, std::string_view v) { c.schedule.lr_base = to_real("lr", v); },
        [](const RunConfig& c) { return real_text(c.schedule.lr_base); });
    add("lr_schedule", "constant or cosine",
        [](RunConfig& c, std::string_view v) { c.schedule.lr_kind = parse_lr_schedule(v); },
        [](const RunConfig& c) { return std::string(to_string(c.schedule.lr_kind)); });
    add("gamma_schedule", "constant or cosine",
        [](RunConfig& c, std::string_view v) { c.schedule.gamma_kind = parse_gamma_schedule(v); },
        [](const RunConfig& c) { return std::string(to_string(c.schedule.gamma_kind)); });
    add("gamma_floor", "moving-average weight after the decay",
        [](RunConfig& c, std::string_view v) { c.schedule.gamma_floor = to_real("gamma_floor", v); },
        [](const RunConfig& c) { return real_text(c.schedule.gamma_floor); });
    add("gamma_start", "moving-average weight at the first step",
        [](RunConfig& c, std::string_view v) { c.schedule.gamma_start = to_real("gamma_start", v); },
        [](const RunConfig& c) { return real_text(c.schedule.gamma_start); });
    add("gamma_decay_epochs", "epochs over which gamma decays",
        [](RunConfig& c, std::string_view v) { c.schedule.gamma_decay_epochs = to_u64("gamma_decay_epochs", v); },
        [](const RunConfig& c) { return std::to_string(c.schedule.gamma_decay_epochs); });
    add("osr_epochs", "statistics recovery epochs",
        [](RunConfig& c, std::string_view v) { c.osr_epochs = to_u64("osr_epochs", v); },
        [](const RunConfig& c) { return std::to_string(c.osr_epochs); });
    add("finetune_epochs", "fine-tuning epochs",
        [](RunConfig& c, std::string_view v) { c.finetune_epochs = to_u64("finetune_epochs", v); },
        [](const RunConfig& c) { return std::to_string(c.finetune_epochs); });
    add("batch", "batch size for recovery and fine-tuning",
        [](RunConfig& c, std::string_view v) { c.batch = to_u64("batch", v); },
        [](const RunConfig& c) { return std::to_string(c.batch); });
    add("beta1", "first-moment decay",
        [](RunConfig& c, std::string_view v) { c.beta1 = to_real("beta1", v); },
        [](const RunConfig& c) { return real_text(c.beta1); });
    add("beta2", "second-moment decay",
        [](RunConfig& c, std::string_view v) { c.beta2 = to_real("beta2", v); },
        [](const RunConfig& c) { return real_text(c.beta2); });
    add("weight_decay", "decoupled weight decay",
        [](RunConfig& c, std::string_view v) { c.weight_decay = to_real("weight_decay", v); },
        [](const RunConfig& c) { return real_text(c.weight_decay); });
    // Seeds.
    add("seed", "master seed; stage seeds derive from it unless set",
        [](RunConfig& c, std::string_view v) { set_opt_u64(c.seed, "seed", v); },
        [](const RunConfig& c) { return opt_u64(c.seed); });
    add("data_seed", "dataset generation and split seed",
        [](RunConfig& c, std::string_view v) { set_opt_u64(c.data_seed, "data_seed", v); },
        [](const RunConfig& c) { return opt_u64(c.data_seed); });
    add("model_seed", "initialization and pretraining seed",
        [](RunConfig& c, std::string_view v) { set_opt_u64(c.model_seed, "model_seed", v); },
        [](const RunConfig& c) { return opt_u64(c.model_seed); });
    add("train_seed", "recovery and fine-tuning seed",
        [](RunConfig& c, std::string_view v) { set_opt_u64(c.train_seed, "train_seed", v); },
        [](const RunConfig& c) { return opt_u64(c.train_seed); });
    // Run.
    add("arm", "tuneclip, fastclip_zero_init, openclip_mbcl, osr_only or gcl_with_osr",
        [](RunConfig& c, std::string_view v) { c.arm = parse_arm(v); },
        [](const RunConfig& c) { return std::string(to_string(c.arm)); });
    add("output_dir", "directory for run artifacts",
        [](RunConfig& c, std::string_view v) {
          if (v.empty()) bad_value("output_dir", v);
          c.output_dir = std::filesystem::path(std::string(v));
        },
        [](const RunConfig& c) { return c.output_dir.string(); });
    add("oracle", "log exact estimator errors each epoch",
        [](RunConfig& c, std::string_view v) { c.oracle = to_bool("oracle", v); },
        [](const RunConfig& c) { return std::string(c.oracle ? "true" : "false"); });
    add("record_wall_time", "write measured wall time instead of 0",
        [](RunConfig& c, std::string_view v) { c.record_wall_time = to_bool("record_wall_time", v); },
        [](const RunConfig& c) { return std::string(c.record_wall_time ? "true" : "false"); });
    add("fn_top_k", "top-ranked negatives inspected for false negatives",
        [](RunConfig& c, std::string_view v) { c.fn_top_k = to_u64("fn_top_k", v); },
        [](const RunConfig& c) { return std::to_string(c.fn_top_k); });
    // Experiments.
    add("arms", "arms compared by exp-coldstart",
        [](RunConfig& c, std::string_view v) {
          std::vector<Arm> out;
          for (const auto& item : split_list(v)) out.push_back(parse_arm(item));
          c.arms = std::move(out);
        },
        [](const RunConfig& c) { return join(c.arms, [](Arm a) { return std::string(to_string(a)); }); });
    add("margins", "margins swept by exp-margin",
        [](RunConfig& c, std::string_view v) {
          std::vector<double> out;
          for (const auto& item : split_list(v)) out.push_back(to_real("margins", item));
          c.margins = std::move(out);
        },
        [](const RunConfig& c) { return join(c.margins, real_text); });
    add("osr_epochs_list", "recovery lengths compared by exp-osr-scaling",
        [](RunConfig& c, std::string_view v) {
          std::vector<std::size_t> out;
          for (const auto& item : split_list(v)) out.push_back(to_u64("osr_epochs_list", item));
          c.osr_epochs_list = std::move(out);
        },
        [](const RunConfig& c) {
          return join(c.osr_epochs_list, [](std::size_t e) { return std::to_string(e); });
        });
    add("osr_scaling_c", "exp-osr-scaling uses gamma = 1 - beta1 = min(1, c / sqrt(E))",
        [](RunConfig& c, std::string_view v) { c.osr_scaling_c = to_real("osr_scaling_c", v); },
        [](const RunConfig& c) { return real_text(c.osr_scaling_c); });
    add("seeds", "master seeds used by the experiment drivers",
        [](RunConfig& c, std::string_view v) {
          std::vector<std::uint64_t> out;
          for (const auto& item : split_list(v)) out.push_back(to_u64("seeds", item));
          c.seeds = std::move(out);
        },
        [](const RunConfig& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); });
    return t;
  }();
  return table;
}

const KeyHandler& find_handler(std::string_view key) {
  for (const KeyHandler& h : handlers()) {
    if (key == h.key.name) return h;
  }
  raise(ErrorKind::config, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const KeyHandler& h : handlers()) out.push_back(h.key);
    return out;
  }();
  return keys;
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  find_handler(key).set(cfg, trim(value));
}

std::string get_config_value(const RunConfig& cfg, std::string_view key) { return find_handler(key).get(cfg); }

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (!body.empty()) {
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        raise(ErrorKind::config, "config line " + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key = trim(std::string_view(body).substr(0, eq));
      const std::string value = trim(std::string_view(body).substr(eq + 1));
      try {
        set_config_value(base, key, value);
      } catch (const Error& e) {
        raise(ErrorKind::config, "config line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const KeyHandler& h : handlers()) {
    out += h.key.name;
    out += " = ";
    out += h.get(cfg);
    out += '\n';
  }
  return out;
}

std::uint32_t config_hash(const RunConfig& cfg) {
  std::string canon;
  auto put = [&](const char* key) {
    canon += key;
    canon += '=';
    canon += get_config_value(cfg, key);
    canon += '\n';
  };
  if (cfg.dataset_path) {
    put("dataset_path");
  } else {
    for (const char* key : {"n", "k_concepts", "noise_sigma"}) put(key);
  }
  for (const char* key : {"d_img", "d_txt", "test_fraction", "hidden", "embed", "tau"}) put(key);
  if (!cfg.data_seed && !cfg.seed) raise(ErrorKind::config, "no seed given: set seed or data_seed");
  canon += "data_seed=" + std::to_string(cfg.data_seed ? *cfg.data_seed : *cfg.seed) + '\n';
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(canon.data()), static_cast<uInt>(canon.size())));
}

}  // namespace tuneclip
