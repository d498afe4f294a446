// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tuneclip/datagen.hpp"
#include "tuneclip/losses.hpp"
#include "tuneclip/model.hpp"
#include "tuneclip/optim.hpp"

namespace tuneclip {

enum class Arm { tuneclip, fastclip_zero_init, openclip_mbcl, osr_only, gcl_with_osr };

const char* to_string(Arm arm) noexcept;
Arm parse_arm(std::string_view text);

/// Loss variant the arm optimizes (or recovers statistics for).
LossVariant arm_loss(Arm arm, LossVariant configured);
bool arm_runs_osr(Arm arm) noexcept;
bool arm_runs_finetune(Arm arm) noexcept;

struct RunConfig {
  DatasetSpec dataset;  // dataset.seed is ignored; data_seed drives generation
  std::optional<std::filesystem::path> dataset_path;
  double test_fraction = 0.25;

  ModelDims model;
  PretrainConfig pretrain;  // pretrain.seed is ignored; derived from model_seed
  std::optional<std::filesystem::path> init_checkpoint;
  bool force = false;  // load checkpoints whose config hash differs

  LossConfig loss;
  ScheduleConfig schedule;
  std::size_t osr_epochs = 5;
  std::size_t finetune_epochs = 5;
  std::size_t batch = 256;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double weight_decay = 0.02;

  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> data_seed;
  std::optional<std::uint64_t> model_seed;
  std::optional<std::uint64_t> train_seed;

  Arm arm = Arm::tuneclip;
  std::filesystem::path output_dir = "out";
  bool oracle = true;
  bool record_wall_time = false;
  std::size_t fn_top_k = 5;

  // Experiment drivers.
  std::vector<Arm> arms{Arm::fastclip_zero_init, Arm::openclip_mbcl, Arm::tuneclip};
  std::vector<double> margins{0.01, 0.05, 0.10, 0.20, 0.40};
  std::vector<std::size_t> osr_epochs_list{1, 2, 4, 8, 16};
  double osr_scaling_c = 0.5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void validate() const;
};

/// Effective seeds. Unset per-stage seeds derive from `seed` by fixed offsets;
/// a config error is raised when neither is available.
struct SeedPlan {
  std::uint64_t data = 0;      // dataset generation
  std::uint64_t split = 0;     // train/test partition
  std::uint64_t model = 0;     // initial weights
  std::uint64_t pretrain = 0;  // pretraining batch order
  std::uint64_t train = 0;     // fine-tuning batch order
  std::uint64_t osr = 0;       // recovery batch order
};

SeedPlan seed_plan(const RunConfig& cfg);

/// Copy of `cfg` with the master seed replaced and per-stage seeds cleared.
RunConfig with_seed(const RunConfig& cfg, std::uint64_t seed);

struct ConfigKey {
  const char* name;
  const char* help;
};

/// Every key accepted by the config file format and set_config_value().
const std::vector<ConfigKey>& config_keys();

/// Assigns one key. Unknown keys and malformed values raise config errors.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Current value of one key as it would be written in a config file;
/// empty for an unset optional.
std::string get_config_value(const RunConfig& cfg, std::string_view key);

/// Parses `key = value` lines on top of `base`. `#` starts a comment; blank
/// lines are ignored. Errors carry the line number.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// All keys in table order, formatted as a config file.
std::string format_config(const RunConfig& cfg);

/// CRC-32 of the settings that fix the data and the parameter layout
/// (dataset spec or path, split, data seed, model dimensions, tau).
std::uint32_t config_hash(const RunConfig& cfg);

}  // namespace tuneclip
