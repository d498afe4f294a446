// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

// Versioned binary snapshot of a run: weights, recovered or trained
// optimizer statistics, and the identity of the configuration that made them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tuneclip/config.hpp"
#include "tuneclip/model.hpp"
#include "tuneclip/optim.hpp"

namespace tuneclip {

inline constexpr std::uint16_t kCheckpointVersion = 1;

enum class CheckpointStage : std::uint8_t { pretrained = 0, recovered = 1, finetuned = 2, failed = 3 };

const char* to_string(CheckpointStage stage) noexcept;

struct Checkpoint {
  std::uint16_t version = kCheckpointVersion;
  CheckpointStage stage = CheckpointStage::pretrained;
  std::uint32_t config_hash = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t model_seed = 0;
  std::uint64_t train_seed = 0;
  ModelDims dims;
  std::vector<double> omega;
  MomentState moments;        // m and v empty when no optimizer ran
  EstimatorState estimator;   // empty when the run kept no moving averages

  TwoTowerModel model() const { return {dims, omega}; }
  bool operator==(const Checkpoint&) const = default;
};

/// Byte layout, little-endian:
///   "FCCK" u16 version u8 stage u32 config_hash u64 data_seed u64 model_seed
///   u64 train_seed u32 d_img u32 d_txt u32 hidden u32 embed f64 tau
///   u64 p f64[p] omega
///   u64 q f64[q] m f64[q] v u64 t f64 beta1 f64 beta2 f64 weight_decay
///   u64 n f64[n] u_x f64[n] u_z u64[n] updated_at u64 step u64 schedule_epoch
///   u32 crc32 of everything before it
std::vector<char> encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(std::span<const char> bytes);

struct CheckpointExpectations {
  std::optional<std::uint32_t> config_hash;  // mismatch refuses unless force
  std::optional<std::size_t> n;              // estimator length, when it has one
  std::optional<ModelDims> dims;
  bool force = false;
};

/// Refusals: checksum, version, config hash (unless force), shape.
void check_checkpoint(const Checkpoint& c, const CheckpointExpectations& expect);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path, const CheckpointExpectations& expect = {});

}  // namespace tuneclip
