// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force ground truth for small datasets. Nothing here calls into the
// loss kernels: inner means, surrogate and similarity-space gradient are
// re-derived with plain double loops so the two paths can check each other.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tuneclip/datagen.hpp"
#include "tuneclip/losses.hpp"
#include "tuneclip/model.hpp"
#include "tuneclip/optim.hpp"

namespace tuneclip {

inline constexpr std::size_t kOracleCap = 8192;

struct OracleReport {
  std::vector<double> phi1_full;
  std::vector<double> phi2_full;
  double loss = 0.0;
  GradientVector grad;
  double wall_time = 0.0;
};

/// Full-dataset inner means (divisor n, diagonal excluded).
std::pair<std::vector<double>, std::vector<double>> phi_full(const TwoTowerModel& model, const PairedDataset& data,
                                                             const LossConfig& cfg, std::size_t cap = kOracleCap);

/// Exact GCL / hinged GCL value and gradient over the whole dataset.
OracleReport exact_loss_and_grad(const TwoTowerModel& model, const PairedDataset& data, const LossConfig& cfg,
                                 std::size_t cap = kOracleCap);

/// U_x, U_z and M of the recovered statistics against exact values.
TheoremQuantities estimation_errors(const EstimatorState& est, const MomentState& ms, const OracleReport& oracle,
                                    std::size_t n);

std::string to_json(const OracleReport& report);

}  // namespace tuneclip
