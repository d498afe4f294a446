// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tuneclip/losses.hpp"
#include "tuneclip/oracle.hpp"

namespace tuneclip {

struct GradCheckCase {
  LossVariant variant = LossVariant::gcl;
  std::size_t batch = 0;
  std::uint64_t seed = 0;
  double rel_error = 0.0;  // |analytic - fd|_2 / max(|analytic|_2, |fd|_2), 0 when both vanish
};

struct GradCheckResult {
  std::vector<GradCheckCase> cases;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// End-to-end gradients against central differences on random models and
/// batches. Case i uses variant {mbcl, gcl, hgcl}[i % 3] and batch size
/// {2, 4, 8}[(i / 3) % 3]. For gcl and hgcl the analytic side is the moving
/// average estimator right after a gamma = 1 update, which is the exact
/// gradient of the batch objective.
GradCheckResult grad_check_suite(std::uint64_t seed, std::size_t cases = 24, double step = 1e-5,
                                 double tolerance = 1e-6);

struct OracleCheckResult {
  std::size_t n = 0;
  double max_abs_gcl = 0.0;
  double max_abs_hgcl = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  OracleReport gcl;
  OracleReport hgcl;
};

/// Full-batch estimator (B = n, gamma = 1) against the exact dataset-level
/// gradient, for gcl and hgcl, on a freshly generated dataset of n pairs.
OracleCheckResult oracle_check(std::uint64_t seed, std::size_t n = 64, double tolerance = 1e-10);

}  // namespace tuneclip
