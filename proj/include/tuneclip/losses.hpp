// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "tuneclip/datagen.hpp"
#include "tuneclip/matrix.hpp"
#include "tuneclip/model.hpp"

namespace tuneclip {

enum class LossVariant { mbcl, gcl, hgcl };

const char* to_string(LossVariant v) noexcept;
LossVariant parse_loss_variant(std::string_view text);

/// Pairwise surrogate applied to the gap s_neg - s_pos.
struct SurrogateKind {
  enum class Tag { identity, squared_hinge, smoothed_squared_hinge };
  Tag tag = Tag::identity;
  double margin = 0.0;
  double sharpness = 0.0;  // smoothed variant only

  static SurrogateKind identity() { return {}; }
  static SurrogateKind squared_hinge(double margin) { return {Tag::squared_hinge, margin, 0.0}; }
  /// (softplus_k(gap + m))^2 with softplus_k(x) = log(1 + exp(k x)) / k.
  static SurrogateKind smoothed_squared_hinge(double margin, double sharpness) {
    return {Tag::smoothed_squared_hinge, margin, sharpness};
  }
};

struct SurrogateValue {
  double value;
  double derivative;
};

/// identity: (gap, 1). squared hinge: ([gap+m]_+^2, 2[gap+m]_+), with the
/// derivative taken as exactly 0 at and below the kink.
SurrogateValue surrogate(const SurrogateKind& kind, double gap);

struct LossConfig {
  LossVariant variant = LossVariant::hgcl;
  double tau = kDefaultTau;
  double epsilon = 1e-8;
  double margin = 0.1;            // hgcl only
  double margin_smoothing = 0.0;  // hgcl only; 0 keeps the exact squared hinge

  void validate() const;
  SurrogateKind surrogate() const;
};

enum class PhiScope { minibatch, full };

/// Per-anchor inner means. phi1 is image-anchored (row i), phi2 is
/// text-anchored (column i).
struct PhiValues {
  std::vector<double> phi1;
  std::vector<double> phi2;
  PhiScope scope = PhiScope::minibatch;
};

/// phi1[i] = (1/D) sum_{j != i} exp(l(s_ij - s_ii)/tau),
/// phi2[i] = (1/D) sum_{j != i} exp(l(s_ji - s_ii)/tau).
/// D is the block size: |B| for a mini-batch, n for the full dataset; the
/// diagonal is excluded from the sum but counted in D.
PhiValues phi_values(const Matrix& s, const LossConfig& cfg, PhiScope scope);

struct LossAndPartials {
  double loss;
  Matrix partials;  // dL/ds
};

/// Symmetric mini-batch InfoNCE, averaged over the batch.
LossAndPartials mbcl_loss(const Matrix& s, double tau);

/// dF/ds for F(s) = (tau/|B|) sum_i [ phi1_i(s)/(eps+u_x[i]) + phi2_i(s)/(eps+u_z[i]) ],
/// i.e. the similarity-space form of the moving-average gradient estimator.
/// Fed through backward() it yields the parameter-space estimator.
Matrix composed_partials(const Matrix& s, const LossConfig& cfg, std::span<const double> u_x,
                         std::span<const double> u_z);

/// (tau/D) sum_i [log(eps+phi1_i) + log(eps+phi2_i)] over the block.
double gcl_block_loss(const Matrix& s, const LossConfig& cfg);

/// Exact dataset-level objective: GCL / hinged GCL with divisor n, or the
/// full-batch MBCL for the mbcl variant.
double loss_scalar_full(const TwoTowerModel& model, const PairedDataset& data, const LossConfig& cfg);

}  // namespace tuneclip
