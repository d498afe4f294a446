// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tuneclip/datagen.hpp"
#include "tuneclip/matrix.hpp"
#include "tuneclip/model.hpp"

namespace tuneclip {

struct RecallPair {
  double i2t = 0.0;
  double t2i = 0.0;
  double mean() const noexcept { return 0.5 * (i2t + t2i); }
};

/// Recall@k from a square similarity block whose diagonal holds the true
/// pairs. Ties rank the lower index first.
RecallPair recall_at_k(const Matrix& s, std::size_t k);

RecallPair eval_recall_at_k(const TwoTowerModel& model, const PairedDataset& test, std::size_t k);

/// Similarity statistics of false negatives (same-concept texts among each
/// image anchor's top_k retrieved negatives), true positives (s_ii) and true
/// negatives (different-concept texts in the bottom decile of the ranking).
struct FnStats {
  double fn_mean = 0.0;
  double fn_std = 0.0;
  double tp_mean = 0.0;
  double tn_mean = 0.0;
  std::size_t fn_count = 0;
  std::size_t tn_count = 0;
  bool no_false_negatives = false;
};

FnStats fn_similarity_stats(const Matrix& s, std::span<const std::uint32_t> concepts, std::size_t top_k);
FnStats fn_similarity_stats(const TwoTowerModel& model, const PairedDataset& data, std::size_t top_k);

/// One row of the metrics CSV.
struct MetricsRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double r1_i2t = 0.0;
  double r1_t2i = 0.0;
  double u_err_x = 0.0;
  double u_err_z = 0.0;
  double m_err = 0.0;
  double fn_mean = 0.0;
  double fn_std = 0.0;
  double tp_mean = 0.0;
  double tn_mean = 0.0;
  double wall_s = 0.0;

  double r1_mean() const noexcept { return 0.5 * (r1_i2t + r1_t2i); }
};

inline constexpr const char* kMetricsHeader =
    "epoch,loss,r1_i2t,r1_t2i,u_err_x,u_err_z,m_err,fn_mean,fn_std,tp_mean,tn_mean,wall_s";

/// Seventeen significant digits, enough to round-trip every double.
std::string format_real(double x);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> rows);
std::vector<MetricsRecord> read_metrics_csv(std::istream& in);

}  // namespace tuneclip
