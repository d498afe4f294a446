// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "tuneclip/error.hpp"

namespace tuneclip {

namespace {

// Position of the true pair when anchor `a` ranks candidates by score.
template <typename Score>
std::size_t rank_of_true(std::size_t a, std::size_t n, Score score) {
  const double target = score(a);
  std::size_t ahead = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == a) continue;
    const double v = score(j);
    if (v > target || (v == target && j < a)) ++ahead;
  }
  return ahead;
}

struct Pool {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double stddev() const {
    if (count == 0) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, sum_sq / static_cast<double>(count) - m * m));
  }
};

}  // namespace

RecallPair recall_at_k(const Matrix& s, std::size_t k) {
  const std::size_t n = s.rows();
  if (n == 0 || s.cols() != n) raise(ErrorKind::config, "recall needs a nonempty square similarity block");
  if (k < 1 || k > n) {
    raise(ErrorKind::config, "recall k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }
  std::size_t hits_i2t = 0;
  std::size_t hits_t2i = 0;
  for (std::size_t a = 0; a < n; ++a) {
    if (rank_of_true(a, n, [&](std::size_t j) { return s(a, j); }) < k) ++hits_i2t;
    if (rank_of_true(a, n, [&](std::size_t j) { return s(j, a); }) < k) ++hits_t2i;
  }
  const double nn = static_cast<double>(n);
  return {static_cast<double>(hits_i2t) / nn, static_cast<double>(hits_t2i) / nn};
}

RecallPair eval_recall_at_k(const TwoTowerModel& model, const PairedDataset& test, std::size_t k) {
  if (test.size() == 0) raise(ErrorKind::config, "recall needs a nonempty test set");
  const SimilarityBlock block = similarity_block(forward(model, test.images, Tower::image),
                                                 forward(model, test.texts, Tower::text));
  return recall_at_k(block.s, k);
}

FnStats fn_similarity_stats(const Matrix& s, std::span<const std::uint32_t> concepts, std::size_t top_k) {
  const std::size_t n = s.rows();
  if (s.cols() != n || concepts.size() != n) raise(ErrorKind::shape, "similarity block and labels disagree");
  if (top_k < 1) raise(ErrorKind::config, "top_k must be >= 1");
  Pool fn, tp, tn;
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    tp.add(s(i, i));
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s(i, a) > s(i, b); });
    const std::size_t negatives = order.size();
    for (std::size_t r = 0; r < std::min(top_k, negatives); ++r) {
      if (concepts[order[r]] == concepts[i]) fn.add(s(i, order[r]));
    }
    // Ranks in [90%, 100%) of the negative list.
    const std::size_t decile_start = (9 * negatives + 9) / 10;
    for (std::size_t r = std::min(decile_start, negatives); r < negatives; ++r) {
      if (concepts[order[r]] != concepts[i]) tn.add(s(i, order[r]));
    }
  }
  FnStats out;
  out.fn_mean = fn.mean();
  out.fn_std = fn.stddev();
  out.tp_mean = tp.mean();
  out.tn_mean = tn.mean();
  out.fn_count = fn.count;
  out.tn_count = tn.count;
  out.no_false_negatives = fn.count == 0;
  return out;
}

FnStats fn_similarity_stats(const TwoTowerModel& model, const PairedDataset& data, std::size_t top_k) {
  const SimilarityBlock block = similarity_block(forward(model, data.images, Tower::image),
                                                 forward(model, data.texts, Tower::text));
  return fn_similarity_stats(block.s, data.concepts, top_k);
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> rows) {
  out << kMetricsHeader << '\n';
  for (const MetricsRecord& r : rows) {
    out << r.epoch;
    for (double x : {r.loss, r.r1_i2t, r.r1_t2i, r.u_err_x, r.u_err_z, r.m_err, r.fn_mean, r.fn_std, r.tp_mean,
                     r.tn_mean, r.wall_s}) {
      out << ',' << format_real(x);
    }
    out << '\n';
  }
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) raise(ErrorKind::parse, "metrics CSV header mismatch");
  std::vector<MetricsRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) raise(ErrorKind::parse, "metrics CSV line " + std::to_string(line_no) + " has " +
                                                        std::to_string(cells.size()) + " fields");
    MetricsRecord r;
    try {
      std::size_t used = 0;
      r.epoch = std::stoul(cells[0], &used);
      if (used != cells[0].size()) throw std::invalid_argument("epoch");
      double* fields[] = {&r.loss,    &r.r1_i2t, &r.r1_t2i,  &r.u_err_x, &r.u_err_z, &r.m_err,
                          &r.fn_mean, &r.fn_std, &r.tp_mean, &r.tn_mean, &r.wall_s};
      for (std::size_t c = 0; c < 11; ++c) {
        *fields[c] = std::stod(cells[c + 1], &used);
        if (used != cells[c + 1].size()) throw std::invalid_argument("real");
      }
    } catch (const std::exception&) {
      raise(ErrorKind::parse, "metrics CSV line " + std::to_string(line_no) + " has a malformed field");
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace tuneclip
