// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/oracle.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "json.hpp"
#include "tuneclip/error.hpp"

namespace tuneclip {

namespace {

struct Embeddings {
  Matrix f;
  Matrix g;
};

void check_cap(std::size_t n, std::size_t cap) {
  if (n > cap) {
    raise(ErrorKind::refused, "oracle refuses n=" + std::to_string(n) + " above cap " + std::to_string(cap));
  }
}

Embeddings embed_all(const TwoTowerModel& model, const PairedDataset& data) {
  return {forward(model, data.images, Tower::image).vectors, forward(model, data.texts, Tower::text).vectors};
}

double sim(const Embeddings& e, std::size_t i, std::size_t j) {
  double acc = 0.0;
  for (std::size_t k = 0; k < e.f.cols(); ++k) acc += e.f(i, k) * e.g(j, k);
  return acc;
}

// Pairwise loss on a gap and its derivative, written out independently.
double pair_loss(const LossConfig& cfg, double gap) {
  if (cfg.variant != LossVariant::hgcl) return gap;
  if (cfg.margin_smoothing > 0.0) {
    const double k = cfg.margin_smoothing;
    const double sp = std::log1p(std::exp(k * (gap + cfg.margin))) / k;
    return sp * sp;
  }
  const double h = std::max(gap + cfg.margin, 0.0);
  return h * h;
}

double pair_loss_slope(const LossConfig& cfg, double gap) {
  if (cfg.variant != LossVariant::hgcl) return 1.0;
  if (cfg.margin_smoothing > 0.0) {
    const double k = cfg.margin_smoothing;
    const double z = k * (gap + cfg.margin);
    const double sp = std::log1p(std::exp(z)) / k;
    return 2.0 * sp / (1.0 + std::exp(-z));
  }
  return gap + cfg.margin > 0.0 ? 2.0 * (gap + cfg.margin) : 0.0;
}

double checked_exp(double arg) {
  if (arg > 700.0) raise(ErrorKind::numeric, "oracle exponent overflow");
  return std::exp(arg);
}

std::pair<std::vector<double>, std::vector<double>> phi_from(const Embeddings& e, const LossConfig& cfg) {
  const std::size_t n = e.f.rows();
  std::vector<double> phi1(n), phi2(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = sim(e, i, i);
    double row = 0.0;
    double col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      row += checked_exp(pair_loss(cfg, sim(e, i, j) - pos) / cfg.tau);
      col += checked_exp(pair_loss(cfg, sim(e, j, i) - pos) / cfg.tau);
    }
    phi1[i] = row / static_cast<double>(n);
    phi2[i] = col / static_cast<double>(n);
  }
  return {phi1, phi2};
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> phi_full(const TwoTowerModel& model, const PairedDataset& data,
                                                             const LossConfig& cfg, std::size_t cap) {
  check_cap(data.size(), cap);
  cfg.validate();
  return phi_from(embed_all(model, data), cfg);
}

OracleReport exact_loss_and_grad(const TwoTowerModel& model, const PairedDataset& data, const LossConfig& cfg,
                                 std::size_t cap) {
  const auto start = std::chrono::steady_clock::now();
  check_cap(data.size(), cap);
  cfg.validate();
  if (cfg.variant == LossVariant::mbcl) raise(ErrorKind::config, "oracle covers gcl and hgcl only");

  const std::size_t n = data.size();
  const Embeddings e = embed_all(model, data);
  OracleReport report;
  std::tie(report.phi1_full, report.phi2_full) = phi_from(e, cfg);

  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    report.loss += std::log(cfg.epsilon + report.phi1_full[i]) + std::log(cfg.epsilon + report.phi2_full[i]);
  }
  report.loss *= cfg.tau / nn;

  // dL/ds, anchor by anchor. Image anchor i touches row i and s_ii; text
  // anchor i touches column i and s_ii.
  Matrix upstream(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = sim(e, i, i);
    const double wx = (cfg.tau / nn) / (cfg.epsilon + report.phi1_full[i]) / nn;
    const double wz = (cfg.tau / nn) / (cfg.epsilon + report.phi2_full[i]) / nn;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double gx = sim(e, i, j) - pos;
      const double dx = wx * checked_exp(pair_loss(cfg, gx) / cfg.tau) * pair_loss_slope(cfg, gx) / cfg.tau;
      upstream(i, j) += dx;
      upstream(i, i) -= dx;
      const double gz = sim(e, j, i) - pos;
      const double dz = wz * checked_exp(pair_loss(cfg, gz) / cfg.tau) * pair_loss_slope(cfg, gz) / cfg.tau;
      upstream(j, i) += dz;
      upstream(i, i) -= dz;
    }
  }
  report.grad = backward(model, data.images, data.texts, upstream);
  for (double x : report.grad) {
    if (!std::isfinite(x)) raise(ErrorKind::numeric, "oracle gradient is not finite");
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

TheoremQuantities estimation_errors(const EstimatorState& est, const MomentState& ms, const OracleReport& oracle,
                                    std::size_t n) {
  if (est.u_x.size() != n || est.u_z.size() != n || oracle.phi1_full.size() != n || oracle.phi2_full.size() != n) {
    raise(ErrorKind::shape, "estimator and oracle lengths must equal n=" + std::to_string(n));
  }
  if (ms.m.size() != oracle.grad.size()) raise(ErrorKind::shape, "moment and gradient lengths differ");
  TheoremQuantities q;
  for (std::size_t i = 0; i < n; ++i) {
    const double ex = est.u_x[i] - oracle.phi1_full[i];
    const double ez = est.u_z[i] - oracle.phi2_full[i];
    q.u_err_x += ex * ex;
    q.u_err_z += ez * ez;
  }
  q.u_err_x /= 2.0 * static_cast<double>(n);
  q.u_err_z /= 2.0 * static_cast<double>(n);
  for (std::size_t k = 0; k < ms.m.size(); ++k) {
    const double d = ms.m[k] - oracle.grad[k];
    q.m_err += d * d;
  }
  return q;
}

std::string to_json(const OracleReport& report) {
  nlohmann::json j;
  j["phi1_full"] = report.phi1_full;
  j["phi2_full"] = report.phi2_full;
  j["loss"] = report.loss;
  j["grad"] = report.grad;
  j["wall_time"] = report.wall_time;
  return j.dump();
}

}  // namespace tuneclip
