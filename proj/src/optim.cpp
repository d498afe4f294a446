// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "tuneclip/rng.hpp"

namespace tuneclip {

void ScheduleConfig::validate() const {
  if (!(lr_base > 0.0) || !std::isfinite(lr_base)) raise(ErrorKind::config, "lr must be > 0");
  if (!(gamma_floor > 0.0 && gamma_floor <= 1.0)) raise(ErrorKind::config, "gamma must lie in (0, 1]");
  if (!(gamma_start > 0.0 && gamma_start <= 1.0)) raise(ErrorKind::config, "gamma_start must lie in (0, 1]");
  if (gamma_decay_epochs < 1) raise(ErrorKind::config, "gamma_decay_epochs must be >= 1");
}

LrSchedule parse_lr_schedule(std::string_view text) {
  if (text == "constant") return LrSchedule::constant;
  if (text == "cosine") return LrSchedule::cosine;
  raise(ErrorKind::config, "unknown lr schedule '" + std::string(text) + "'");
}

GammaSchedule parse_gamma_schedule(std::string_view text) {
  if (text == "constant") return GammaSchedule::constant;
  if (text == "cosine") return GammaSchedule::cosine_until_epoch4_then_fixed;
  raise(ErrorKind::config, "unknown gamma schedule '" + std::string(text) + "'");
}

const char* to_string(LrSchedule kind) noexcept {
  return kind == LrSchedule::constant ? "constant" : "cosine";
}

const char* to_string(GammaSchedule kind) noexcept {
  return kind == GammaSchedule::constant ? "constant" : "cosine";
}

double gamma_at(std::size_t step_in_epoch, std::size_t epoch, std::size_t steps_per_epoch,
                const ScheduleConfig& cfg) {
  if (cfg.gamma_kind == GammaSchedule::constant || epoch >= cfg.gamma_decay_epochs) return cfg.gamma_floor;
  const double within = steps_per_epoch > 0
                            ? static_cast<double>(step_in_epoch) / static_cast<double>(steps_per_epoch)
                            : 0.0;
  const double progress = (static_cast<double>(epoch) + within) / static_cast<double>(cfg.gamma_decay_epochs);
  if (progress >= 1.0) return cfg.gamma_floor;
  const double mix = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return cfg.gamma_floor + (cfg.gamma_start - cfg.gamma_floor) * mix;
}

double lr_at(std::size_t step, std::size_t total_steps, const ScheduleConfig& cfg) {
  if (cfg.lr_kind == LrSchedule::constant || total_steps == 0) return cfg.lr_base;
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return cfg.lr_base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

EstimatorState EstimatorState::zeros(std::size_t n) {
  return EstimatorState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                        std::vector<std::uint64_t>(n, 0), 0, 0};
}

MomentState MomentState::zeros(std::size_t size, double beta1, double beta2, double weight_decay) {
  return MomentState{std::vector<double>(size, 0.0), std::vector<double>(size, 0.0), 0, beta1, beta2,
                     weight_decay};
}

void update_u(EstimatorState& est, std::span<const std::size_t> indices, const PhiValues& phi, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) raise(ErrorKind::state, "gamma must lie in (0, 1]");
  if (phi.phi1.size() != indices.size() || phi.phi2.size() != indices.size()) {
    raise(ErrorKind::state, "phi values do not match the batch size");
  }
  for (std::size_t i : indices) {
    if (i >= est.size()) {
      raise(ErrorKind::state, "sample index " + std::to_string(i) + " out of range for estimator of size " +
                                  std::to_string(est.size()));
    }
  }
  ++est.step;
  for (std::size_t slot = 0; slot < indices.size(); ++slot) {
    const std::size_t i = indices[slot];
    est.u_x[i] = (1.0 - gamma) * est.u_x[i] + gamma * phi.phi1[slot];
    est.u_z[i] = (1.0 - gamma) * est.u_z[i] + gamma * phi.phi2[slot];
    est.updated_at[i] = est.step;
  }
}

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    raise(ErrorKind::shape, std::string(what) + ": length " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

void momentum_step(MomentState& ms, std::span<const double> g) {
  require_same_length(ms.m.size(), g.size(), "momentum_step");
  for (std::size_t k = 0; k < g.size(); ++k) ms.m[k] += (1.0 - ms.beta1) * (g[k] - ms.m[k]);
  ++ms.t;
}

void accumulate_moments(MomentState& ms, std::span<const double> g) {
  require_same_length(ms.m.size(), g.size(), "accumulate_moments");
  require_same_length(ms.v.size(), g.size(), "accumulate_moments");
  for (std::size_t k = 0; k < g.size(); ++k) {
    ms.m[k] += (1.0 - ms.beta1) * (g[k] - ms.m[k]);
    ms.v[k] += (1.0 - ms.beta2) * (g[k] * g[k] - ms.v[k]);
  }
  ++ms.t;
}

void adamw_step(MomentState& ms, std::span<const double> g, std::span<double> omega, double lr) {
  if (!(lr > 0.0)) raise(ErrorKind::config, "learning rate must be > 0");
  require_same_length(omega.size(), g.size(), "adamw_step");
  accumulate_moments(ms, g);
  const double t = static_cast<double>(ms.t);
  const double c1 = 1.0 - std::pow(ms.beta1, t);
  const double c2 = 1.0 - std::pow(ms.beta2, t);
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const double m_hat = ms.m[k] / c1;
    const double v_hat = ms.v[k] / c2;
    const double next = omega[k] - lr * (m_hat / (std::sqrt(v_hat) + kAdamDelta) + ms.weight_decay * omega[k]);
    if (!std::isfinite(next)) {
      raise(ErrorKind::numeric, "non-finite parameter update at coordinate " + std::to_string(k));
    }
    omega[k] = next;
  }
}

Batch make_batch(const PairedDataset& data, std::span<const std::size_t> indices) {
  return Batch{std::vector<std::size_t>(indices.begin(), indices.end()), data.images.gather_rows(indices),
               data.texts.gather_rows(indices)};
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, Rng& rng) {
  if (batch < 1) raise(ErrorKind::config, "batch size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t stop = std::min(n, start + batch);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return out;
}

PhiValues batch_phi(const TwoTowerModel& model, const Batch& batch, const LossConfig& cfg) {
  const SimilarityBlock block = similarity_block(forward(model, batch.images, Tower::image),
                                                 forward(model, batch.texts, Tower::text));
  return phi_values(block.s, cfg, PhiScope::minibatch);
}

GradientVector sogclr_gradient(const TwoTowerModel& model, const Batch& batch, const EstimatorState& est,
                               const LossConfig& cfg) {
  const std::size_t b = batch.indices.size();
  std::vector<double> u_x(b), u_z(b);
  for (std::size_t slot = 0; slot < b; ++slot) {
    const std::size_t i = batch.indices[slot];
    if (i >= est.size()) raise(ErrorKind::state, "sample index " + std::to_string(i) + " out of range");
    if (est.updated_at[i] != est.step || est.step == 0) {
      raise(ErrorKind::state, "estimator entry " + std::to_string(i) +
                                  " is stale: update_u must run on this batch before the gradient");
    }
    u_x[slot] = est.u_x[i];
    u_z[slot] = est.u_z[i];
  }
  const SimilarityBlock block = similarity_block(forward(model, batch.images, Tower::image),
                                                 forward(model, batch.texts, Tower::text));
  const Matrix partials = composed_partials(block.s, cfg, u_x, u_z);
  return backward(model, batch.images, batch.texts, partials);
}

}  // namespace tuneclip
