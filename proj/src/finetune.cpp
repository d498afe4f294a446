// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <string>

#include "tuneclip/optim.hpp"
#include "tuneclip/oracle.hpp"
#include "tuneclip/rng.hpp"

namespace tuneclip {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t steps_per_epoch(std::size_t n, std::size_t batch) { return (n + batch - 1) / batch; }

bool all_finite(std::span<const double> values) {
  for (double x : values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

[[noreturn]] void diverged(std::size_t step, const std::string& what, const TwoTowerModel& model,
                           const GradientVector& grad, const MomentState& ms, const EstimatorState* est) {
  auto snap = std::make_shared<TrainingSnapshot>();
  snap->omega = model.omega;
  snap->gradient = grad;
  snap->moments = ms;
  if (est != nullptr) snap->estimator = *est;
  throw TrainingError(step, "training error: " + what + " at step " + std::to_string(step), std::move(snap));
}

// (tau/|B|) sum_i [log(eps + phi1_i) + log(eps + phi2_i)] from precomputed phi.
double block_objective(const PhiValues& phi, const LossConfig& cfg) {
  double acc = 0.0;
  for (std::size_t i = 0; i < phi.phi1.size(); ++i) {
    acc += std::log(cfg.epsilon + phi.phi1[i]) + std::log(cfg.epsilon + phi.phi2[i]);
  }
  return phi.phi1.empty() ? 0.0 : cfg.tau / static_cast<double>(phi.phi1.size()) * acc;
}

void check_finetune_config(const FinetuneConfig& cfg) {
  cfg.loss.validate();
  cfg.schedule.validate();
  if (cfg.batch < 1) raise(ErrorKind::config, "batch size must be >= 1");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    raise(ErrorKind::config, "Adam betas must lie in [0, 1)");
  }
  if (!(cfg.weight_decay >= 0.0)) raise(ErrorKind::config, "weight decay must be >= 0");
}

}  // namespace

OsrResult osr_run(const TwoTowerModel& omega0, const PairedDataset& data, const OsrConfig& cfg,
                  const OsrObserver& observer) {
  cfg.loss.validate();
  cfg.schedule.validate();
  if (cfg.loss.variant == LossVariant::mbcl) raise(ErrorKind::config, "statistics recovery needs gcl or hgcl");
  if (cfg.batch < 1) raise(ErrorKind::config, "batch size must be >= 1");

  const std::size_t n = data.size();
  OsrResult out{MomentState::zeros(omega0.omega.size(), cfg.beta1, cfg.beta2), EstimatorState::zeros(n)};
  Rng rng(cfg.seed);
  const std::size_t per_epoch = steps_per_epoch(n, cfg.batch);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = epoch_batches(n, cfg.batch, rng);
    for (std::size_t s = 0; s < batches.size(); ++s, ++step) {
      const Batch batch = make_batch(data, batches[s]);
      const PhiValues phi = batch_phi(omega0, batch, cfg.loss);
      const double gamma = gamma_at(s, out.estimator.schedule_epoch, per_epoch, cfg.schedule);
      update_u(out.estimator, batch.indices, phi, gamma);
      const GradientVector g = sogclr_gradient(omega0, batch, out.estimator, cfg.loss);
      if (!all_finite(g)) diverged(step, "non-finite gradient", omega0, g, out.moments, &out.estimator);
      accumulate_moments(out.moments, g);
    }
    ++out.estimator.schedule_epoch;
    if (observer) observer(epoch + 1, out.moments, out.estimator);
  }
  return out;
}

FinetuneResult finetune_run(const TwoTowerModel& omega0, const PairedDataset& data,
                            const std::optional<OsrResult>& init, const FinetuneConfig& cfg,
                            const EpochObserver& observer) {
  check_finetune_config(cfg);
  if (cfg.loss.variant == LossVariant::mbcl) {
    raise(ErrorKind::config, "finetune_run optimizes gcl or hgcl; use mbcl_finetune_run for mbcl");
  }
  const std::size_t n = data.size();
  const std::size_t p = omega0.omega.size();

  FinetuneResult out{omega0, EstimatorState::zeros(n), MomentState::zeros(p), {}};
  if (init) {
    if (init->estimator.size() != n) {
      raise(ErrorKind::state, "recovered estimator has " + std::to_string(init->estimator.size()) +
                                  " entries, dataset has " + std::to_string(n));
    }
    if (init->moments.m.size() != p || init->moments.v.size() != p) {
      raise(ErrorKind::state, "recovered moments do not match the parameter count " + std::to_string(p));
    }
    out.estimator = init->estimator;
    out.moments = init->moments;
  }
  out.moments.beta1 = cfg.beta1;
  out.moments.beta2 = cfg.beta2;
  out.moments.weight_decay = cfg.weight_decay;
  EstimatorState& est = *out.estimator;

  Rng rng(cfg.seed);
  const std::size_t per_epoch = steps_per_epoch(n, cfg.batch);
  const std::size_t total = per_epoch * cfg.epochs;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    const auto batches = epoch_batches(n, cfg.batch, rng);
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < batches.size(); ++s, ++step) {
      const Batch batch = make_batch(data, batches[s]);
      const PhiValues phi = batch_phi(out.model, batch, cfg.loss);
      const double gamma = gamma_at(s, est.schedule_epoch, per_epoch, cfg.schedule);
      update_u(est, batch.indices, phi, gamma);
      const double loss = block_objective(phi, cfg.loss);
      const GradientVector g = sogclr_gradient(out.model, batch, est, cfg.loss);
      if (!std::isfinite(loss) || !all_finite(g)) {
        diverged(step, "non-finite loss or gradient", out.model, g, out.moments, &est);
      }
      try {
        adamw_step(out.moments, g, out.model.omega, lr_at(step, total, cfg.schedule));
      } catch (const Error& e) {
        diverged(step, e.what(), out.model, g, out.moments, &est);
      }
      loss_sum += loss;
    }
    ++est.schedule_epoch;
    const EpochLog log{epoch + 1, loss_sum / static_cast<double>(batches.size()), seconds_since(start)};
    out.logs.push_back(log);
    if (observer) observer(log, out);
  }
  return out;
}

FinetuneResult mbcl_finetune_run(const TwoTowerModel& omega0, const PairedDataset& data,
                                 const FinetuneConfig& cfg, const EpochObserver& observer) {
  check_finetune_config(cfg);
  const std::size_t n = data.size();
  FinetuneResult out{omega0, std::nullopt,
                     MomentState::zeros(omega0.omega.size(), cfg.beta1, cfg.beta2, cfg.weight_decay), {}};
  Rng rng(cfg.seed);
  const std::size_t per_epoch = steps_per_epoch(n, cfg.batch);
  const std::size_t total = per_epoch * cfg.epochs;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    const auto batches = epoch_batches(n, cfg.batch, rng);
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < batches.size(); ++s, ++step) {
      const Batch batch = make_batch(data, batches[s]);
      const SimilarityBlock block = similarity_block(forward(out.model, batch.images, Tower::image),
                                                     forward(out.model, batch.texts, Tower::text));
      const LossAndPartials lp = mbcl_loss(block.s, cfg.loss.tau);
      const GradientVector g = backward(out.model, batch.images, batch.texts, lp.partials);
      if (!std::isfinite(lp.loss) || !all_finite(g)) {
        diverged(step, "non-finite loss or gradient", out.model, g, out.moments, nullptr);
      }
      try {
        adamw_step(out.moments, g, out.model.omega, lr_at(step, total, cfg.schedule));
      } catch (const Error& e) {
        diverged(step, e.what(), out.model, g, out.moments, nullptr);
      }
      loss_sum += lp.loss;
    }
    const EpochLog log{epoch + 1, loss_sum / static_cast<double>(batches.size()), seconds_since(start)};
    out.logs.push_back(log);
    if (observer) observer(log, out);
  }
  return out;
}

TheoremQuantities theorem_quantities(const TwoTowerModel& omega0, const PairedDataset& data,
                                     const LossConfig& cfg, const EstimatorState& est, const MomentState& ms,
                                     std::optional<double> best_seen_loss) {
  const OracleReport report = exact_loss_and_grad(omega0, data, cfg);
  TheoremQuantities q = estimation_errors(est, ms, report, data.size());
  if (best_seen_loss) q.delta0 = std::max(0.0, report.loss - *best_seen_loss);
  return q;
}

}  // namespace tuneclip
