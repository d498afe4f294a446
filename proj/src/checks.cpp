// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tuneclip/datagen.hpp"
#include "tuneclip/model.hpp"
#include "tuneclip/optim.hpp"
#include "tuneclip/rng.hpp"

namespace tuneclip {

namespace {

double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

// Gaussian init plus random biases so every parameter block is exercised.
TwoTowerModel random_model(const ModelDims& dims, Rng& rng) {
  TwoTowerModel model = init_model(dims, rng.next_u64());
  UnpackedModel w = unflatten(dims, model.omega);
  for (TowerWeights* t : {&w.image, &w.text}) {
    for (double& b : t->b1) b = 0.1 * rng.gaussian();
    for (double& b : t->b2) b = 0.1 * rng.gaussian();
  }
  model.omega = flatten(w);
  return model;
}

Matrix similarities(const TwoTowerModel& model, const Batch& batch) {
  return similarity_block(forward(model, batch.images, Tower::image), forward(model, batch.texts, Tower::text)).s;
}

}  // namespace

GradCheckResult grad_check_suite(std::uint64_t seed, std::size_t cases, double step, double tolerance) {
  constexpr LossVariant kVariants[] = {LossVariant::mbcl, LossVariant::gcl, LossVariant::hgcl};
  constexpr std::size_t kBatches[] = {2, 4, 8};
  GradCheckResult out;
  out.tolerance = tolerance;
  const ModelDims dims;
  for (std::size_t c = 0; c < cases; ++c) {
    GradCheckCase gc;
    gc.variant = kVariants[c % 3];
    gc.batch = kBatches[(c / 3) % 3];
    gc.seed = splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * (c + 1)));
    Rng rng(gc.seed);

    DatasetSpec spec;
    spec.n = 16;
    spec.k_concepts = 4;
    spec.seed = rng.next_u64();
    const PairedDataset data = generate(spec);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    order.resize(gc.batch);
    const Batch batch = make_batch(data, order);
    TwoTowerModel model = random_model(dims, rng);

    LossConfig cfg;
    cfg.variant = gc.variant;
    GradientVector analytic;
    std::function<double(std::span<const double>)> objective;
    if (gc.variant == LossVariant::mbcl) {
      const LossAndPartials lp = mbcl_loss(similarities(model, batch), cfg.tau);
      analytic = backward(model, batch.images, batch.texts, lp.partials);
      objective = [&](std::span<const double> w) {
        const TwoTowerModel m{dims, std::vector<double>(w.begin(), w.end())};
        return mbcl_loss(similarities(m, batch), cfg.tau).loss;
      };
    } else {
      // Sample indices within the batch are 0..B-1 for the estimator.
      std::vector<std::size_t> slots(gc.batch);
      std::iota(slots.begin(), slots.end(), std::size_t{0});
      const Batch local{slots, batch.images, batch.texts};
      EstimatorState est = EstimatorState::zeros(gc.batch);
      update_u(est, local.indices, batch_phi(model, local, cfg), 1.0);
      analytic = sogclr_gradient(model, local, est, cfg);
      objective = [&](std::span<const double> w) {
        const TwoTowerModel m{dims, std::vector<double>(w.begin(), w.end())};
        return gcl_block_loss(similarities(m, batch), cfg);
      };
    }
    const GradientVector numeric = finite_diff_grad(objective, model.omega, step);
    gc.rel_error = relative_error(analytic, numeric);
    out.max_rel_error = std::max(out.max_rel_error, gc.rel_error);
    out.cases.push_back(gc);
  }
  out.passed = !out.cases.empty() && out.max_rel_error <= tolerance;
  return out;
}

OracleCheckResult oracle_check(std::uint64_t seed, std::size_t n, double tolerance) {
  OracleCheckResult out;
  out.n = n;
  out.tolerance = tolerance;
  Rng rng(seed);
  DatasetSpec spec;
  spec.n = static_cast<std::uint32_t>(n);
  spec.k_concepts = static_cast<std::uint32_t>(std::max<std::size_t>(1, n / 8));
  spec.seed = rng.next_u64();
  const PairedDataset data = generate(spec);
  const TwoTowerModel model = random_model(ModelDims{}, rng);
  const auto order = epoch_batches(n, n, rng).front();
  const Batch batch = make_batch(data, order);

  for (LossVariant variant : {LossVariant::gcl, LossVariant::hgcl}) {
    LossConfig cfg;
    cfg.variant = variant;
    EstimatorState est = EstimatorState::zeros(n);
    update_u(est, batch.indices, batch_phi(model, batch, cfg), 1.0);
    const GradientVector g = sogclr_gradient(model, batch, est, cfg);
    OracleReport report = exact_loss_and_grad(model, data, cfg);
    double max_abs = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) max_abs = std::max(max_abs, std::abs(g[k] - report.grad[k]));
    if (variant == LossVariant::gcl) {
      out.max_abs_gcl = max_abs;
      out.gcl = std::move(report);
    } else {
      out.max_abs_hgcl = max_abs;
      out.hgcl = std::move(report);
    }
  }
  out.passed = out.max_abs_gcl <= tolerance && out.max_abs_hgcl <= tolerance;
  return out;
}

}  // namespace tuneclip
