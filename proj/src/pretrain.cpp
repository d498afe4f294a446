// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>

#include "tuneclip/losses.hpp"
#include "tuneclip/model.hpp"
#include "tuneclip/optim.hpp"
#include "tuneclip/rng.hpp"

namespace tuneclip {

TwoTowerModel pretrain_toy(TwoTowerModel model, const PairedDataset& train, const PretrainConfig& cfg) {
  if (train.size() == 0) raise(ErrorKind::config, "pretraining needs a nonempty training set");
  if (cfg.batch < 1 || cfg.batch > train.size()) {
    raise(ErrorKind::config, "pretraining batch must lie in [1, n]");
  }
  if (cfg.epochs == 0) return model;

  ScheduleConfig schedule;
  schedule.lr_base = cfg.lr;
  schedule.lr_kind = LrSchedule::cosine;
  schedule.validate();

  MomentState ms = MomentState::zeros(model.omega.size(), cfg.beta1, cfg.beta2, 0.0);
  Rng rng(cfg.seed);
  const std::size_t per_epoch = (train.size() + cfg.batch - 1) / cfg.batch;
  const std::size_t total = per_epoch * cfg.epochs;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& indices : epoch_batches(train.size(), cfg.batch, rng)) {
      const Batch batch = make_batch(train, indices);
      const SimilarityBlock block = similarity_block(forward(model, batch.images, Tower::image),
                                                     forward(model, batch.texts, Tower::text));
      const LossAndPartials lp = mbcl_loss(block.s, model.dims.tau);
      if (!std::isfinite(lp.loss)) {
        raise(ErrorKind::training, "pretraining loss became non-finite at step " + std::to_string(step));
      }
      const GradientVector g = backward(model, batch.images, batch.texts, lp.partials);
      adamw_step(ms, g, model.omega, lr_at(step, total, schedule));
      ++step;
    }
  }
  return model;
}

}  // namespace tuneclip
