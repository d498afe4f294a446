// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tuneclip/datagen.hpp"
#include "tuneclip/error.hpp"
#include "tuneclip/losses.hpp"
#include "tuneclip/model.hpp"
#include "tuneclip/rng.hpp"

namespace tuneclip {

// ---------------------------------------------------------------------------
// Schedules

enum class LrSchedule { constant, cosine };
enum class GammaSchedule { constant, cosine_until_epoch4_then_fixed };

struct ScheduleConfig {
  double lr_base = 1e-5;
  LrSchedule lr_kind = LrSchedule::cosine;
  GammaSchedule gamma_kind = GammaSchedule::cosine_until_epoch4_then_fixed;
  double gamma_floor = 0.9;
  double gamma_start = 1.0;
  std::size_t gamma_decay_epochs = 4;

  void validate() const;
};

LrSchedule parse_lr_schedule(std::string_view text);
GammaSchedule parse_gamma_schedule(std::string_view text);
const char* to_string(LrSchedule kind) noexcept;
const char* to_string(GammaSchedule kind) noexcept;

/// Constant kind: gamma_floor. Scheduled kind: half-cosine from gamma_start
/// at the first step of epoch 0 down to gamma_floor at the start of epoch
/// gamma_decay_epochs, interpolated per step; gamma_floor afterwards.
double gamma_at(std::size_t step_in_epoch, std::size_t epoch, std::size_t steps_per_epoch,
                const ScheduleConfig& cfg);

/// lr_base, or lr_base * (1 + cos(pi * step / total_steps)) / 2.
double lr_at(std::size_t step, std::size_t total_steps, const ScheduleConfig& cfg);

// ---------------------------------------------------------------------------
// State

/// Per-sample moving averages of the inner means.
struct EstimatorState {
  std::vector<double> u_x;
  std::vector<double> u_z;
  std::vector<std::uint64_t> updated_at;  // step tag of each sample's last update, 0 = never
  std::uint64_t step = 0;                 // tag of the latest update_u call
  std::size_t schedule_epoch = 0;         // gamma-schedule position, in completed epochs

  static EstimatorState zeros(std::size_t n);
  std::size_t size() const noexcept { return u_x.size(); }
  bool operator==(const EstimatorState&) const = default;
};

struct MomentState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double weight_decay = 0.02;

  static MomentState zeros(std::size_t size, double beta1 = 0.9, double beta2 = 0.98,
                           double weight_decay = 0.02);
  bool operator==(const MomentState&) const = default;
};

/// u[i] <- (1 - gamma) u[i] + gamma phi[slot] for each batch member; tags the
/// updated entries with a fresh step.
void update_u(EstimatorState& est, std::span<const std::size_t> indices, const PhiValues& phi, double gamma);

/// m <- beta1 m + (1 - beta1) g, evaluated as m + (1 - beta1)(g - m); t += 1.
void momentum_step(MomentState& ms, std::span<const double> g);

/// First and second moments; t += 1.
void accumulate_moments(MomentState& ms, std::span<const double> g);

inline constexpr double kAdamDelta = 1e-8;

/// Bias-corrected Adam with decoupled weight decay:
/// w <- w - lr (m_hat / (sqrt(v_hat) + delta) + wd w).
void adamw_step(MomentState& ms, std::span<const double> g, std::span<double> omega, double lr);

// ---------------------------------------------------------------------------
// Gradient estimator

struct Batch {
  std::vector<std::size_t> indices;
  Matrix images;
  Matrix texts;
};

Batch make_batch(const PairedDataset& data, std::span<const std::size_t> indices);

/// One epoch's batches: a random permutation cut into chunks of `batch`;
/// the last chunk keeps the remainder.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, Rng& rng);

/// Mini-batch inner means at the current parameters.
PhiValues batch_phi(const TwoTowerModel& model, const Batch& batch, const LossConfig& cfg);

/// G(w, B) = (tau/|B|) sum_i [ grad phi1_i / (eps + u_x[i]) + grad phi2_i / (eps + u_z[i]) ].
/// Every batch member must carry the estimator's latest step tag, i.e.
/// update_u for this batch has already run.
GradientVector sogclr_gradient(const TwoTowerModel& model, const Batch& batch, const EstimatorState& est,
                               const LossConfig& cfg);

// ---------------------------------------------------------------------------
// Training loops

struct TrainingSnapshot {
  std::vector<double> omega;
  std::vector<double> gradient;
  MomentState moments;
  std::optional<EstimatorState> estimator;
};

/// Divergence inside a training loop. Carries the state at the failing step.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t step, const std::string& message, std::shared_ptr<const TrainingSnapshot> snapshot)
      : Error(ErrorKind::training, message), step_(step), snapshot_(std::move(snapshot)) {}
  std::size_t step() const noexcept { return step_; }
  const TrainingSnapshot* snapshot() const noexcept { return snapshot_.get(); }

 private:
  std::size_t step_;
  std::shared_ptr<const TrainingSnapshot> snapshot_;
};

struct OsrConfig {
  std::size_t epochs = 5;
  std::size_t batch = 256;
  double beta1 = 0.9;
  double beta2 = 0.98;
  ScheduleConfig schedule;  // gamma part only
  LossConfig loss;
  std::uint64_t seed = 0;
};

struct OsrResult {
  MomentState moments;
  EstimatorState estimator;
};

using OsrObserver = std::function<void(std::size_t epoch, const MomentState&, const EstimatorState&)>;

/// Runs the estimator and moment updates for epochs * ceil(n/B) steps with
/// the parameters frozen at omega0, starting from all-zero statistics.
OsrResult osr_run(const TwoTowerModel& omega0, const PairedDataset& data, const OsrConfig& cfg,
                  const OsrObserver& observer = {});

struct FinetuneConfig {
  LossConfig loss;
  ScheduleConfig schedule;
  std::size_t epochs = 5;
  std::size_t batch = 256;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double weight_decay = 0.02;
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean mini-batch objective over the epoch
  double wall_s = 0.0;
};

struct FinetuneResult {
  TwoTowerModel model;
  std::optional<EstimatorState> estimator;  // absent for the mbcl loop
  MomentState moments;
  std::vector<EpochLog> logs;
};

/// Called after each epoch with the run's state so far.
using EpochObserver = std::function<void(const EpochLog&, const FinetuneResult&)>;

/// Moving-average fine-tuning loop: per step, sample a batch, compute the
/// batch inner means, update u, form the estimator gradient, apply AdamW.
/// `init` empty means zero-initialized statistics; otherwise the recovered
/// statistics seed m, v, u, the moment step counter and the gamma schedule.
FinetuneResult finetune_run(const TwoTowerModel& omega0, const PairedDataset& data,
                            const std::optional<OsrResult>& init, const FinetuneConfig& cfg,
                            const EpochObserver& observer = {});

/// Plain AdamW on the mini-batch contrastive loss from zero statistics.
FinetuneResult mbcl_finetune_run(const TwoTowerModel& omega0, const PairedDataset& data,
                                 const FinetuneConfig& cfg, const EpochObserver& observer = {});

// ---------------------------------------------------------------------------
// Estimation errors against exact values at a fixed point

struct TheoremQuantities {
  double delta0 = 0.0;  // L(w0) - best seen L
  double m_err = 0.0;   // |m - grad L(w0)|^2
  double u_err_x = 0.0; // (1/2n) |u_x - phi1(w0, D)|^2
  double u_err_z = 0.0; // (1/2n) |u_z - phi2(w0, D)|^2
};

TheoremQuantities theorem_quantities(const TwoTowerModel& omega0, const PairedDataset& data,
                                     const LossConfig& cfg, const EstimatorState& est, const MomentState& ms,
                                     std::optional<double> best_seen_loss = std::nullopt);

}  // namespace tuneclip
