// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tuneclip/error.hpp"

namespace tuneclip {

namespace {

constexpr double kMaxExpArgument = 700.0;

void require_square(const Matrix& s) {
  if (s.rows() != s.cols()) {
    raise(ErrorKind::shape, "similarity block must be square, got " + std::to_string(s.rows()) + "x" +
                                std::to_string(s.cols()));
  }
}

// exp(l(gap)/tau) and its derivative w.r.t. gap.
struct ExpTerm {
  double value;
  double slope;
};

ExpTerm exp_term(const SurrogateKind& kind, double gap, double tau, std::size_t i, std::size_t j) {
  const SurrogateValue l = surrogate(kind, gap);
  const double arg = l.value / tau;
  if (arg > kMaxExpArgument) {
    raise(ErrorKind::numeric, "exponent " + std::to_string(arg) + " overflows at pair (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ")");
  }
  const double e = std::exp(arg);
  return {e, e * l.derivative / tau};
}

}  // namespace

const char* to_string(LossVariant v) noexcept {
  switch (v) {
    case LossVariant::mbcl: return "mbcl";
    case LossVariant::gcl: return "gcl";
    case LossVariant::hgcl: return "hgcl";
  }
  return "?";
}

LossVariant parse_loss_variant(std::string_view text) {
  if (text == "mbcl") return LossVariant::mbcl;
  if (text == "gcl") return LossVariant::gcl;
  if (text == "hgcl") return LossVariant::hgcl;
  raise(ErrorKind::config, "unknown loss variant '" + std::string(text) + "'");
}

SurrogateValue surrogate(const SurrogateKind& kind, double gap) {
  switch (kind.tag) {
    case SurrogateKind::Tag::identity:
      return {gap, 1.0};
    case SurrogateKind::Tag::squared_hinge: {
      const double h = gap + kind.margin;
      if (h > 0.0) return {h * h, 2.0 * h};
      return {0.0, 0.0};
    }
    case SurrogateKind::Tag::smoothed_squared_hinge: {
      const double k = kind.sharpness;
      const double x = k * (gap + kind.margin);
      // softplus and its derivative (the logistic), overflow-safe
      const double sp = (x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x))) / k;
      const double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      return {sp * sp, 2.0 * sp * sig};
    }
  }
  return {0.0, 0.0};
}

void LossConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) raise(ErrorKind::config, "LossConfig.tau must be > 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) raise(ErrorKind::config, "LossConfig.epsilon must be > 0");
  if (!(margin >= 0.0) || !std::isfinite(margin)) raise(ErrorKind::config, "LossConfig.margin must be >= 0");
  if (!(margin_smoothing >= 0.0)) raise(ErrorKind::config, "LossConfig.margin_smoothing must be >= 0");
}

SurrogateKind LossConfig::surrogate() const {
  if (variant != LossVariant::hgcl) return SurrogateKind::identity();
  if (margin_smoothing > 0.0) return SurrogateKind::smoothed_squared_hinge(margin, margin_smoothing);
  return SurrogateKind::squared_hinge(margin);
}

PhiValues phi_values(const Matrix& s, const LossConfig& cfg, PhiScope scope) {
  require_square(s);
  const std::size_t b = s.rows();
  const SurrogateKind kind = cfg.surrogate();
  PhiValues phi{std::vector<double>(b, 0.0), std::vector<double>(b, 0.0), scope};
  for (std::size_t i = 0; i < b; ++i) {
    const double pos = s(i, i);
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      phi.phi1[i] += exp_term(kind, s(i, j) - pos, cfg.tau, i, j).value;
      phi.phi2[i] += exp_term(kind, s(j, i) - pos, cfg.tau, j, i).value;
    }
  }
  const double divisor = static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) {
    phi.phi1[i] /= divisor;
    phi.phi2[i] /= divisor;
  }
  return phi;
}

LossAndPartials mbcl_loss(const Matrix& s, double tau) {
  require_square(s);
  if (!(tau > 0.0)) raise(ErrorKind::config, "tau must be > 0");
  const std::size_t b = s.rows();
  LossAndPartials out{0.0, Matrix(b, b)};
  if (b == 0) return out;
  const double scale = 1.0 / static_cast<double>(b);
  std::vector<double> p(b);

  // Each direction: -log softmax of the diagonal along the row (image->text)
  // or column (text->image), computed with a max shift.
  for (int direction = 0; direction < 2; ++direction) {
    for (std::size_t i = 0; i < b; ++i) {
      auto at = [&](std::size_t j) { return direction == 0 ? s(i, j) : s(j, i); };
      double peak = at(0) / tau;
      for (std::size_t j = 1; j < b; ++j) peak = std::max(peak, at(j) / tau);
      double total = 0.0;
      for (std::size_t j = 0; j < b; ++j) {
        p[j] = std::exp(at(j) / tau - peak);
        total += p[j];
      }
      const double log_z = peak + std::log(total);
      out.loss += scale * (log_z - s(i, i) / tau);
      for (std::size_t j = 0; j < b; ++j) {
        const double grad = scale * (p[j] / total - (j == i ? 1.0 : 0.0)) / tau;
        if (direction == 0) {
          out.partials(i, j) += grad;
        } else {
          out.partials(j, i) += grad;
        }
      }
    }
  }
  if (!std::isfinite(out.loss)) raise(ErrorKind::numeric, "mini-batch contrastive loss is not finite");
  return out;
}

Matrix composed_partials(const Matrix& s, const LossConfig& cfg, std::span<const double> u_x,
                         std::span<const double> u_z) {
  require_square(s);
  const std::size_t b = s.rows();
  if (u_x.size() != b || u_z.size() != b) {
    raise(ErrorKind::shape, "estimator slices must have the batch length " + std::to_string(b));
  }
  std::vector<double> w_x(b), w_z(b);
  for (std::size_t i = 0; i < b; ++i) {
    const double dx = cfg.epsilon + u_x[i];
    const double dz = cfg.epsilon + u_z[i];
    if (!(dx > 0.0) || !(dz > 0.0)) {
      raise(ErrorKind::state, "non-positive (epsilon + u) for batch slot " + std::to_string(i));
    }
    w_x[i] = 1.0 / dx;
    w_z[i] = 1.0 / dz;
  }
  const SurrogateKind kind = cfg.surrogate();
  // tau/|B| from the estimator times 1/|B| from phi; the 1/tau of the
  // exponent's chain rule is inside ExpTerm::slope.
  const double scale = cfg.tau / (static_cast<double>(b) * static_cast<double>(b));

  Matrix partials(b, b);
  std::vector<double> diag(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      // s_ij enters phi1 of anchor i (gap against s_ii) and phi2 of anchor j
      // (gap against s_jj).
      const double a = w_x[i] * exp_term(kind, s(i, j) - s(i, i), cfg.tau, i, j).slope;
      const double c = w_z[j] * exp_term(kind, s(i, j) - s(j, j), cfg.tau, i, j).slope;
      partials(i, j) = scale * (a + c);
      diag[i] += a;
      diag[j] += c;
    }
  }
  for (std::size_t i = 0; i < b; ++i) partials(i, i) = 0.0 - scale * diag[i];
  return partials;
}

double gcl_block_loss(const Matrix& s, const LossConfig& cfg) {
  const PhiValues phi = phi_values(s, cfg, PhiScope::minibatch);
  const std::size_t b = s.rows();
  if (b == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    acc += std::log(cfg.epsilon + phi.phi1[i]) + std::log(cfg.epsilon + phi.phi2[i]);
  }
  return cfg.tau / static_cast<double>(b) * acc;
}

double loss_scalar_full(const TwoTowerModel& model, const PairedDataset& data, const LossConfig& cfg) {
  cfg.validate();
  const SimilarityBlock block = similarity_block(forward(model, data.images, Tower::image),
                                                 forward(model, data.texts, Tower::text));
  if (cfg.variant == LossVariant::mbcl) return mbcl_loss(block.s, cfg.tau).loss;
  return gcl_block_loss(block.s, cfg);
}

}  // namespace tuneclip
