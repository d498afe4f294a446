// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/model.hpp"

#include <cmath>
#include <string>

#include "tuneclip/error.hpp"
#include "tuneclip/rng.hpp"

namespace tuneclip {

namespace {

struct TowerCache {
  Matrix hidden;  // tanh activations
  Matrix out;     // normalized embeddings
  std::vector<double> norms;
};

TowerCache run_tower(const TwoTowerModel& model, const Matrix& inputs, Tower tower) {
  const TowerLayout lay = tower_layout(model.dims, tower);
  if (inputs.cols() != lay.input) {
    raise(ErrorKind::shape, std::string(tower == Tower::image ? "image" : "text") +
                                " tower expects " + std::to_string(lay.input) + " input columns, got " +
                                std::to_string(inputs.cols()));
  }
  const double* w = model.omega.data();
  const std::size_t batch = inputs.rows();
  TowerCache cache{Matrix(batch, lay.hidden), Matrix(batch, lay.embed), std::vector<double>(batch)};
  std::vector<double> raw(lay.embed);
  for (std::size_t r = 0; r < batch; ++r) {
    const auto x = inputs.row(r);
    auto a = cache.hidden.row(r);
    for (std::size_t h = 0; h < lay.hidden; ++h) {
      const double* wrow = w + lay.w1() + h * lay.input;
      double z = w[lay.b1() + h];
      for (std::size_t k = 0; k < lay.input; ++k) z += wrow[k] * x[k];
      a[h] = std::tanh(z);
    }
    double sq = 0.0;
    for (std::size_t e = 0; e < lay.embed; ++e) {
      const double* wrow = w + lay.w2() + e * lay.hidden;
      double y = w[lay.b2() + e];
      for (std::size_t h = 0; h < lay.hidden; ++h) y += wrow[h] * a[h];
      raw[e] = y;
      sq += y * y;
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      raise(ErrorKind::normalization, "row " + std::to_string(r) + " has pre-normalization norm " +
                                          std::to_string(norm));
    }
    cache.norms[r] = norm;
    auto out = cache.out.row(r);
    for (std::size_t e = 0; e < lay.embed; ++e) out[e] = raw[e] / norm;
  }
  return cache;
}

// Accumulates dL/dtheta for one tower into grad, given dL/d(normalized output).
void tower_backward(const TwoTowerModel& model, Tower tower, const Matrix& inputs,
                    const TowerCache& cache, const Matrix& d_out, std::span<double> grad) {
  const TowerLayout lay = tower_layout(model.dims, tower);
  const double* w = model.omega.data();
  std::vector<double> dy(lay.embed);
  std::vector<double> dz(lay.hidden);
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const auto v = cache.out.row(r);
    const auto g = d_out.row(r);
    // Jacobian of y -> y/|y| is (I - v v^T) / |y|.
    const double proj = dot(v, g);
    for (std::size_t e = 0; e < lay.embed; ++e) dy[e] = (g[e] - v[e] * proj) / cache.norms[r];

    const auto a = cache.hidden.row(r);
    for (std::size_t e = 0; e < lay.embed; ++e) {
      grad[lay.b2() + e] += dy[e];
      double* grow = grad.data() + lay.w2() + e * lay.hidden;
      for (std::size_t h = 0; h < lay.hidden; ++h) grow[h] += dy[e] * a[h];
    }
    for (std::size_t h = 0; h < lay.hidden; ++h) {
      double da = 0.0;
      for (std::size_t e = 0; e < lay.embed; ++e) da += w[lay.w2() + e * lay.hidden + h] * dy[e];
      dz[h] = da * (1.0 - a[h] * a[h]);
    }
    const auto x = inputs.row(r);
    for (std::size_t h = 0; h < lay.hidden; ++h) {
      grad[lay.b1() + h] += dz[h];
      double* grow = grad.data() + lay.w1() + h * lay.input;
      for (std::size_t k = 0; k < lay.input; ++k) grow[k] += dz[h] * x[k];
    }
  }
}

TowerWeights unpack_tower(const TowerLayout& lay, std::span<const double> omega) {
  TowerWeights t{Matrix(lay.hidden, lay.input), std::vector<double>(lay.hidden),
                 Matrix(lay.embed, lay.hidden), std::vector<double>(lay.embed)};
  auto copy = [&](std::size_t from, std::span<double> to) {
    for (std::size_t k = 0; k < to.size(); ++k) to[k] = omega[from + k];
  };
  copy(lay.w1(), t.w1.values());
  copy(lay.b1(), t.b1);
  copy(lay.w2(), t.w2.values());
  copy(lay.b2(), t.b2);
  return t;
}

void pack_tower(const TowerWeights& t, std::vector<double>& out) {
  out.insert(out.end(), t.w1.values().begin(), t.w1.values().end());
  out.insert(out.end(), t.b1.begin(), t.b1.end());
  out.insert(out.end(), t.w2.values().begin(), t.w2.values().end());
  out.insert(out.end(), t.b2.begin(), t.b2.end());
}

}  // namespace

void ModelDims::validate() const {
  if (d_img < 1 || d_txt < 1 || hidden < 1 || embed < 1) {
    raise(ErrorKind::config, "model dimensions must all be >= 1");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) raise(ErrorKind::config, "tau must be a positive finite real");
}

TowerLayout tower_layout(const ModelDims& dims, Tower tower) {
  TowerLayout image{dims.d_img, dims.hidden, dims.embed, 0};
  if (tower == Tower::image) return image;
  return TowerLayout{dims.d_txt, dims.hidden, dims.embed, image.size()};
}

std::size_t parameter_count(const ModelDims& dims) {
  return tower_layout(dims, Tower::image).size() + tower_layout(dims, Tower::text).size();
}

std::span<const double> TwoTowerModel::theta(Tower tower) const {
  const TowerLayout lay = tower_layout(dims, tower);
  return std::span<const double>(omega).subspan(lay.offset, lay.size());
}

UnpackedModel unflatten(const ModelDims& dims, std::span<const double> omega) {
  if (omega.size() != parameter_count(dims)) {
    raise(ErrorKind::shape, "parameter vector has " + std::to_string(omega.size()) +
                                " entries, layout needs " + std::to_string(parameter_count(dims)));
  }
  return {unpack_tower(tower_layout(dims, Tower::image), omega),
          unpack_tower(tower_layout(dims, Tower::text), omega)};
}

std::vector<double> flatten(const UnpackedModel& weights) {
  std::vector<double> out;
  pack_tower(weights.image, out);
  pack_tower(weights.text, out);
  return out;
}

TwoTowerModel init_model(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  TwoTowerModel model{dims, std::vector<double>(parameter_count(dims), 0.0)};
  Rng rng(seed);
  for (Tower tower : {Tower::image, Tower::text}) {
    const TowerLayout lay = tower_layout(dims, tower);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(lay.input));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(lay.hidden));
    for (std::size_t k = 0; k < lay.hidden * lay.input; ++k) model.omega[lay.w1() + k] = s1 * rng.gaussian();
    for (std::size_t k = 0; k < lay.embed * lay.hidden; ++k) model.omega[lay.w2() + k] = s2 * rng.gaussian();
  }
  return model;
}

EmbeddingBatch forward(const TwoTowerModel& model, const Matrix& inputs, Tower tower) {
  return EmbeddingBatch{run_tower(model, inputs, tower).out, {}};
}

SimilarityBlock similarity_block(const EmbeddingBatch& img, const EmbeddingBatch& txt) {
  if (img.vectors.cols() != txt.vectors.cols() && !img.vectors.empty() && !txt.vectors.empty()) {
    raise(ErrorKind::shape, "embedding dimensions differ: " + std::to_string(img.vectors.cols()) +
                                " vs " + std::to_string(txt.vectors.cols()));
  }
  SimilarityBlock block{Matrix(img.vectors.rows(), txt.vectors.rows()), img.source, txt.source};
  for (std::size_t i = 0; i < img.vectors.rows(); ++i) {
    for (std::size_t j = 0; j < txt.vectors.rows(); ++j) {
      block.s(i, j) = dot(img.vectors.row(i), txt.vectors.row(j));
    }
  }
  return block;
}

GradientVector backward(const TwoTowerModel& model, const Matrix& image_inputs,
                        const Matrix& text_inputs, const Matrix& upstream) {
  if (upstream.rows() != image_inputs.rows() || upstream.cols() != text_inputs.rows()) {
    raise(ErrorKind::shape, "upstream is " + std::to_string(upstream.rows()) + "x" +
                                std::to_string(upstream.cols()) + " but the similarity block is " +
                                std::to_string(image_inputs.rows()) + "x" +
                                std::to_string(text_inputs.rows()));
  }
  for (std::size_t k = 0; k < upstream.values().size(); ++k) {
    if (!std::isfinite(upstream.values()[k])) {
      raise(ErrorKind::numeric, "non-finite upstream entry at flat index " + std::to_string(k));
    }
  }
  const TowerCache f = run_tower(model, image_inputs, Tower::image);
  const TowerCache g = run_tower(model, text_inputs, Tower::text);
  const std::size_t d = model.dims.embed;

  // dL/df_i = sum_j up(i,j) g_j ; dL/dg_j = sum_i up(i,j) f_i
  Matrix d_f(image_inputs.rows(), d);
  Matrix d_g(text_inputs.rows(), d);
  for (std::size_t i = 0; i < upstream.rows(); ++i) {
    auto df = d_f.row(i);
    const auto fi = f.out.row(i);
    for (std::size_t j = 0; j < upstream.cols(); ++j) {
      const double u = upstream(i, j);
      const auto gj = g.out.row(j);
      auto dg = d_g.row(j);
      for (std::size_t e = 0; e < d; ++e) {
        df[e] += u * gj[e];
        dg[e] += u * fi[e];
      }
    }
  }

  GradientVector grad(model.omega.size(), 0.0);
  tower_backward(model, Tower::image, image_inputs, f, d_f, grad);
  tower_backward(model, Tower::text, text_inputs, g, d_g, grad);
  return grad;
}

GradientVector finite_diff_grad(const std::function<double(std::span<const double>)>& loss,
                                std::span<const double> omega, double step) {
  if (!(step > 0.0)) raise(ErrorKind::config, "finite-difference step must be > 0");
  std::vector<double> probe(omega.begin(), omega.end());
  GradientVector grad(omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k) {
    probe[k] = omega[k] + step;
    const double up = loss(probe);
    probe[k] = omega[k] - step;
    const double down = loss(probe);
    probe[k] = omega[k];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      raise(ErrorKind::numeric, "non-finite loss when perturbing coordinate " + std::to_string(k));
    }
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace tuneclip
