// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tuneclip/datagen.hpp"
#include "tuneclip/matrix.hpp"

namespace tuneclip {

/// Temperature used when a run does not set one. Conventional CLIP value,
/// not tied to any particular checkpoint.
inline constexpr double kDefaultTau = 0.07;

struct ModelDims {
  std::uint32_t d_img = 32;
  std::uint32_t d_txt = 32;
  std::uint32_t hidden = 32;
  std::uint32_t embed = 16;
  double tau = kDefaultTau;

  void validate() const;
  bool operator==(const ModelDims&) const = default;
};

enum class Tower { image, text };

/// Offsets of one tower's blocks inside the flat parameter vector.
/// Tower layout: W1 (hidden x in, row-major), b1, W2 (embed x hidden), b2.
/// The image tower comes first, the text tower follows.
struct TowerLayout {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t embed = 0;
  std::size_t offset = 0;

  std::size_t w1() const noexcept { return offset; }
  std::size_t b1() const noexcept { return w1() + hidden * input; }
  std::size_t w2() const noexcept { return b1() + hidden; }
  std::size_t b2() const noexcept { return w2() + embed * hidden; }
  std::size_t size() const noexcept { return hidden * input + hidden + embed * hidden + embed; }
};

TowerLayout tower_layout(const ModelDims& dims, Tower tower);
std::size_t parameter_count(const ModelDims& dims);

using GradientVector = std::vector<double>;

/// Two one-hidden-layer tanh MLPs with unit-normalized outputs. All
/// parameters live in `omega` in the order given by tower_layout().
struct TwoTowerModel {
  ModelDims dims;
  std::vector<double> omega;

  std::span<const double> theta(Tower tower) const;
};

struct TowerWeights {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  bool operator==(const TowerWeights&) const = default;
};

struct UnpackedModel {
  TowerWeights image;
  TowerWeights text;
};

UnpackedModel unflatten(const ModelDims& dims, std::span<const double> omega);
std::vector<double> flatten(const UnpackedModel& weights);

TwoTowerModel init_model(const ModelDims& dims, std::uint64_t seed);

struct EmbeddingBatch {
  Matrix vectors;
  std::vector<std::size_t> source;  // dataset rows, when known
};

/// Encodes `inputs` (one sample per row). Rows with a zero pre-normalization
/// output raise a normalization error.
EmbeddingBatch forward(const TwoTowerModel& model, const Matrix& inputs, Tower tower);

struct SimilarityBlock {
  Matrix s;  // s(i, j) = f(x_i) . g(z_j)
  std::vector<std::size_t> row_index;
  std::vector<std::size_t> col_index;
};

SimilarityBlock similarity_block(const EmbeddingBatch& img, const EmbeddingBatch& txt);

/// dL/domega for a scalar L whose dependence on the model is through the
/// similarity block of (image_inputs, text_inputs), given upstream = dL/ds.
GradientVector backward(const TwoTowerModel& model, const Matrix& image_inputs,
                        const Matrix& text_inputs, const Matrix& upstream);

/// Central differences (L(w + h e_k) - L(w - h e_k)) / 2h for every k.
GradientVector finite_diff_grad(const std::function<double(std::span<const double>)>& loss,
                                std::span<const double> omega, double step);

struct PretrainConfig {
  std::size_t epochs = 40;
  double lr = 2e-3;
  std::size_t batch = 128;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.98;
};

/// Adam minimization of the mini-batch contrastive loss, cosine-decayed
/// learning rate. Produces the starting point for fine-tuning.
TwoTowerModel pretrain_toy(TwoTowerModel model, const PairedDataset& train, const PretrainConfig& cfg);

}  // namespace tuneclip
