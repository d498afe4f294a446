// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "support.hpp"
#include "tuneclip/losses.hpp"
#include "tuneclip/metrics.hpp"
#include "tuneclip/model.hpp"

namespace tuneclip {
namespace {

TEST(ModelDims, ParameterCounts) {
  ModelDims dims;  // d_img = d_txt = 32, hidden 32, embed 16
  EXPECT_EQ(tower_layout(dims, Tower::image).size(), 1584u);
  EXPECT_EQ(tower_layout(dims, Tower::text).size(), 1584u);
  EXPECT_EQ(parameter_count(dims), 3168u);
  EXPECT_EQ(tower_layout(dims, Tower::text).offset, 1584u);
}

TEST(ModelDims, DefaultTemperature) { EXPECT_EQ(ModelDims{}.tau, 0.07); }

TEST(ModelDims, RejectsInvalid) {
  ModelDims dims;
  dims.tau = 0.0;
  EXPECT_ERROR_KIND(dims.validate(), ErrorKind::config);
  dims = {};
  dims.embed = 0;
  EXPECT_ERROR_KIND(dims.validate(), ErrorKind::config);
}

TEST(InitModel, Deterministic) {
  const ModelDims dims;
  EXPECT_EQ(init_model(dims, 5).omega, init_model(dims, 5).omega);
  EXPECT_NE(init_model(dims, 5).omega, init_model(dims, 6).omega);
  EXPECT_EQ(init_model(dims, 5).omega.size(), parameter_count(dims));
}

TEST(Flatten, RoundTripIsBitExact) {
  const ModelDims dims = test::small_dims();
  const TwoTowerModel m = test::random_model(dims, 3);
  EXPECT_EQ(flatten(unflatten(dims, m.omega)), m.omega);
  const UnpackedModel w = unflatten(dims, m.omega);
  EXPECT_EQ(w.image.w1.rows(), dims.hidden);
  EXPECT_EQ(w.image.w1.cols(), dims.d_img);
  EXPECT_EQ(w.text.w2.rows(), dims.embed);
}

TEST(Flatten, WrongLengthIsShapeError) {
  const ModelDims dims = test::small_dims();
  std::vector<double> omega(parameter_count(dims) - 1, 0.0);
  EXPECT_ERROR_KIND(unflatten(dims, omega), ErrorKind::shape);
}

TEST(Forward, UnitNormRows) {
  const ModelDims dims = test::small_dims();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TwoTowerModel m = test::random_model(dims, seed);
    Matrix x = test::random_block(12, seed + 100);
    Matrix inputs(12, dims.d_img);
    for (std::size_t i = 0; i < 12; ++i) {
      for (std::size_t c = 0; c < dims.d_img; ++c) inputs(i, c) = 50.0 * x(i, c % 12);
    }
    for (Tower t : {Tower::image, Tower::text}) {
      const EmbeddingBatch e = forward(m, inputs, t);
      for (std::size_t i = 0; i < e.vectors.rows(); ++i) {
        EXPECT_NEAR(std::sqrt(dot(e.vectors.row(i), e.vectors.row(i))), 1.0, 1e-12);
      }
    }
  }
}

TEST(Forward, DuplicateInputsGiveDuplicateOutputs) {
  const ModelDims dims = test::small_dims();
  const TwoTowerModel m = test::random_model(dims, 2);
  const PairedDataset d = test::small_data(4, 2, 1);
  Matrix inputs(2, dims.d_img);
  for (std::size_t c = 0; c < dims.d_img; ++c) inputs(0, c) = inputs(1, c) = d.images(0, c);
  const EmbeddingBatch e = forward(m, inputs, Tower::image);
  for (std::size_t c = 0; c < dims.embed; ++c) EXPECT_EQ(e.vectors(0, c), e.vectors(1, c));
}

TEST(Forward, EmptyBatch) {
  const ModelDims dims = test::small_dims();
  const EmbeddingBatch e = forward(test::random_model(dims, 1), Matrix(0, dims.d_img), Tower::text);
  EXPECT_EQ(e.vectors.rows(), 0u);
}

TEST(Forward, ZeroOutputIsNormalizationError) {
  const ModelDims dims = test::small_dims();
  TwoTowerModel m = test::random_model(dims, 1);
  UnpackedModel w = unflatten(dims, m.omega);
  for (double& x : w.image.w2.values()) x = 0.0;
  for (double& x : w.image.b2) x = 0.0;
  m.omega = flatten(w);
  EXPECT_ERROR_KIND(forward(m, Matrix(1, dims.d_img, 1.0), Tower::image), ErrorKind::normalization);
}

TEST(Forward, WrongWidthIsShapeError) {
  const ModelDims dims = test::small_dims();
  EXPECT_ERROR_KIND(forward(test::random_model(dims, 1), Matrix(2, dims.d_img + 1), Tower::image), ErrorKind::shape);
}

EmbeddingBatch unit_rows(std::vector<std::vector<double>> rows) {
  EmbeddingBatch e;
  e.vectors = Matrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) e.vectors(i, c) = rows[i][c];
  }
  return e;
}

TEST(SimilarityBlock, Cases) {
  const double r = 1.0 / std::sqrt(2.0);
  const EmbeddingBatch img = unit_rows({{1, 0}, {r, r}, {0, 1}});
  const EmbeddingBatch txt = unit_rows({{1, 0}, {-r, -r}, {1, 0}});
  const Matrix s = similarity_block(img, txt).s;
  EXPECT_EQ(s(0, 0), 1.0);
  EXPECT_EQ(s(2, 0), 0.0);
  EXPECT_NEAR(s(1, 1), -1.0, 1e-15);
}

TEST(SimilarityBlock, EntriesBounded) {
  const ModelDims dims = test::small_dims();
  const PairedDataset d = test::small_data(32, 4, 3);
  const Matrix s = test::similarities(test::random_model(dims, 7), d.images, d.texts);
  for (double x : s.values()) {
    EXPECT_LE(x, 1.0 + 1e-12);
    EXPECT_GE(x, -1.0 - 1e-12);
  }
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
  const ModelDims dims = test::small_dims();
  const PairedDataset d = test::small_data(4, 2, 1);
  const GradientVector g = backward(test::random_model(dims, 1), d.images, d.texts, Matrix(4, 4));
  for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(Backward, LinearInUpstream) {
  const ModelDims dims = test::small_dims();
  const PairedDataset d = test::small_data(4, 2, 1);
  const TwoTowerModel m = test::random_model(dims, 1);
  Matrix up = test::random_block(4, 5);
  const GradientVector g = backward(m, d.images, d.texts, up);
  for (double& x : up.values()) x *= 3.0;
  const GradientVector g3 = backward(m, d.images, d.texts, up);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(g3[k], 3.0 * g[k], 1e-14 * (1.0 + std::abs(g[k])));
}

TEST(Backward, MatchesFiniteDifferences) {
  const ModelDims dims = test::small_dims();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const PairedDataset d = test::small_data(4, 2, seed);
    const TwoTowerModel m = test::random_model(dims, seed);
    const Matrix up = test::random_block(4, seed + 50);
    const GradientVector analytic = backward(m, d.images, d.texts, up);
    const GradientVector fd = finite_diff_grad(
        [&](std::span<const double> w) {
          const Matrix s = test::similarities({dims, {w.begin(), w.end()}}, d.images, d.texts);
          double total = 0.0;
          for (std::size_t k = 0; k < s.values().size(); ++k) total += up.values()[k] * s.values()[k];
          return total;
        },
        m.omega, 1e-5);
    EXPECT_LT(test::relative_error(analytic, fd), 1e-6) << "seed " << seed;
  }
}

TEST(FiniteDiff, QuadraticLinearAndConstant) {
  const std::vector<double> w{0.3, -1.2, 2.5, 0.0};
  const GradientVector q = finite_diff_grad(
      [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return 0.5 * s;
      },
      w, 1e-5);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(q[k], w[k], 1e-9);

  const GradientVector c = finite_diff_grad([](std::span<const double>) { return 4.2; }, w, 1e-5);
  for (double x : c) EXPECT_EQ(x, 0.0);

  const GradientVector l = finite_diff_grad([](std::span<const double> x) { return 1.7 * x[0]; }, w, 1e-5);
  EXPECT_NEAR(l[0], 1.7, 1e-10);
  for (std::size_t k = 1; k < w.size(); ++k) EXPECT_NEAR(l[k], 0.0, 1e-10);
}

TEST(Pretrain, ZeroEpochsIsIdentity) {
  const ModelDims dims = test::small_dims();
  const TwoTowerModel m = test::random_model(dims, 1);
  PretrainConfig cfg;
  cfg.epochs = 0;
  cfg.batch = 8;
  EXPECT_EQ(pretrain_toy(m, test::small_data(16, 4, 1), cfg).omega, m.omega);
}

TEST(Pretrain, DeterministicAndLowersLoss) {
  const ModelDims dims = test::small_dims();
  const PairedDataset d = test::small_data(64, 8, 2);
  const TwoTowerModel m = init_model(dims, 3);
  PretrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch = 16;
  cfg.lr = 1e-2;
  cfg.seed = 4;
  const TwoTowerModel a = pretrain_toy(m, d, cfg);
  EXPECT_EQ(a.omega, pretrain_toy(m, d, cfg).omega);
  const double before = mbcl_loss(test::similarities(m, d.images, d.texts), dims.tau).loss;
  const double after = mbcl_loss(test::similarities(a, d.images, d.texts), dims.tau).loss;
  EXPECT_LT(after, before);
}

}  // namespace
}  // namespace tuneclip
