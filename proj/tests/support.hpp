// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0
//
// Helpers shared by the unit tests. The reference loops here are written
// without calling into the loss kernels so the tests can compare the two.

#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "tuneclip/datagen.hpp"
#include "tuneclip/error.hpp"
#include "tuneclip/losses.hpp"
#include "tuneclip/matrix.hpp"
#include "tuneclip/model.hpp"
#include "tuneclip/optim.hpp"
#include "tuneclip/rng.hpp"

namespace tuneclip::test {

// EXPECT that `stmt` throws tuneclip::Error of the given kind.
#define EXPECT_ERROR_KIND(stmt, expected_kind)                                            \
  do {                                                                                    \
    try {                                                                                 \
      stmt;                                                                               \
      ADD_FAILURE() << "expected " << ::tuneclip::to_string(expected_kind) << " error";   \
    } catch (const ::tuneclip::Error& e) {                                                \
      EXPECT_EQ(e.kind(), expected_kind) << e.what();                                     \
    }                                                                                     \
  } while (0)

inline std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

inline PairedDataset small_data(std::uint32_t n, std::uint32_t k, std::uint64_t seed, double sigma = 0.1,
                                std::uint32_t d = 8) {
  DatasetSpec spec;
  spec.n = n;
  spec.d_img = d;
  spec.d_txt = d;
  spec.k_concepts = k;
  spec.noise_sigma = sigma;
  spec.seed = seed;
  return generate(spec);
}

inline ModelDims small_dims(std::uint32_t d = 8) {
  ModelDims dims;
  dims.d_img = d;
  dims.d_txt = d;
  dims.hidden = 6;
  dims.embed = 4;
  return dims;
}

// Initialized weights plus nonzero biases, so every parameter matters.
inline TwoTowerModel random_model(const ModelDims& dims, std::uint64_t seed) {
  Rng rng(seed);
  TwoTowerModel model = init_model(dims, rng.next_u64());
  UnpackedModel w = unflatten(dims, model.omega);
  for (TowerWeights* t : {&w.image, &w.text}) {
    for (double& b : t->b1) b = 0.1 * rng.gaussian();
    for (double& b : t->b2) b = 0.1 * rng.gaussian();
  }
  model.omega = flatten(w);
  return model;
}

inline Matrix similarities(const TwoTowerModel& model, const Matrix& images, const Matrix& texts) {
  return similarity_block(forward(model, images, Tower::image), forward(model, texts, Tower::text)).s;
}

// Square block with entries uniform in [-1, 1).
inline Matrix random_block(std::size_t b, std::uint64_t seed) {
  Rng rng(seed);
  Matrix s(b, b);
  for (double& x : s.values()) x = 2.0 * rng.uniform() - 1.0;
  return s;
}

inline double ref_surrogate(const LossConfig& cfg, double gap) {
  if (cfg.variant != LossVariant::hgcl) return gap;
  const double h = gap + cfg.margin > 0.0 ? gap + cfg.margin : 0.0;
  return h * h;
}

// Inner means by direct double loop; divisor is the block size.
inline void ref_phi(const Matrix& s, const LossConfig& cfg, std::vector<double>& phi1, std::vector<double>& phi2) {
  const std::size_t b = s.rows();
  phi1.assign(b, 0.0);
  phi2.assign(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      phi1[i] += std::exp(ref_surrogate(cfg, s(i, j) - s(i, i)) / cfg.tau);
      phi2[i] += std::exp(ref_surrogate(cfg, s(j, i) - s(i, i)) / cfg.tau);
    }
    phi1[i] /= static_cast<double>(b);
    phi2[i] /= static_cast<double>(b);
  }
}

// (tau/n) sum_i [log(eps + phi1_i) + log(eps + phi2_i)] by direct loops.
inline double ref_gcl_loss(const Matrix& s, const LossConfig& cfg) {
  std::vector<double> p1, p2;
  ref_phi(s, cfg, p1, p2);
  double total = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) total += std::log(cfg.epsilon + p1[i]) + std::log(cfg.epsilon + p2[i]);
  return cfg.tau * total / static_cast<double>(p1.size());
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "tuneclip_";
    if (info != nullptr) name += std::string(info->test_suite_name()) + "_" + info->name();
    path_ = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace tuneclip::test
