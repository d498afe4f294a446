// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "tuneclip/matrix.hpp"

namespace tuneclip {

struct DatasetSpec {
  std::uint32_t n = 2048;
  std::uint32_t d_img = 32;
  std::uint32_t d_txt = 32;
  std::uint32_t k_concepts = 64;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;

  /// Throws a configuration error naming the first violated field.
  void validate() const;
};

/// Paired (image, text) feature rows with the latent concept of each pair.
/// Two samples sharing a concept form a planted false negative.
struct PairedDataset {
  Matrix images;
  Matrix texts;
  std::vector<std::uint32_t> concepts;
  std::uint32_t k_concepts = 0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return concepts.size(); }
  PairedDataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const PairedDataset&) const = default;
};

/// Planted-concept generator.
///
/// A fixed link map A (d_txt x d_img, orthonormalized Gaussian) ties the two
/// modalities together. Every concept gets an image prototype p ~ N(0, I);
/// its text prototype is A p. Concept labels are the balanced sequence
/// i mod k in shuffled order. Sample i draws a latent perturbation
/// xi ~ N(0, I), then
///   image_i = p_c + noise_sigma * xi
///   text_i  = A p_c + noise_sigma * (A xi)
/// so the pair is identifiable through xi while same-concept samples stay
/// near-duplicates. This is one model of false negatives among many.
PairedDataset generate(const DatasetSpec& spec);

/// Random disjoint partition into (train, test); the test part holds
/// round(n * test_fraction) samples.
std::pair<PairedDataset, PairedDataset> split(const PairedDataset& data, double test_fraction,
                                              std::uint64_t seed);

/// Binary dataset file ("FCDS", little-endian; see README for the layout).
void save_dataset(const PairedDataset& data, const std::filesystem::path& path);
PairedDataset load_dataset(const std::filesystem::path& path);

}  // namespace tuneclip
