// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <vector>

#include "support.hpp"
#include "tuneclip/binary_io.hpp"
#include "tuneclip/datagen.hpp"

namespace tuneclip {
namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

TEST(DatasetSpec, RejectsInvalidFields) {
  DatasetSpec spec;
  spec.n = 1;
  EXPECT_ERROR_KIND(spec.validate(), ErrorKind::config);
  spec = {};
  spec.k_concepts = 0;
  EXPECT_ERROR_KIND(spec.validate(), ErrorKind::config);
  spec = {};
  spec.n = 8;
  spec.k_concepts = 9;
  EXPECT_ERROR_KIND(spec.validate(), ErrorKind::config);
  spec = {};
  spec.noise_sigma = -0.1;
  EXPECT_ERROR_KIND(spec.validate(), ErrorKind::config);
  spec = {};
  spec.d_img = 0;
  EXPECT_ERROR_KIND(spec.validate(), ErrorKind::config);
}

TEST(Generate, ShapesAndBalancedLabels) {
  const PairedDataset d = test::small_data(40, 8, 1);
  EXPECT_EQ(d.size(), 40u);
  EXPECT_EQ(d.images.rows(), 40u);
  EXPECT_EQ(d.texts.rows(), 40u);
  EXPECT_EQ(d.k_concepts, 8u);
  std::vector<int> counts(8, 0);
  for (auto c : d.concepts) {
    ASSERT_LT(c, 8u);
    ++counts[c];
  }
  for (int c : counts) EXPECT_EQ(c, 5);
}

TEST(Generate, SingleConceptWithoutNoiseCollapses) {
  const PairedDataset d = test::small_data(4, 1, 3, 0.0);
  for (std::size_t i = 1; i < 4; ++i) {
    for (std::size_t c = 0; c < d.images.cols(); ++c) EXPECT_EQ(d.images(i, c), d.images(0, c));
    for (std::size_t c = 0; c < d.texts.cols(); ++c) EXPECT_EQ(d.texts(i, c), d.texts(0, c));
  }
}

TEST(Generate, OneConceptPerSampleGivesDistinctRows) {
  const PairedDataset d = test::small_data(8, 8, 4, 0.0);
  std::set<std::uint32_t> seen(d.concepts.begin(), d.concepts.end());
  EXPECT_EQ(seen.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = i + 1; j < 8; ++j) {
      const auto a = d.images.row(i);
      const auto b = d.images.row(j);
      EXPECT_FALSE(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST(Generate, Deterministic) {
  DatasetSpec spec;
  spec.n = 2048;
  spec.k_concepts = 64;
  spec.seed = 7;
  EXPECT_EQ(generate(spec), generate(spec));
  spec.seed = 8;
  const PairedDataset other = generate(spec);
  spec.seed = 7;
  EXPECT_NE(generate(spec), other);
}

TEST(Generate, NoiselessCosineIsOneExactlyWithinConcept) {
  const PairedDataset d = test::small_data(24, 6, 5, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double ci = cosine(d.images.row(i), d.images.row(j));
      const double ct = cosine(d.texts.row(i), d.texts.row(j));
      if (d.concepts[i] == d.concepts[j]) {
        EXPECT_NEAR(ci, 1.0, 1e-12);
        EXPECT_NEAR(ct, 1.0, 1e-12);
      } else {
        EXPECT_LT(ci, 1.0 - 1e-6);
        EXPECT_LT(ct, 1.0 - 1e-6);
      }
    }
  }
}

TEST(Generate, ModalitiesAreLinkedNotIdentical) {
  // Text features are an orthogonal image of the image features, so inner
  // products agree across modalities even though the rows differ.
  const PairedDataset d = test::small_data(10, 5, 6, 0.1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < d.size(); ++j) {
      EXPECT_NEAR(dot(d.images.row(i), d.images.row(j)), dot(d.texts.row(i), d.texts.row(j)), 1e-10);
    }
  }
  const auto a = d.images.row(0);
  const auto b = d.texts.row(0);
  EXPECT_FALSE(std::equal(a.begin(), a.end(), b.begin()));
}

TEST(Split, Sizes) {
  const PairedDataset d = test::small_data(10, 2, 1);
  const auto [train, test] = split(d, 0.2, 3);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 2u);
}

TEST(Split, DisjointAndExhaustive) {
  // Rows are unique with noise, so they identify their source index.
  const PairedDataset d = test::small_data(4, 2, 2);
  const auto [a, b] = split(d, 0.5, 9);
  ASSERT_EQ(a.size(), 2u);
  ASSERT_EQ(b.size(), 2u);
  std::vector<std::vector<double>> rows;
  for (const PairedDataset* part : {&a, &b}) {
    for (std::size_t i = 0; i < part->size(); ++i) {
      const auto r = part->images.row(i);
      rows.emplace_back(r.begin(), r.end());
    }
  }
  std::vector<std::vector<double>> original;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto r = d.images.row(i);
    original.emplace_back(r.begin(), r.end());
  }
  std::sort(rows.begin(), rows.end());
  std::sort(original.begin(), original.end());
  EXPECT_EQ(rows, original);
}

TEST(Split, Deterministic) {
  const PairedDataset d = test::small_data(30, 3, 1);
  EXPECT_EQ(split(d, 0.3, 5), split(d, 0.3, 5));
}

TEST(Split, RejectsDegenerateFractions) {
  const PairedDataset d = test::small_data(4, 2, 1);
  EXPECT_ERROR_KIND(split(d, 0.0, 1), ErrorKind::config);
  EXPECT_ERROR_KIND(split(d, 1.0, 1), ErrorKind::config);
  EXPECT_ERROR_KIND(split(d, 0.01, 1), ErrorKind::config);
}

TEST(DatasetFile, RoundTripIsBitExact) {
  test::TempDir dir;
  const PairedDataset d = test::small_data(64, 8, 12);
  save_dataset(d, dir / "d.bin");
  EXPECT_EQ(load_dataset(dir / "d.bin"), d);
}

TEST(DatasetFile, TruncatedFileIsParseError) {
  test::TempDir dir;
  save_dataset(test::small_data(16, 4, 1), dir / "d.bin");
  std::vector<char> bytes = io::read_file(dir / "d.bin");
  for (std::size_t keep : {std::size_t{2}, std::size_t{10}, bytes.size() - 3}) {
    std::vector<char> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep));
    io::write_file_atomic(dir / "cut.bin", cut);
    EXPECT_ERROR_KIND(load_dataset(dir / "cut.bin"), ErrorKind::parse);
  }
}

TEST(DatasetFile, HeaderRowCountMismatchIsSchemaError) {
  test::TempDir dir;
  const PairedDataset three = test::small_data(3, 1, 1);
  save_dataset(three, dir / "d.bin");
  std::vector<char> bytes = io::read_file(dir / "d.bin");
  // n sits right after the 4-byte magic and the u16 version.
  const std::uint32_t four = 4;
  std::memcpy(bytes.data() + 6, &four, sizeof four);
  io::write_file_atomic(dir / "d.bin", bytes);
  EXPECT_ERROR_KIND(load_dataset(dir / "d.bin"), ErrorKind::schema);
}

TEST(DatasetFile, BadMagicAndMissingFile) {
  test::TempDir dir;
  io::write_file_atomic(dir / "junk.bin", std::vector<char>(64, 'x'));
  EXPECT_ERROR_KIND(load_dataset(dir / "junk.bin"), ErrorKind::parse);
  EXPECT_ERROR_KIND(load_dataset(dir / "missing.bin"), ErrorKind::io);
}

}  // namespace
}  // namespace tuneclip
