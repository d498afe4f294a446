// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <vector>

#include "support.hpp"
#include "tuneclip/checkpoint.hpp"

namespace tuneclip {
namespace {

Checkpoint sample(bool with_stats) {
  Checkpoint c;
  c.stage = with_stats ? CheckpointStage::finetuned : CheckpointStage::pretrained;
  c.config_hash = 0xdeadbeef;
  c.data_seed = 1;
  c.model_seed = 201;
  c.train_seed = 401;
  c.dims = test::small_dims();
  c.omega = test::random_model(c.dims, 3).omega;
  if (with_stats) {
    Rng rng(4);
    c.moments = MomentState::zeros(c.omega.size(), 0.8, 0.95, 0.01);
    for (double& x : c.moments.m) x = rng.gaussian();
    for (double& x : c.moments.v) x = rng.uniform();
    c.moments.t = 17;
    c.estimator = EstimatorState::zeros(5);
    for (std::size_t i = 0; i < 5; ++i) {
      c.estimator.u_x[i] = rng.uniform();
      c.estimator.u_z[i] = rng.uniform();
      c.estimator.updated_at[i] = i;
    }
    c.estimator.step = 4;
    c.estimator.schedule_epoch = 6;
  }
  return c;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  for (bool stats : {false, true}) {
    const Checkpoint c = sample(stats);
    const std::vector<char> bytes = encode_checkpoint(c);
    EXPECT_EQ(decode_checkpoint(bytes), c);
    EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
    EXPECT_EQ(std::string(bytes.data(), 4), "FCCK");
  }
}

TEST(Checkpoint, FileRoundTrip) {
  test::TempDir dir;
  const Checkpoint c = sample(true);
  save_checkpoint(c, dir / "a.fcck");
  EXPECT_EQ(load_checkpoint(dir / "a.fcck"), c);
  EXPECT_ERROR_KIND(load_checkpoint(dir / "missing.fcck"), ErrorKind::io);
}

TEST(Checkpoint, AnyFlippedByteFailsChecksum) {
  const std::vector<char> bytes = encode_checkpoint(sample(true));
  for (std::size_t at : {std::size_t{0}, std::size_t{5}, std::size_t{60}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<char> bad = bytes;
    bad[at] = static_cast<char>(bad[at] ^ 0x10);
    SCOPED_TRACE(at);
    EXPECT_ERROR_KIND(decode_checkpoint(bad), ErrorKind::checksum);
  }
}

TEST(Checkpoint, TruncationFailsChecksum) {
  const std::vector<char> bytes = encode_checkpoint(sample(false));
  for (std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{40}, bytes.size() - 1}) {
    EXPECT_ERROR_KIND(decode_checkpoint(std::span<const char>(bytes.data(), keep)), ErrorKind::checksum);
  }
}

TEST(Checkpoint, UnknownVersionRefused) {
  Checkpoint c = sample(false);
  c.version = kCheckpointVersion + 1;
  EXPECT_ERROR_KIND(decode_checkpoint(encode_checkpoint(c)), ErrorKind::version);
}

TEST(Checkpoint, InconsistentContentsRefusedOnWrite) {
  Checkpoint c = sample(true);
  c.omega.pop_back();
  EXPECT_ERROR_KIND(encode_checkpoint(c), ErrorKind::shape);
  c = sample(true);
  c.moments.v.pop_back();
  EXPECT_ERROR_KIND(encode_checkpoint(c), ErrorKind::shape);
  c = sample(true);
  c.estimator.u_z.pop_back();
  EXPECT_ERROR_KIND(encode_checkpoint(c), ErrorKind::shape);
}

TEST(CheckCheckpoint, ConfigHashNeedsForce) {
  const Checkpoint c = sample(false);
  CheckpointExpectations e;
  e.config_hash = 0x12345678;
  EXPECT_ERROR_KIND(check_checkpoint(c, e), ErrorKind::config_hash);
  e.force = true;
  EXPECT_NO_THROW(check_checkpoint(c, e));
  e.force = false;
  e.config_hash = c.config_hash;
  EXPECT_NO_THROW(check_checkpoint(c, e));
}

TEST(CheckCheckpoint, ShapeMismatches) {
  const Checkpoint c = sample(true);
  CheckpointExpectations e;
  e.dims = test::small_dims(9);
  EXPECT_ERROR_KIND(check_checkpoint(c, e), ErrorKind::shape);
  e.dims = c.dims;
  e.n = 6;
  EXPECT_ERROR_KIND(check_checkpoint(c, e), ErrorKind::shape);
  e.n = 5;
  EXPECT_NO_THROW(check_checkpoint(c, e));
  // A checkpoint without statistics fits any dataset size.
  e.n = 1000;
  EXPECT_NO_THROW(check_checkpoint(sample(false), e));
}

TEST(CheckCheckpoint, DimsCheckedBeforeHash) {
  const Checkpoint c = sample(false);
  CheckpointExpectations e;
  e.config_hash = 1;
  e.dims = test::small_dims(9);
  e.force = true;
  EXPECT_ERROR_KIND(check_checkpoint(c, e), ErrorKind::shape);
}

TEST(CheckpointStage, Names) {
  EXPECT_STREQ(to_string(CheckpointStage::pretrained), "pretrained");
  EXPECT_STREQ(to_string(CheckpointStage::recovered), "recovered");
  EXPECT_STREQ(to_string(CheckpointStage::finetuned), "finetuned");
  EXPECT_STREQ(to_string(CheckpointStage::failed), "failed");
}

}  // namespace
}  // namespace tuneclip
