// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/checkpoint.hpp"

#include <zlib.h>

#include <cstdio>
#include <string>

#include "tuneclip/binary_io.hpp"
#include "tuneclip/error.hpp"

namespace tuneclip {

namespace {

constexpr std::string_view kMagic = "FCCK";

std::uint32_t crc_of(std::span<const char> bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

// Reads a length prefix and makes sure that many elements of `width` bytes
// (times `copies`) can still be present.
std::size_t get_length(io::Reader& r, std::size_t width, std::size_t copies, const char* what) {
  const auto len = r.get<std::uint64_t>();
  if (len > r.remaining() / (width * copies)) {
    raise(ErrorKind::parse, std::string(what) + " length " + std::to_string(len) + " at byte offset " +
                                std::to_string(r.offset() - 8) + " exceeds the file");
  }
  return static_cast<std::size_t>(len);
}

std::string dims_text(const ModelDims& d) {
  return std::to_string(d.d_img) + "/" + std::to_string(d.d_txt) + "/" + std::to_string(d.hidden) + "/" +
         std::to_string(d.embed);
}

}  // namespace

const char* to_string(CheckpointStage stage) noexcept {
  switch (stage) {
    case CheckpointStage::pretrained: return "pretrained";
    case CheckpointStage::recovered: return "recovered";
    case CheckpointStage::finetuned: return "finetuned";
    case CheckpointStage::failed: return "failed";
  }
  return "unknown";
}

std::vector<char> encode_checkpoint(const Checkpoint& c) {
  if (c.omega.size() != parameter_count(c.dims)) raise(ErrorKind::shape, "omega does not match the model dims");
  if (c.moments.m.size() != c.moments.v.size()) raise(ErrorKind::shape, "first and second moments differ in length");
  const std::size_t n = c.estimator.size();
  if (c.estimator.u_z.size() != n || c.estimator.updated_at.size() != n) {
    raise(ErrorKind::shape, "estimator vectors differ in length");
  }
  io::Writer w;
  w.bytes(kMagic);
  w.put<std::uint16_t>(c.version);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(c.stage));
  w.put<std::uint32_t>(c.config_hash);
  w.put<std::uint64_t>(c.data_seed);
  w.put<std::uint64_t>(c.model_seed);
  w.put<std::uint64_t>(c.train_seed);
  w.put<std::uint32_t>(c.dims.d_img);
  w.put<std::uint32_t>(c.dims.d_txt);
  w.put<std::uint32_t>(c.dims.hidden);
  w.put<std::uint32_t>(c.dims.embed);
  w.put<double>(c.dims.tau);
  w.put<std::uint64_t>(c.omega.size());
  w.put_all<double>(c.omega);
  w.put<std::uint64_t>(c.moments.m.size());
  w.put_all<double>(c.moments.m);
  w.put_all<double>(c.moments.v);
  w.put<std::uint64_t>(c.moments.t);
  w.put<double>(c.moments.beta1);
  w.put<double>(c.moments.beta2);
  w.put<double>(c.moments.weight_decay);
  w.put<std::uint64_t>(n);
  w.put_all<double>(c.estimator.u_x);
  w.put_all<double>(c.estimator.u_z);
  w.put_all<std::uint64_t>(c.estimator.updated_at);
  w.put<std::uint64_t>(c.estimator.step);
  w.put<std::uint64_t>(c.estimator.schedule_epoch);
  std::vector<char> out = w.buffer();
  io::Writer tail;
  tail.put<std::uint32_t>(crc_of(out));
  out.insert(out.end(), tail.buffer().begin(), tail.buffer().end());
  return out;
}

Checkpoint decode_checkpoint(std::span<const char> bytes) {
  if (bytes.size() < kMagic.size() + sizeof(std::uint32_t)) {
    raise(ErrorKind::checksum, "checkpoint is truncated (" + std::to_string(bytes.size()) + " bytes)");
  }
  const auto body = bytes.first(bytes.size() - sizeof(std::uint32_t));
  io::Reader tail(bytes.last(sizeof(std::uint32_t)));
  const auto stored = tail.get<std::uint32_t>();
  if (stored != crc_of(body)) raise(ErrorKind::checksum, "checkpoint checksum does not match its contents");

  io::Reader r(body);
  r.expect_bytes(kMagic);
  Checkpoint c;
  c.version = r.get<std::uint16_t>();
  if (c.version != kCheckpointVersion) {
    raise(ErrorKind::version, "unsupported checkpoint version " + std::to_string(c.version) + " (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
  }
  const auto stage = r.get<std::uint8_t>();
  if (stage > static_cast<std::uint8_t>(CheckpointStage::failed)) {
    raise(ErrorKind::parse, "unknown checkpoint stage " + std::to_string(stage));
  }
  c.stage = static_cast<CheckpointStage>(stage);
  c.config_hash = r.get<std::uint32_t>();
  c.data_seed = r.get<std::uint64_t>();
  c.model_seed = r.get<std::uint64_t>();
  c.train_seed = r.get<std::uint64_t>();
  c.dims.d_img = r.get<std::uint32_t>();
  c.dims.d_txt = r.get<std::uint32_t>();
  c.dims.hidden = r.get<std::uint32_t>();
  c.dims.embed = r.get<std::uint32_t>();
  c.dims.tau = r.get<double>();
  c.dims.validate();

  const std::size_t p = get_length(r, sizeof(double), 1, "omega");
  if (p != parameter_count(c.dims)) {
    raise(ErrorKind::schema, "checkpoint holds " + std::to_string(p) + " parameters, dims " + dims_text(c.dims) +
                                 " need " + std::to_string(parameter_count(c.dims)));
  }
  c.omega.resize(p);
  r.get_all<double>(c.omega);

  const std::size_t q = get_length(r, sizeof(double), 2, "moment");
  if (q != 0 && q != p) raise(ErrorKind::schema, "moment length " + std::to_string(q) + " differs from omega");
  c.moments.m.resize(q);
  c.moments.v.resize(q);
  r.get_all<double>(c.moments.m);
  r.get_all<double>(c.moments.v);
  c.moments.t = r.get<std::uint64_t>();
  c.moments.beta1 = r.get<double>();
  c.moments.beta2 = r.get<double>();
  c.moments.weight_decay = r.get<double>();

  const std::size_t n = get_length(r, 3 * sizeof(double), 1, "estimator");
  c.estimator.u_x.resize(n);
  c.estimator.u_z.resize(n);
  c.estimator.updated_at.resize(n);
  r.get_all<double>(c.estimator.u_x);
  r.get_all<double>(c.estimator.u_z);
  r.get_all<std::uint64_t>(c.estimator.updated_at);
  c.estimator.step = r.get<std::uint64_t>();
  c.estimator.schedule_epoch = r.get<std::uint64_t>();
  if (r.remaining() != 0) {
    raise(ErrorKind::parse, std::to_string(r.remaining()) + " trailing bytes at offset " + std::to_string(r.offset()));
  }
  return c;
}

void check_checkpoint(const Checkpoint& c, const CheckpointExpectations& expect) {
  if (expect.dims) {
    const ModelDims& d = *expect.dims;
    if (d.d_img != c.dims.d_img || d.d_txt != c.dims.d_txt || d.hidden != c.dims.hidden ||
        d.embed != c.dims.embed) {
      raise(ErrorKind::shape, "checkpoint dims " + dims_text(c.dims) + " do not match the run's " + dims_text(d));
    }
  }
  if (expect.n && c.estimator.size() != 0 && c.estimator.size() != *expect.n) {
    raise(ErrorKind::shape, "checkpoint statistics cover " + std::to_string(c.estimator.size()) +
                                " samples, the dataset has " + std::to_string(*expect.n));
  }
  if (expect.config_hash && *expect.config_hash != c.config_hash && !expect.force) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "checkpoint hash %08x, run hash %08x", c.config_hash, *expect.config_hash);
    raise(ErrorKind::config_hash, std::string(buf) + "; pass --force to load anyway");
  }
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const std::vector<char> bytes = encode_checkpoint(c);
  io::write_file_atomic(path, bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const CheckpointExpectations& expect) {
  const std::vector<char> bytes = io::read_file(path);
  Checkpoint c = decode_checkpoint(bytes);
  check_checkpoint(c, expect);
  return c;
}

}  // namespace tuneclip
