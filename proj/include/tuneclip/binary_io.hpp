// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian byte buffers shared by the dataset and checkpoint formats.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tuneclip/error.hpp"

namespace tuneclip::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class Writer {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  template <typename T>
  void put(T value) {
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    buf_.insert(buf_.end(), raw, raw + sizeof(T));
  }
  template <typename T>
  void put_all(std::span<const T> values) {
    for (const T& v : values) put(v);
  }
  const std::vector<char>& buffer() const noexcept { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const char> data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  void expect_bytes(std::string_view s) {
    require(s.size());
    if (std::memcmp(data_.data() + pos_, s.data(), s.size()) != 0) {
      raise(ErrorKind::parse, "bad magic at byte offset " + std::to_string(pos_));
    }
    pos_ += s.size();
  }
  template <typename T>
  T get() {
    require(sizeof(T));
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  template <typename T>
  void get_all(std::span<T> out) {
    require(out.size_bytes());
    std::memcpy(out.data(), data_.data() + pos_, out.size_bytes());
    pos_ += out.size_bytes();
  }

 private:
  void require(std::size_t n) const {
    if (remaining() < n) {
      raise(ErrorKind::parse, "unexpected end of file at byte offset " + std::to_string(pos_) +
                                  " (needed " + std::to_string(n) + " more bytes)");
    }
  }

  std::span<const char> data_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
/// Creates missing parent directories, writes to a sibling temporary file and
/// renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::span<const char> bytes);

}  // namespace tuneclip::io
