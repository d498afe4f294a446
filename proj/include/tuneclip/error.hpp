// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tuneclip {

enum class ErrorKind {
  config,         // invalid configuration or argument
  parse,          // malformed file contents
  schema,         // well-formed file whose dimensions disagree
  shape,          // mismatched matrix/vector shapes
  numeric,        // overflow or non-finite values
  normalization,  // zero-norm vector in the normalization map
  state,          // estimator/moment state misuse
  training,       // divergence during a training loop
  io,             // filesystem failure
  checksum,       // corrupted checkpoint
  version,        // unsupported format version
  config_hash,    // checkpoint produced under a different configuration
  refused,        // oracle cap exceeded
  assertion,      // experiment assertion failed
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace tuneclip
