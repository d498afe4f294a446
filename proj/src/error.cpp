// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/error.hpp"

namespace tuneclip {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "configuration error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::normalization: return "normalization error";
    case ErrorKind::state: return "state error";
    case ErrorKind::training: return "training error";
    case ErrorKind::io: return "io error";
    case ErrorKind::checksum: return "checksum error";
    case ErrorKind::version: return "version error";
    case ErrorKind::config_hash: return "config hash mismatch";
    case ErrorKind::refused: return "refused";
    case ErrorKind::assertion: return "assertion failure";
  }
  return "error";
}

void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, std::string(to_string(kind)) + ": " + message);
}

}  // namespace tuneclip
