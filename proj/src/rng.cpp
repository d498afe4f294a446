// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneclip/rng.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace tuneclip {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(seed ^ splitmix64(stream)));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_gaussian_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Largest multiple of bound that fits; values above it are rejected.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  std::uint64_t x = engine_();
  while (x > limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

void Rng::shuffle(std::span<std::size_t> values) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = uniform_index(i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace tuneclip
