// Copyright 2026 The tuneclip Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace tuneclip {

/// Seedable random source with a fully specified output stream.
///
/// Engine: std::mt19937_64 (MT19937-64, standardized bit-for-bit).
/// Derived draws do not use <random> distributions, whose algorithms are
/// implementation-defined:
///   uniform()        (x >> 11) * 2^-53, in [0, 1)
///   gaussian()       Box-Muller on (1 - uniform(), uniform()); the cosine
///                    branch is returned first, the sine branch cached
///   uniform_index(n) rejection sampling on the top bits
///   shuffle()        Fisher-Yates from the back using uniform_index
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for a (seed, stream id) pair, mixed with SplitMix64.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double gaussian();
  std::size_t uniform_index(std::size_t n);
  void shuffle(std::span<std::size_t> values);

 private:
  std::mt19937_64 engine_;
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace tuneclip
