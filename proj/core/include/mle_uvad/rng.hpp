// Copyright 2026 The mle-uvad Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace mle_uvad {

/// Seedable generator whose draw sequence is identical on every platform.
///
/// The engine is mt19937_64, whose output the standard fixes. The standard
/// distributions are implementation-defined, so every conversion from raw
/// bits to a variate is done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  /// Unbiased integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Sub-seeds for each independent consumer of randomness derived from one
/// user seed: `seed + offset`, with fixed offsets per purpose.
namespace seed_offset {
inline constexpr std::uint64_t init_weights = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t generator = 3;
inline constexpr std::uint64_t subsample = 4;
}  // namespace seed_offset

}  // namespace mle_uvad
