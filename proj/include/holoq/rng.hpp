/*
Copyright 2026 The holoq Authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <cmath>
#include <cstdint>

#include "holoq/field.hpp"

// Counter-based deterministic random streams. Every draw is a pure function of
// its key, so results do not depend on evaluation order or thread count.

namespace holoq::rng {

/// SplitMix64 finalizer; decorrelates consecutive keys.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

/// Uniform double in the open interval (0, 1).
inline double unit_open(std::uint64_t key) {
  return (double((mix(key) >> 11)) + 0.5) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform(std::uint64_t key, double lo, double hi) {
  return lo + (hi - lo) * (double(mix(key) >> 11) * 0x1.0p-53);
}

/// Standard Gaussian via Box-Muller; one value per key.
inline double gaussian(std::uint64_t key) {
  const double u1 = unit_open(combine(key, 0x67e55d5885c61bd3ull));
  const double u2 = unit_open(combine(key, 0x94ab2e788f6d7f2full));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

/// Gumbel(0, 1) sample: -log(-log(U)).
inline double gumbel(std::uint64_t key) {
  return -std::log(-std::log(unit_open(key)));
}

/// Stream of keyed draws. Hierarchical: fork() derives independent substreams.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(mix(seed ^ 0x8e1f33c394ed2d45ull)) {}

  Stream fork(std::uint64_t tag) const { return Stream(combine(state_, tag)); }

  std::uint64_t key(std::uint64_t index) const { return combine(state_, index); }

  double uniform(std::uint64_t index, double lo, double hi) const {
    return rng::uniform(key(index), lo, hi);
  }
  double gaussian(std::uint64_t index) const { return rng::gaussian(key(index)); }
  double gumbel(std::uint64_t index) const { return rng::gumbel(key(index)); }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Key for the Gumbel noise sample of (seed, iteration, pixel, level).
inline std::uint64_t gumbel_key(std::uint64_t seed, std::uint64_t iteration,
                                std::uint64_t pixel, std::uint64_t level) {
  return combine(combine(combine(seed, iteration), pixel), level);
}

}  // namespace holoq::rng
