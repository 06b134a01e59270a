// rng.hpp
//
// Copyright 2026  Voxaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

// Self-contained random number generation.  The standard <random>
// distributions are not used because their output is not pinned by the
// standard; augmentation runs must replay bit for bit from a 64-bit seed
// on any build.

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "voxaug/error.hpp"

namespace voxaug {

namespace detail {

// Finalizer from the splitmix64 generator; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace detail

// Derives an independent stream seed for one (input, copy) pair.  Every
// augmented copy draws from its own stream, so results do not depend on
// worker scheduling or on the order files are processed.
inline std::uint64_t hash64_stream(std::uint64_t seed, std::string_view input_id,
                                   std::uint64_t copy_index) {
  std::uint64_t k = detail::mix64(seed);
  k = detail::mix64(k ^ detail::fnv1a64(input_id));
  k = detail::mix64(k ^ (copy_index * 0x9E3779B97F4A7C15ull + 1));
  return k;
}

// xoshiro256** seeded through splitmix64.  Box-Muller normals draw two
// uniforms every call (no spare caching), so the generator state is the
// engine state alone and draw sequences stay aligned across code paths.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) {
      sm += 0x9E3779B97F4A7C15ull;
      std::uint64_t z = sm;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
      w = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    if (!(lo <= hi)) throw InvalidParams("uniform: lo > hi");
    return lo + (hi - lo) * uniform();
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw InvalidParams("below: n must be positive");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Box-Muller transform; consumes exactly two uniforms per call.
  double normal(double mean, double sigma) {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * M_PI * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

}  // namespace voxaug
