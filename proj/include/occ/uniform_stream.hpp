// Copyright 2026 the occ-learn authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>

namespace occ {

namespace detail {
// splitmix64 finalizer (Steele, Lea & Flood; Vigna's fixed-increment variant).
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}  // namespace detail

/// Counter-based uniform stream: the draw at (seed, index, slot) is a pure
/// function of its key, so any worker or phase reading the same key sees the
/// same value. This is what lets the distributed OFL run and its serial
/// replay consume identical randomness per data point.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t bits(std::uint64_t index, std::uint64_t slot) const {
    using detail::kGolden;
    using detail::mix64;
    std::uint64_t h = mix64(seed_ ^ kGolden);
    h = mix64(h + kGolden * (index + 1));
    h = mix64(h + kGolden * (slot + 1));
    return h;
  }

  /// Uniform double in [0, 1).
  double uniform(std::uint64_t index, std::uint64_t slot) const {
    return static_cast<double>(bits(index, slot) >> 11) * 0x1.0p-53;
  }

  /// Independent stream derived from this one; used to keep the three data
  /// generators (and their internal fields) on non-overlapping key spaces.
  UniformStream substream(std::uint64_t tag) const {
    return UniformStream(detail::mix64(seed_ ^ detail::mix64(tag ^ detail::kGolden)));
  }

 private:
  std::uint64_t seed_;
};

/// Standard normal via Box-Muller; consumes uniform slots 2*slot and 2*slot+1.
inline double gaussian(const UniformStream& s, std::uint64_t index, std::uint64_t slot) {
  const double u1 = s.uniform(index, 2 * slot);
  const double u2 = s.uniform(index, 2 * slot + 1);
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(2.0 * M_PI * u2);
}

/// Beta(1, theta) by inverse CDF: F(x) = 1 - (1-x)^theta.
inline double beta_one_theta(double u, double theta) {
  return 1.0 - std::pow(1.0 - u, 1.0 / theta);
}

}  // namespace occ
