// Copyright 2026 The starbell Authors
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

#include <cstdint>
#include <limits>

namespace starbell {

namespace detail {

// Finalizer from splitmix64 (Steele, Lea & Flood). Bijective on 64 bits.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Counter-based random stream keyed by (seed, lane0, lane1, lane2).
///
/// Streams with distinct keys are independent; draws within a stream are the
/// splitmix64 sequence. Because the state is just (key, counter), any number
/// of streams can be created on the fly and the whole simulation is
/// reproducible under arbitrary parallel scheduling.
class SplitStream {
 public:
  SplitStream(std::uint64_t seed, std::uint64_t lane0, std::uint64_t lane1,
              std::uint64_t lane2)
      : key_(derive_key(seed, lane0, lane1, lane2)) {}

  std::uint64_t next_u64() {
    return detail::mix64(key_ + (counter_++) * detail::kGamma);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

  /// Fair bit.
  int next_bit() { return static_cast<int>(next_u64() >> 63); }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return next_u64(); }

 private:
  static constexpr std::uint64_t derive_key(std::uint64_t seed,
                                            std::uint64_t lane0,
                                            std::uint64_t lane1,
                                            std::uint64_t lane2) {
    std::uint64_t k = detail::mix64(seed + detail::kGamma);
    k = detail::mix64(k ^ (lane0 + 0xd1b54a32d192ed03ULL));
    k = detail::mix64(k ^ (lane1 + 0x8cb92ba72f3d8dd7ULL));
    k = detail::mix64(k ^ (lane2 + 0xaef17502108ef2d9ULL));
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace starbell
