// Copyright 2026 The AIDD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Deterministic, serializable random streams. All project randomness is
// derived from a single master seed via counter-based splitting, so any
// (seed, purpose, counter...) tuple names the same stream on every platform
// and independent streams can be consumed in any order or in parallel.

#ifndef AIDD_RNG_HPP
#define AIDD_RNG_HPP

#include <array>
#include <cstdint>
#include <string_view>

namespace aidd {

// SplitMix64 step; used both as a stream-key hash and to seed xoshiro state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ behind a small sampling API. State is four u64 words and is
// trivially serializable.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) noexcept;

  // Derives an independent child stream from (this stream's key, label,
  // counters). Does not consume from this stream.
  RngStream child(std::string_view label, std::uint64_t counter_a = 0,
                  std::uint64_t counter_b = 0) const noexcept;

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform integer in [0, bound); bound >= 1. Uses rejection sampling.
  std::uint64_t uniform_below(std::uint64_t bound) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  // Standard normal via Box-Muller; caches the second variate.
  double normal() noexcept;

  std::array<std::uint64_t, 6> serialize() const noexcept;
  static RngStream deserialize(const std::array<std::uint64_t, 6>& words) noexcept;

  bool operator==(const RngStream&) const = default;

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t key_ = 0;       // derivation key, remembered for child()
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace aidd

#endif  // AIDD_RNG_HPP
