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

#include "aidd/rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

namespace aidd {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) noexcept : key_(seed) {
  std::uint64_t sm = seed;
  for (auto& w : state_) w = splitmix64(sm);
}

RngStream RngStream::child(std::string_view label, std::uint64_t counter_a,
                           std::uint64_t counter_b) const noexcept {
  std::uint64_t sm = key_;
  sm ^= rotl(fnv1a(label), 17);
  splitmix64(sm);
  sm ^= rotl(counter_a, 29);
  splitmix64(sm);
  sm ^= rotl(counter_b, 43);
  return RngStream(splitmix64(sm));
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_below(std::uint64_t bound) noexcept {
  if (bound <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double RngStream::normal() noexcept {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

std::array<std::uint64_t, 6> RngStream::serialize() const noexcept {
  // The Box-Muller cache is preserved so that resume continues the exact
  // variate sequence.
  std::uint64_t cache_bits;
  static_assert(sizeof(cache_bits) == sizeof(cached_normal_));
  std::memcpy(&cache_bits, &cached_normal_, sizeof(cache_bits));
  return {state_[0], state_[1], state_[2], state_[3], key_,
          has_cached_normal_ ? cache_bits : 0};
}

RngStream RngStream::deserialize(const std::array<std::uint64_t, 6>& words) noexcept {
  RngStream r;
  r.state_ = {words[0], words[1], words[2], words[3]};
  r.key_ = words[4];
  r.has_cached_normal_ = words[5] != 0;
  if (r.has_cached_normal_) {
    std::memcpy(&r.cached_normal_, &words[5], sizeof(r.cached_normal_));
  }
  return r;
}

}  // namespace aidd
