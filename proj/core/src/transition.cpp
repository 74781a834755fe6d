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

#include "aidd/transition.hpp"

#include <algorithm>
#include <cmath>

#include "aidd/errors.hpp"

namespace aidd {

TransitionModel::TransitionModel(int vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size < 1) {
    raise(errc::invalid_parameter, "vocab_size must be >= 1");
  }
}

double TransitionModel::rate(TokenId target, TokenId source) const {
  if (source == mask_id()) return 0.0;           // absorbing column
  if (target == mask_id()) return 1.0;           // clean -> MASK
  if (target == source) return -1.0;             // diagonal
  return 0.0;                                    // no clean <-> clean moves
}

std::vector<double> TransitionModel::dense_generator() const {
  const int n = num_states();
  std::vector<double> q(static_cast<std::size_t>(n) * n, 0.0);
  for (TokenId src = 0; src < n; ++src) {
    for (TokenId dst = 0; dst < n; ++dst) {
      q[static_cast<std::size_t>(dst) * n + src] = rate(dst, src);
    }
  }
  return q;
}

MarginalDistribution forward_marginal(TokenId x0_token, double t,
                                      const TransitionModel& model,
                                      const NoiseSchedule& schedule) {
  if (x0_token < 0 || x0_token >= model.mask_id()) {
    raise(errc::invalid_clean_token,
          "x0 must be a clean token in {0.." +
              std::to_string(model.vocab_size() - 1) + "}");
  }
  const double alpha = schedule.survival(t);
  return {alpha, 1.0 - alpha};
}

TokenSequence corrupt(const TokenSequence& x0, double t,
                      const NoiseSchedule& schedule, RngStream& rng) {
  x0.validate();
  if (x0.has_mask()) {
    raise(errc::invalid_clean_token, "corrupt() requires a MASK-free input");
  }
  const double mask_prob = 1.0 - schedule.survival(t);
  TokenSequence x_t = x0;
  for (auto& id : x_t.ids) {
    if (rng.bernoulli(mask_prob)) id = x0.mask_id();
  }
  return x_t;
}

TokenSequence corrupt_span(const TokenSequence& x0, double t,
                           const NoiseSchedule& schedule, RngStream& rng) {
  x0.validate();
  if (x0.has_mask()) {
    raise(errc::invalid_clean_token, "corrupt_span() requires a MASK-free input");
  }
  const double mask_prob = 1.0 - schedule.survival(t);
  const std::int64_t len = x0.size();
  const std::int64_t span = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(std::llround(mask_prob * static_cast<double>(len))),
      0, len);
  TokenSequence x_t = x0;
  if (span == 0) return x_t;
  const std::int64_t start = static_cast<std::int64_t>(
      rng.uniform_below(static_cast<std::uint64_t>(len - span + 1)));
  for (std::int64_t i = start; i < start + span; ++i) {
    x_t.ids[static_cast<std::size_t>(i)] = x0.mask_id();
  }
  return x_t;
}

ScoreGrid true_concrete_score(const TokenSequence& x_t, const TokenSequence& x0,
                              double t, const NoiseSchedule& schedule) {
  x0.validate();
  x_t.validate();
  if (x0.has_mask()) {
    raise(errc::invalid_clean_token, "x0 must be MASK-free");
  }
  if (x_t.size() != x0.size() || x_t.vocab_size != x0.vocab_size) {
    raise(errc::inconsistent_corruption, "x_t and x0 shapes differ");
  }
  if (t < NoiseSchedule::kTimeFloor) {
    raise(errc::invalid_time, "t below the sampling floor");
  }
  const double alpha = schedule.survival(t);
  const double stay_over_mask = alpha / (1.0 - alpha);
  const double mask_over_stay = (1.0 - alpha) / alpha;

  ScoreGrid grid(x_t.size(), x_t.vocab_size);
  for (std::int64_t i = 0; i < x_t.size(); ++i) {
    const TokenId cur = x_t.ids[static_cast<std::size_t>(i)];
    const TokenId clean = x0.ids[static_cast<std::size_t>(i)];
    if (cur == x_t.mask_id()) {
      grid.at(i, clean) = static_cast<float>(stay_over_mask);
    } else if (cur == clean) {
      grid.at(i, x_t.vocab_size) = static_cast<float>(mask_over_stay);
    } else {
      raise(errc::inconsistent_corruption,
            "x_t disagrees with x0 at unmasked position " + std::to_string(i));
    }
  }
  return grid;
}

}  // namespace aidd
