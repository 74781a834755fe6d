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
// Absorbing continuous-time Markov chain over token states {0..N-1, MASK}.
// The generator Q acts column-wise (column = source state): each clean token
// flows into MASK at unit rate, MASK is absorbing, and the time-dependent
// rate is sigma(t) * Q. The marginal law of one position therefore stays on
// {x0, MASK} with P(stay) = survival(t).

#ifndef AIDD_TRANSITION_HPP
#define AIDD_TRANSITION_HPP

#include <vector>

#include "aidd/rng.hpp"
#include "aidd/schedule.hpp"
#include "aidd/score_grid.hpp"
#include "aidd/token_codec.hpp"

namespace aidd {

class TransitionModel {
 public:
  explicit TransitionModel(int vocab_size);

  int vocab_size() const noexcept { return vocab_size_; }
  int num_states() const noexcept { return vocab_size_ + 1; }
  TokenId mask_id() const noexcept { return vocab_size_; }

  // Entry Q(target, source) of the base generator.
  double rate(TokenId target, TokenId source) const;

  // Dense (N+1) x (N+1) generator, row-major, rows = target states. Intended
  // for small-N oracle checks.
  std::vector<double> dense_generator() const;

 private:
  int vocab_size_;
};

struct MarginalDistribution {
  double stay = 0.0;  // P(x_t == x0)
  double mask = 0.0;  // P(x_t == MASK)
};

// Closed-form solution of the forward equation for one position.
MarginalDistribution forward_marginal(TokenId x0_token, double t,
                                      const TransitionModel& model,
                                      const NoiseSchedule& schedule);

// Samples x_t ~ p_{t|0}(. | x0): each position is masked independently with
// probability 1 - survival(t). One rng draw is consumed per position.
TokenSequence corrupt(const TokenSequence& x0, double t,
                      const NoiseSchedule& schedule, RngStream& rng);

// Masks a single contiguous run of round((1 - survival(t)) * len) positions
// at a uniformly random start. Optional training mode; the masked fraction
// matches corrupt() in expectation but positions are span-localized.
TokenSequence corrupt_span(const TokenSequence& x0, double t,
                           const NoiseSchedule& schedule, RngStream& rng);

// Exact conditional concrete score for a (x0, x_t) pair: ratios
// p_{t|0}(y | x0) / p_{t|0}(x_t | x0) over single-position changes y.
// At a masked position the only positive entry is toward x0[i] with value
// survival/(1-survival); at a clean position the only positive entry is
// toward MASK with value (1-survival)/survival. Requires t >= kTimeFloor.
ScoreGrid true_concrete_score(const TokenSequence& x_t, const TokenSequence& x0,
                              double t, const NoiseSchedule& schedule);

}  // namespace aidd

#endif  // AIDD_TRANSITION_HPP
