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
// Euler discretization of the reverse-time chain. Under the absorbing
// forward process the reverse rate out of a masked position toward clean
// token y is sigma(t) * s(x, t)_y, and clean positions have zero outflow, so
// one Euler step unmasks each masked position independently with probability
// sigma(t) * dt * sum_y s_y (capped) and never touches clean positions.

#ifndef AIDD_REVERSE_HPP
#define AIDD_REVERSE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "aidd/rng.hpp"
#include "aidd/schedule.hpp"
#include "aidd/score_grid.hpp"
#include "aidd/token_codec.hpp"
#include "aidd/transition.hpp"

namespace aidd {

// Positions marked true are clamped: the sampler never alters them.
using ClampMask = std::vector<std::uint8_t>;

// Euler kernel for one masked position: out[c] = sigma_dt * s_c for clean
// candidates, out[vocab] = stay probability. Jump mass above 1 - 1e-6 is
// rescaled onto the cap; returns true when the cap bound. The entries always
// sum to 1.
bool reverse_kernel_row(const float* scores, int vocab, double sigma_dt,
                        double* out);

// One Euler step from time t to t - dt. Per-position jump probabilities are
// capped at 1 - 1e-6 and renormalized; StepTooLarge is raised when the cap
// binds for more than 1% of the sequence positions. One uniform draw is
// consumed per unclamped masked position.
TokenSequence reverse_step(const TokenSequence& x_t, double t, double dt,
                           const ScoreGrid& score, const TransitionModel& model,
                           const NoiseSchedule& schedule, RngStream& rng,
                           const ClampMask* clamp = nullptr);

// Runs `steps` Euler steps on the uniform grid from T down to the time
// floor, evaluating score_fn at each grid time, then replaces any residual
// MASK with its argmax-scored clean candidate. The result contains no MASK.
TokenSequence sample_reverse(const TokenSequence& x_T,
                             ScoreFunction& score_fn,
                             const NoiseSchedule& schedule, int steps,
                             RngStream& rng, const ClampMask* clamp = nullptr);

}  // namespace aidd

#endif  // AIDD_REVERSE_HPP
