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

#include "aidd/reverse.hpp"

#include <cmath>

#include "aidd/errors.hpp"

namespace aidd {

namespace {
constexpr double kJumpCap = 1.0 - 1e-6;
constexpr double kCapBindLimit = 0.01;  // fraction of sequence positions
}  // namespace

bool reverse_kernel_row(const float* scores, int vocab, double sigma_dt,
                        double* out) {
  double total = 0.0;
  for (int c = 0; c < vocab; ++c) {
    const double s = static_cast<double>(scores[c]);
    if (!(s >= 0.0) || !std::isfinite(s)) {
      raise(errc::invalid_score, "score must be finite and nonnegative");
    }
    out[c] = sigma_dt * s;
    total += out[c];
  }
  const bool capped = total > kJumpCap;
  if (capped) {
    const double scale = kJumpCap / total;
    for (int c = 0; c < vocab; ++c) out[c] *= scale;
    total = kJumpCap;
  }
  out[vocab] = 1.0 - total;
  return capped;
}

TokenSequence reverse_step(const TokenSequence& x_t, double t, double dt,
                           const ScoreGrid& score, const TransitionModel& model,
                           const NoiseSchedule& schedule, RngStream& rng,
                           const ClampMask* clamp) {
  if (!(dt > 0.0)) raise(errc::invalid_time, "dt must be positive");
  if (t - dt < NoiseSchedule::kTimeFloor - 1e-12) {
    raise(errc::invalid_time, "step would cross the time floor");
  }
  if (score.len != x_t.size() || score.vocab_size != x_t.vocab_size) {
    raise(errc::invalid_score, "score grid shape mismatch");
  }
  if (clamp != nullptr &&
      static_cast<std::int64_t>(clamp->size()) != x_t.size()) {
    raise(errc::invalid_parameter, "clamp mask length mismatch");
  }
  if (model.vocab_size() != x_t.vocab_size) {
    raise(errc::invalid_parameter, "transition model vocab mismatch");
  }

  const double sigma_dt = schedule.sigma(t) * dt;
  const int vocab = x_t.vocab_size;
  TokenSequence out = x_t;
  std::int64_t capped = 0;
  std::vector<double> probs(static_cast<std::size_t>(vocab) + 1);

  for (std::int64_t i = 0; i < x_t.size(); ++i) {
    if (clamp != nullptr && (*clamp)[static_cast<std::size_t>(i)]) continue;
    // Clean positions have zero reverse outflow under the absorbing design.
    if (x_t.ids[static_cast<std::size_t>(i)] != x_t.mask_id()) continue;

    if (reverse_kernel_row(score.row(i), vocab, sigma_dt, probs.data())) {
      ++capped;
    }
    const double jump_prob = 1.0 - probs[static_cast<std::size_t>(vocab)];
    const double u = rng.uniform();
    if (u < jump_prob) {
      // Inverse-CDF walk over the candidate masses.
      double cum = 0.0;
      TokenId pick = vocab - 1;
      for (int c = 0; c < vocab; ++c) {
        cum += probs[static_cast<std::size_t>(c)];
        if (cum > u) {
          pick = c;
          break;
        }
      }
      out.ids[static_cast<std::size_t>(i)] = pick;
    }
  }

  if (static_cast<double>(capped) >
      kCapBindLimit * static_cast<double>(x_t.size())) {
    raise(errc::step_too_large,
          "jump-probability cap bound at " + std::to_string(capped) + " of " +
              std::to_string(x_t.size()) + " positions; reduce dt");
  }
  return out;
}

TokenSequence sample_reverse(const TokenSequence& x_T, ScoreFunction& score_fn,
                             const NoiseSchedule& schedule, int steps,
                             RngStream& rng, const ClampMask* clamp) {
  if (steps < 1) raise(errc::invalid_parameter, "steps must be >= 1");
  if (score_fn.vocab_size() != x_T.vocab_size) {
    raise(errc::invalid_parameter, "score function vocab mismatch");
  }
  const double t_hi = NoiseSchedule::kHorizon;
  const double t_lo = NoiseSchedule::kTimeFloor;
  const double dt = (t_hi - t_lo) / steps;
  const TransitionModel model(x_T.vocab_size);

  TokenSequence x = x_T;
  ScoreGrid score;
  for (int k = 0; k < steps; ++k) {
    if (!x.has_mask()) break;
    const double t = t_hi - k * dt;
    score.reset(x.size(), x.vocab_size);
    score_fn.evaluate(x.ids, t, score);
    x = reverse_step(x, t, dt, score, model, schedule, rng, clamp);
  }

  // Final denoising rule: any residual MASK takes its argmax-scored clean
  // candidate at the time floor.
  if (x.has_mask()) {
    score.reset(x.size(), x.vocab_size);
    score_fn.evaluate(x.ids, t_lo, score);
    for (std::int64_t i = 0; i < x.size(); ++i) {
      if (x.ids[static_cast<std::size_t>(i)] != x.mask_id()) continue;
      if (clamp != nullptr && (*clamp)[static_cast<std::size_t>(i)]) continue;
      const float* row = score.row(i);
      TokenId best = 0;
      float best_s = row[0];
      for (int c = 1; c < x.vocab_size; ++c) {
        if (row[c] > best_s) {
          best_s = row[c];
          best = c;
        }
      }
      x.ids[static_cast<std::size_t>(i)] = best;
    }
  }
  return x;
}

}  // namespace aidd
