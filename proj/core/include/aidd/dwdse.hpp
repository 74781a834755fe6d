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
// Diffusion-weighted denoising score entropy. For the absorbing chain the
// only transitions with positive weight lead from a clean token into MASK,
// so the objective reduces to a sum over masked positions i of
//
//   sigma(t) * sum_c [ s(i,c) - a * log s(i, x0_i) + a log a - a ],
//
// where c ranges over clean candidates and a = survival/(1-survival) is the
// exact ratio toward the clean token. The per-position integrand is zero
// exactly at s = a (with zero score on wrong candidates) and is strictly
// convex in each score entry, so any perturbation increases it.

#ifndef AIDD_DWDSE_HPP
#define AIDD_DWDSE_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "aidd/errors.hpp"
#include "aidd/rng.hpp"
#include "aidd/schedule.hpp"
#include "aidd/score_grid.hpp"
#include "aidd/token_codec.hpp"
#include "aidd/transition.hpp"

namespace aidd {

// Floor applied inside logarithms of scores. Exact-zero candidate ratios
// contribute nothing because they are multiplied by a = 0.
inline constexpr double kScoreLogFloor = 1e-30;

// Convex regularizer K(a) = a log a - a, with K(0) = 0.
inline double dwdse_regularizer(double a) {
  return a > 0.0 ? a * std::log(a) - a : 0.0;
}

// One masked position's integrand (without the sigma(t) weight):
//   sum_c s_c - a * log(max(s_target, floor)) + K(a).
// `scores` spans the vocab_size + 1 candidate row; the MASK column is
// ignored. Throws InvalidScore on a non-positive clean-candidate score
// unless the matching true ratio is zero.
template <typename S>
double dwdse_position_term(std::span<const S> scores, int vocab_size,
                           TokenId target, double ratio) {
  double sum = 0.0;
  for (int c = 0; c < vocab_size; ++c) {
    const double s = static_cast<double>(scores[static_cast<std::size_t>(c)]);
    if (!(s >= 0.0) || !std::isfinite(s)) {
      raise(errc::invalid_score, "score must be finite and nonnegative");
    }
    if (s == 0.0 && c == target && ratio > 0.0) {
      raise(errc::invalid_score, "zero score on the target candidate");
    }
    sum += s;
  }
  const double s_target =
      static_cast<double>(scores[static_cast<std::size_t>(target)]);
  const double log_term =
      ratio > 0.0 ? ratio * std::log(std::max(s_target, kScoreLogFloor)) : 0.0;
  return sum - log_term + dwdse_regularizer(ratio);
}

// sigma(t)-weighted integrand of the objective at a fixed (x_t, t), summed
// over masked positions. Also emits d(term)/d(scores) into `dscores` when
// non-null (same shape as the score grid; MASK column untouched).
template <typename S>
double dwdse_integrand(const TokenSequence& x0, const TokenSequence& x_t,
                       double t, const ScoreGridT<S>& scores,
                       const NoiseSchedule& schedule,
                       ScoreGridT<S>* dscores = nullptr) {
  const double alpha = schedule.survival(t);
  const double ratio = alpha / (1.0 - alpha);
  const double sigma_t = schedule.sigma(t);
  double acc = 0.0;
  for (std::int64_t i = 0; i < x_t.size(); ++i) {
    if (x_t.ids[static_cast<std::size_t>(i)] != x_t.mask_id()) continue;
    const TokenId target = x0.ids[static_cast<std::size_t>(i)];
    const S* row = scores.row(i);
    acc += sigma_t *
           dwdse_position_term(std::span<const S>(row, scores.cols()),
                               scores.vocab_size, target, ratio);
    if (dscores != nullptr) {
      S* drow = dscores->row(i);
      for (int c = 0; c < scores.vocab_size; ++c) {
        double g = sigma_t;
        if (c == target) {
          const double s = std::max(static_cast<double>(row[c]), kScoreLogFloor);
          g -= sigma_t * ratio / s;
        }
        drow[c] += static_cast<S>(g);
      }
    }
  }
  if (!std::isfinite(acc)) {
    raise(errc::numerical_failure,
          "non-finite loss integrand at t = " + std::to_string(t));
  }
  return acc;
}

struct DwdseResult {
  double value = 0.0;              // per-token Monte-Carlo estimate
  std::int64_t masked_positions = 0;
  std::vector<double> time_samples;
};

// Monte-Carlo estimate of the objective for one clean sequence. Times are
// sampled uniformly on [kTimeFloor, T] (estimator weight T - kTimeFloor),
// x_t ~ p_{t|0}, and the result is normalized per token. Parameter gradients
// of the estimate are pushed through score_fn.accumulate_grad scaled by
// `grad_scale` (pass 0 to skip the backward pass).
template <typename S>
DwdseResult dwdse_loss(const TokenSequence& x0, ScoreFunctionT<S>& score_fn,
                       const NoiseSchedule& schedule,
                       const TransitionModel& model, int time_samples,
                       RngStream& rng, double grad_scale = 0.0,
                       bool span_corruption = false) {
  if (time_samples < 1) {
    raise(errc::invalid_parameter, "time_samples must be >= 1");
  }
  if (score_fn.vocab_size() != x0.vocab_size ||
      model.vocab_size() != x0.vocab_size) {
    raise(errc::invalid_parameter, "vocab size mismatch");
  }
  const double t_lo = NoiseSchedule::kTimeFloor;
  const double t_hi = NoiseSchedule::kHorizon;
  const double weight =
      (t_hi - t_lo) / (static_cast<double>(time_samples) *
                       static_cast<double>(x0.size()));

  DwdseResult result;
  ScoreGridT<S> scores;
  ScoreGridT<S> dscores;
  for (int k = 0; k < time_samples; ++k) {
    const double t = t_lo + (t_hi - t_lo) * rng.uniform();
    result.time_samples.push_back(t);
    const TokenSequence x_t = span_corruption
                                  ? corrupt_span(x0, t, schedule, rng)
                                  : corrupt(x0, t, schedule, rng);
    scores.reset(x_t.size(), x_t.vocab_size);
    score_fn.evaluate(x_t.ids, t, scores);
    const bool want_grad = grad_scale != 0.0;
    if (want_grad) dscores.reset(x_t.size(), x_t.vocab_size);
    const double term = dwdse_integrand(x0, x_t, t, scores, schedule,
                                        want_grad ? &dscores : nullptr);
    result.value += weight * term;
    for (std::int64_t i = 0; i < x_t.size(); ++i) {
      if (x_t.ids[static_cast<std::size_t>(i)] == x_t.mask_id()) {
        result.masked_positions++;
      }
    }
    if (want_grad) {
      const double upstream = grad_scale * weight;
      for (auto& v : dscores.values) v = static_cast<S>(v * upstream);
      score_fn.accumulate_grad(x_t.ids, t, dscores);
    }
  }
  if (!std::isfinite(result.value)) {
    raise(errc::numerical_failure, "non-finite loss estimate");
  }
  return result;
}

}  // namespace aidd

#endif  // AIDD_DWDSE_HPP
