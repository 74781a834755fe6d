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

#ifndef AIDD_SCORE_GRID_HPP
#define AIDD_SCORE_GRID_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace aidd {

// Per-position, per-candidate concrete-score values s(x, t)[i, y] for a
// sequence of length len over vocab N. Layout is row-major len x (N + 1);
// column N is the MASK candidate. Entries at y == x_i are defined but unused
// by both the loss and the sampler.
template <typename S>
struct ScoreGridT {
  std::int64_t len = 0;
  int vocab_size = 0;
  std::vector<S> values;  // len x (vocab_size + 1)

  ScoreGridT() = default;
  ScoreGridT(std::int64_t length, int vocab)
      : len(length), vocab_size(vocab),
        values(static_cast<std::size_t>(length) * (vocab + 1), S(0)) {}

  int cols() const noexcept { return vocab_size + 1; }
  void reset(std::int64_t length, int vocab) {
    len = length;
    vocab_size = vocab;
    values.assign(static_cast<std::size_t>(length) * (vocab + 1), S(0));
  }
  S* row(std::int64_t i) {
    return values.data() + static_cast<std::size_t>(i) * cols();
  }
  const S* row(std::int64_t i) const {
    return values.data() + static_cast<std::size_t>(i) * cols();
  }
  S& at(std::int64_t i, int candidate) { return row(i)[candidate]; }
  S at(std::int64_t i, int candidate) const { return row(i)[candidate]; }
};

using ScoreGrid = ScoreGridT<float>;

// A (possibly learnable) concrete-score oracle. evaluate() fills `out` with
// strictly positive scores for every clean-token candidate; analytic
// implementations may also fill the MASK column. accumulate_grad() receives
// d(loss)/d(scores) for the most recent evaluate() on the same (tokens, t)
// and adds parameter gradients; the default is a no-op for parameter-free
// score functions (their gradient set is empty).
template <typename S>
class ScoreFunctionT {
 public:
  virtual ~ScoreFunctionT() = default;
  virtual int vocab_size() const = 0;
  virtual void evaluate(std::span<const std::int32_t> tokens, double t,
                        ScoreGridT<S>& out) = 0;
  virtual void accumulate_grad(std::span<const std::int32_t> tokens, double t,
                               const ScoreGridT<S>& dscores) {
    (void)tokens;
    (void)t;
    (void)dscores;
  }
};

using ScoreFunction = ScoreFunctionT<float>;

}  // namespace aidd

#endif  // AIDD_SCORE_GRID_HPP
