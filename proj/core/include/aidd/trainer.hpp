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
// Optimization loop: random crops from the token corpus, the score-entropy
// objective, and decoupled-weight-decay Adam updates. Every random draw is
// derived from (seed, purpose, step, index), so the parameter trajectory is
// a pure function of (seed, config, corpus) and resuming from a checkpoint
// continues it bit-exactly for any thread count.

#ifndef AIDD_TRAINER_HPP
#define AIDD_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aidd/rng.hpp"
#include "aidd/schedule.hpp"
#include "aidd/score_net.hpp"
#include "aidd/token_codec.hpp"

namespace aidd {

struct TrainConfig {
  int batch_size = 16;
  int sequence_length = 256;
  double learning_rate = 3e-4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t warmup_steps = 1000;
  std::int64_t total_steps = 10000;
  std::int64_t checkpoint_interval = 1000;
  std::uint64_t seed = 0;
  bool loop_pad = false;          // pad short sequences by looping them
  bool span_corruption = false;   // mask one contiguous span instead of i.i.d.
  int time_samples = 1;
  int threads = 1;

  void validate() const;
};

struct TrainState {
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  NetParams m;       // first-moment accumulator, shaped like the parameters
  NetParams v;       // second-moment accumulator
  double loss_ema = 0.0;
  bool loss_ema_init = false;
};

// Fixed-length crop batches. Sequences shorter than the crop are rejected
// unless loop_pad is set. Draws are taken from rng.child("batch", step).
class BatchSampler {
 public:
  BatchSampler(std::vector<TokenSequence> corpus, const TrainConfig& config);

  // batch_size crops for one step, each sequence_length tokens.
  std::vector<TokenSequence> sample(std::uint64_t master_seed,
                                    std::int64_t step) const;

  int vocab_size() const noexcept { return vocab_size_; }

 private:
  std::vector<TokenSequence> corpus_;
  TrainConfig config_;
  int vocab_size_ = 0;
};

struct StepResult {
  double loss = 0.0;
  std::vector<double> time_samples;
};

// One optimizer step: per-sequence losses and gradients (accumulated in
// sequence order regardless of thread count), then an AdamW update with
// linear warmup. Raises NumericalFailure with the offending t draws if the
// loss turns non-finite.
StepResult train_step(ScoreNet& net, TrainState& state,
                      const std::vector<TokenSequence>& batch,
                      const NoiseSchedule& schedule, const TrainConfig& config);

// Trainer checkpoint: magic "AIDT" wrapping the optimizer state, the noise
// schedule, and an embedded model section. resume()+run reproduces the
// uninterrupted trajectory bit-exactly.
void save_train_checkpoint(const std::string& path, const ScoreNet& net,
                           const TrainState& state, const TrainConfig& config,
                           const NoiseSchedule& schedule);

struct ResumedTraining {
  ScoreNet net;
  TrainState state;
  TrainConfig config;
  NoiseSchedule schedule;
};
ResumedTraining resume_train_checkpoint(const std::string& path);

struct TrainLoopHooks {
  // Called every `metrics_interval` steps with (step, loss EMA).
  std::function<void(std::int64_t, double)> on_metrics;
  std::function<void(std::int64_t)> on_checkpoint;
};

// Runs steps [state.step, config.total_steps). EMA decay 0.99, metrics every
// 50 steps, checkpoints every checkpoint_interval steps via the hooks.
void train_loop(ScoreNet& net, TrainState& state, const BatchSampler& sampler,
                const NoiseSchedule& schedule, const TrainConfig& config,
                const TrainLoopHooks& hooks);

}  // namespace aidd

#endif  // AIDD_TRAINER_HPP
