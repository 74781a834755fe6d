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

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "aidd/dwdse.hpp"
#include "aidd/metrics.hpp"
#include "aidd/reverse.hpp"
#include "aidd/score_net.hpp"
#include "aidd/token_codec.hpp"
#include "aidd/trainer.hpp"

namespace {

aidd::Waveform make_tone(double hz, double seconds, int sr = 16000) {
  aidd::Waveform w;
  w.sample_rate = sr;
  const std::int64_t n = static_cast<std::int64_t>(seconds * sr);
  w.samples.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    w.samples[static_cast<std::size_t>(i)] = static_cast<float>(
        0.5 * std::sin(2.0 * std::numbers::pi * hz * i / sr));
  }
  return w;
}

aidd::CodecSpec small_codec() {
  aidd::CodecParams params;
  params.codebook_size = 64;
  std::vector<aidd::Waveform> corpus;
  for (double hz : {220.0, 330.0, 440.0, 660.0}) {
    corpus.push_back(make_tone(hz, 2.0));
  }
  return aidd::train_codebook(corpus, params, 7);
}

void BM_CodecEncode(benchmark::State& state) {
  const aidd::CodecSpec codec = small_codec();
  const aidd::Waveform tone = make_tone(440.0, 4.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aidd::encode(tone, codec));
  }
  state.SetItemsProcessed(state.iterations() * tone.size());
}
BENCHMARK(BM_CodecEncode)->Unit(benchmark::kMillisecond);

void BM_ScoreNetForward(benchmark::State& state) {
  aidd::ModelConfig config;
  config.vocab_size = 256;
  config.dim = 128;
  config.depth = 4;
  config.heads = 4;
  config.context_length = 256;
  aidd::ScoreNet net(config, 1);
  std::vector<std::int32_t> tokens(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tokens[i] = static_cast<std::int32_t>(i % 256);
  }
  aidd::ScoreGrid grid;
  for (auto _ : state) {
    net.evaluate(tokens, 0.5, grid);
    benchmark::DoNotOptimize(grid.values.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreNetForward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  aidd::ModelConfig config;
  config.vocab_size = 16;
  config.dim = 64;
  config.depth = 2;
  config.heads = 4;
  config.context_length = 64;
  aidd::ScoreNet net(config, 1);
  aidd::TrainConfig tc;
  tc.batch_size = 8;
  tc.sequence_length = 32;
  tc.warmup_steps = 10;
  aidd::TrainState ts;
  ts.seed = 3;
  aidd::TokenSequence seq;
  seq.vocab_size = 16;
  seq.token_rate_hz = 62.5;
  for (int i = 0; i < 512; ++i) seq.ids.push_back(i % 16);
  aidd::BatchSampler sampler({seq}, tc);
  const aidd::NoiseSchedule schedule = aidd::NoiseSchedule::log_linear();
  for (auto _ : state) {
    const auto batch = sampler.sample(ts.seed, ts.step);
    benchmark::DoNotOptimize(
        aidd::train_step(net, ts, batch, schedule, tc).loss);
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_ReverseSample(benchmark::State& state) {
  const int vocab = 16;
  class UniformScore : public aidd::ScoreFunction {
   public:
    int vocab_size() const override { return 16; }
    void evaluate(std::span<const std::int32_t> tokens, double t,
                  aidd::ScoreGrid& out) override {
      (void)t;
      out.reset(static_cast<std::int64_t>(tokens.size()), 16);
      std::fill(out.values.begin(), out.values.end(), 0.1f);
    }
  } score;
  aidd::TokenSequence masked;
  masked.vocab_size = vocab;
  masked.token_rate_hz = 62.5;
  masked.ids.assign(64, masked.mask_id());
  const aidd::NoiseSchedule schedule = aidd::NoiseSchedule::log_linear();
  std::uint64_t run = 0;
  for (auto _ : state) {
    aidd::RngStream rng(run++);
    benchmark::DoNotOptimize(
        aidd::sample_reverse(masked, score, schedule, 64, rng));
  }
}
BENCHMARK(BM_ReverseSample)->Unit(benchmark::kMillisecond);

void BM_Lsd(benchmark::State& state) {
  const aidd::Waveform a = make_tone(440.0, 4.0);
  const aidd::Waveform b = make_tone(441.0, 4.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(aidd::lsd(a, b));
  }
}
BENCHMARK(BM_Lsd)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
