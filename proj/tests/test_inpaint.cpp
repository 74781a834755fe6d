#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

#include "aidd/errors.hpp"
#include "aidd/inpaint.hpp"
#include "aidd/token_codec.hpp"
#include "oracles.hpp"

using namespace aidd;

namespace {

Waveform make_tone(double hz, double seconds, int sr = 16000, double amp = 0.5) {
  Waveform w;
  w.sample_rate = sr;
  const std::int64_t n = static_cast<std::int64_t>(seconds * sr);
  w.samples.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    w.samples[static_cast<std::size_t>(i)] = static_cast<float>(
        amp * std::sin(2.0 * std::numbers::pi * hz * i / sr));
  }
  return w;
}

CodecSpec tone_codec(int codebook = 4) {
  CodecParams p;
  p.codebook_size = codebook;
  return train_codebook({make_tone(440.0, 3.0), make_tone(880.0, 3.0)}, p, 7);
}

GapSpec spec_of(std::vector<std::array<std::int64_t, 2>> gaps, int sr = 16000) {
  GapSpec s;
  s.sample_rate = sr;
  s.gaps = std::move(gaps);
  return s;
}

}  // namespace

TEST_CASE("gap validation") {
  CHECK_NOTHROW(spec_of({{0, 5}, {10, 20}}).validate(100));
  CHECK_THROWS_AS(spec_of({{-1, 5}}).validate(100), Error);
  CHECK_THROWS_AS(spec_of({{0, 101}}).validate(100), Error);
  CHECK_THROWS_AS(spec_of({{5, 5}}).validate(100), Error);
  CHECK_THROWS_AS(spec_of({{10, 20}, {15, 30}}).validate(100), Error);
  CHECK_THROWS_AS(spec_of({{10, 20}, {0, 5}}).validate(100), Error);
  try {
    spec_of({{0, 200}}).validate(100);
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_gap);
  }
}

TEST_CASE("gap spec json round trip") {
  const GapSpec spec = spec_of({{100, 4900}, {30000, 34800}});
  const GapSpec back = GapSpec::from_json(spec.to_json());
  CHECK(back.sample_rate == spec.sample_rate);
  CHECK(back.gaps == spec.gaps);
  CHECK_THROWS_AS(GapSpec::from_json("{not json"), Error);
  CHECK_THROWS_AS(GapSpec::from_json(R"({"sample_rate": 16000})"), Error);
  CHECK_THROWS_AS(GapSpec::from_json(R"({"sample_rate": 16000, "gaps": [[1]]})"),
                  Error);
}

TEST_CASE("projecting gaps onto token frames") {
  CodecSpec codec = tone_codec();

  SUBCASE("hop equal to frame maps an aligned gap to one token") {
    CodecSpec aligned = codec;
    aligned.params.hop_length = aligned.params.frame_length;
    const auto tokens =
        project_gaps(spec_of({{0, 1024}}), aligned, 8 * 1024);
    CHECK(tokens == std::vector<std::int64_t>{0});
  }

  SUBCASE("100 ms gap matches the interval-intersection oracle") {
    const std::int64_t len = 4 * 16000;
    const std::int64_t g0 = 20000;
    const std::int64_t g1 = g0 + 1600;  // 100 ms at 16 kHz
    const auto tokens = project_gaps(spec_of({{g0, g1}}), codec, len);

    // Oracle: brute-force frame intersection.
    std::vector<std::int64_t> expected;
    const std::int64_t n_tokens = (len - 1024) / 256 + 1;
    for (std::int64_t i = 0; i < n_tokens; ++i) {
      const std::int64_t f0 = i * 256;
      const std::int64_t f1 = f0 + 1024;
      if (f0 < g1 && g0 < f1) expected.push_back(i);
    }
    CHECK(tokens == expected);
    // (1600 + 1024 - 256) / 256 rounded up frames intersect the gap.
    CHECK(static_cast<std::int64_t>(tokens.size()) == (1600 + 1024 - 256 + 255) / 256);
  }

  SUBCASE("empty gap list gives an empty set") {
    CHECK(project_gaps(spec_of({}), codec, 16000).empty());
  }

  SUBCASE("out-of-range gap is rejected") {
    CHECK_THROWS_AS(project_gaps(spec_of({{0, 20000}}), codec, 16000), Error);
  }
}

TEST_CASE("synthetic corruption grid") {
  SUBCASE("4 gaps of 300 ms on a 4.17 s clip") {
    const Waveform w = make_tone(440.0, 4.17);
    const std::int64_t len = w.size();
    const auto result = make_corrupted(w, 300.0, 4);
    CHECK(result.gaps.gaps.size() == 4);
    std::int64_t silenced = 0;
    for (int k = 0; k < 4; ++k) {
      const auto& g = result.gaps.gaps[static_cast<std::size_t>(k)];
      CHECK(g[1] - g[0] == 4800);
      // Gap k of n starts at (k+1) L/(n+1) - gap/2.
      const std::int64_t expected_start =
          std::llround((k + 1) * static_cast<double>(len) / 5.0) - 2400;
      CHECK(g[0] == expected_start);
      silenced += g[1] - g[0];
      for (std::int64_t i = g[0]; i < g[1]; ++i) {
        CHECK(result.corrupted.samples[static_cast<std::size_t>(i)] == 0.0f);
      }
    }
    CHECK(silenced == 4 * 4800);
    // Samples outside the gaps are untouched.
    std::int64_t inspected = 0;
    for (std::int64_t i = 0; i < len; ++i) {
      bool in_gap = false;
      for (const auto& g : result.gaps.gaps) {
        in_gap |= i >= g[0] && i < g[1];
      }
      if (!in_gap) {
        CHECK(result.corrupted.samples[static_cast<std::size_t>(i)] ==
              w.samples[static_cast<std::size_t>(i)]);
        ++inspected;
      }
    }
    CHECK(inspected == len - 4 * 4800);
  }

  SUBCASE("zero gaps keep the waveform intact") {
    const Waveform w = make_tone(440.0, 1.0);
    const auto result = make_corrupted(w, 300.0, 0);
    CHECK(result.corrupted.samples == w.samples);
    CHECK(result.gaps.gaps.empty());
  }

  SUBCASE("gap longer than a quarter of the clip is rejected") {
    const Waveform w = make_tone(440.0, 1.0);
    try {
      make_corrupted(w, 300.0, 2);  // 4800 > 16000 / 4
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::invalid_gap);
    }
  }
}

TEST_CASE("crossfade splicing") {
  const int sr = 16000;
  const int fade = 160;  // 10 ms

  SUBCASE("boundary sample blends at exactly one half") {
    Waveform out;
    out.sample_rate = sr;
    out.samples.assign(2000, 1.0f);
    std::vector<float> generated(2000, 0.0f);
    splice_gap(out, generated, 0, {800, 1200}, fade);
    // The generated weight at each gap boundary sample is exactly 1/2.
    CHECK(out.samples[800] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.samples[1200] == doctest::Approx(0.5).epsilon(1e-12));
    // Pure generated in the interior, pure context outside the ramps.
    CHECK(out.samples[1000] == 0.0f);
    CHECK(out.samples[800 - fade / 2] == 1.0f);
    CHECK(out.samples[800 + fade / 2] == 0.0f);
  }

  SUBCASE("samples outside gap +- half fade are bit-identical") {
    RngStream rng(3);
    Waveform input;
    input.sample_rate = sr;
    input.samples.resize(8000);
    for (auto& s : input.samples) s = static_cast<float>(rng.normal() * 0.1);
    std::vector<float> generated(8000);
    for (auto& s : generated) s = static_cast<float>(rng.normal() * 0.1);

    for (int trial = 0; trial < 200; ++trial) {
      const std::int64_t g0 = 200 + static_cast<std::int64_t>(rng.uniform_below(6000));
      const std::int64_t g1 = g0 + 1 + static_cast<std::int64_t>(rng.uniform_below(1500));
      if (g1 + fade > 8000) continue;
      Waveform out = input;
      splice_gap(out, generated, 0, {g0, g1}, fade);
      for (std::int64_t i = 0; i < 8000; ++i) {
        if (i < g0 - fade / 2 || i >= g1 + fade / 2) {
          REQUIRE(out.samples[static_cast<std::size_t>(i)] ==
                  input.samples[static_cast<std::size_t>(i)]);
        } else {
          // Convex combination never overshoots either source.
          const float lo = std::min(input.samples[static_cast<std::size_t>(i)],
                                    generated[static_cast<std::size_t>(i)]);
          const float hi = std::max(input.samples[static_cast<std::size_t>(i)],
                                    generated[static_cast<std::size_t>(i)]);
          REQUIRE(out.samples[static_cast<std::size_t>(i)] >= lo - 1e-6f);
          REQUIRE(out.samples[static_cast<std::size_t>(i)] <= hi + 1e-6f);
        }
      }
    }
  }

  SUBCASE("generated audio must cover the blend region") {
    Waveform out;
    out.sample_rate = sr;
    out.samples.assign(2000, 1.0f);
    std::vector<float> generated(100, 0.0f);
    CHECK_THROWS_AS(splice_gap(out, generated, 0, {800, 1200}, fade), Error);
  }
}

TEST_CASE("inpaint pipeline") {
  const CodecSpec codec = tone_codec();
  ModelConfig mc;
  mc.vocab_size = codec.params.codebook_size;
  mc.dim = 32;
  mc.depth = 1;
  mc.heads = 2;
  mc.context_length = 64;
  ScoreNet net(mc, 5);
  // An untrained net emits unit scores, far above the exact terminal score
  // magnitude; the constant schedule keeps sigma(t) dt sum(s) below the jump
  // cap so the pipeline contracts can be exercised without training.
  const NoiseSchedule schedule = NoiseSchedule::constant(std::log(1000.0));
  InpaintParams params;
  params.steps = 64;
  params.context_tokens = 64;

  SUBCASE("empty gap list returns the input bit-exactly") {
    const Waveform w = make_tone(440.0, 1.0);
    const InpaintResult result =
        inpaint(w, spec_of({}), codec, net, schedule, params, 1);
    CHECK(result.output.samples == w.samples);
  }

  SUBCASE("context samples outside gap regions survive bit-exactly") {
    Waveform w = make_tone(440.0, 2.0);
    const auto corrupted = make_corrupted(w, 100.0, 2);
    const InpaintResult result = inpaint(corrupted.corrupted, corrupted.gaps,
                                         codec, net, schedule, params, 9);
    CHECK(result.output.size() == w.size());
    const int half_fade = 160 / 2;
    for (std::int64_t i = 0; i < w.size(); ++i) {
      bool near_gap = false;
      for (const auto& g : corrupted.gaps.gaps) {
        near_gap |= i >= g[0] - half_fade && i < g[1] + half_fade;
      }
      if (!near_gap) {
        REQUIRE(result.output.samples[static_cast<std::size_t>(i)] ==
                corrupted.corrupted.samples[static_cast<std::size_t>(i)]);
      }
    }
    CHECK_FALSE(result.tokens.has_mask());
    CHECK(result.gap_info.size() == 2);

    // Clamped (context) tokens match the encoder's output exactly.
    const TokenSequence encoded = encode(corrupted.corrupted, codec);
    const auto masked = project_gaps(corrupted.gaps, codec, w.size());
    std::size_t m = 0;
    for (std::int64_t i = 0; i < encoded.size(); ++i) {
      if (m < masked.size() && masked[m] == i) {
        ++m;
        continue;
      }
      REQUIRE(result.tokens.ids[static_cast<std::size_t>(i)] ==
              encoded.ids[static_cast<std::size_t>(i)]);
    }
  }

  SUBCASE("fixed seed reproduces the output bit-exactly") {
    Waveform w = make_tone(660.0, 1.5);
    const auto corrupted = make_corrupted(w, 80.0, 1);
    const InpaintResult a = inpaint(corrupted.corrupted, corrupted.gaps, codec,
                                    net, schedule, params, 77);
    const InpaintResult b = inpaint(corrupted.corrupted, corrupted.gaps, codec,
                                    net, schedule, params, 77);
    CHECK(a.output.samples == b.output.samples);
    CHECK(a.tokens.ids == b.tokens.ids);
  }

  SUBCASE("masked run wider than the context window is rejected") {
    InpaintParams tight = params;
    tight.context_tokens = 8;
    Waveform w = make_tone(440.0, 2.0);
    const auto corrupted = make_corrupted(w, 300.0, 1);  // ~22 tokens
    try {
      inpaint(corrupted.corrupted, corrupted.gaps, codec, net, schedule, tight, 1);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::gap_too_wide);
    }
  }

  SUBCASE("model with non-finite weights is rejected") {
    ScoreNet broken(mc, 6);
    broken.params().embedding(0, 0) = std::nanf("");
    Waveform w = make_tone(440.0, 2.0);
    const auto corrupted = make_corrupted(w, 100.0, 1);
    try {
      inpaint(corrupted.corrupted, corrupted.gaps, codec, broken, schedule,
              params, 1);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::invalid_model);
    }
  }

  SUBCASE("vocab mismatch between codec and model is rejected") {
    ModelConfig wrong = mc;
    wrong.vocab_size = 7;
    ScoreNet mismatched(wrong, 2);
    Waveform w = make_tone(440.0, 2.0);
    const auto corrupted = make_corrupted(w, 100.0, 1);
    CHECK_THROWS_AS(inpaint(corrupted.corrupted, corrupted.gaps, codec,
                            mismatched, schedule, params, 1),
                    Error);
  }
}
