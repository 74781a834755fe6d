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

#include "aidd/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "aidd/errors.hpp"

namespace aidd {

void GapSpec::validate(std::int64_t waveform_len) const {
  if (sample_rate <= 0) raise(errc::invalid_gap, "sample_rate must be positive");
  std::int64_t prev_end = 0;
  for (const auto& g : gaps) {
    if (g[0] < 0 || g[1] > waveform_len || g[0] >= g[1]) {
      raise(errc::invalid_gap,
            "gap [" + std::to_string(g[0]) + ", " + std::to_string(g[1]) +
                ") outside waveform of " + std::to_string(waveform_len) +
                " samples");
    }
    if (g[0] < prev_end) {
      raise(errc::invalid_gap, "gaps must be sorted and non-overlapping");
    }
    prev_end = g[1];
  }
}

std::string GapSpec::to_json() const {
  nlohmann::json j;
  j["sample_rate"] = sample_rate;
  j["gaps"] = nlohmann::json::array();
  for (const auto& g : gaps) {
    j["gaps"].push_back({g[0], g[1]});
  }
  return j.dump(2) + "\n";
}

GapSpec GapSpec::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_gap, std::string("bad gap JSON: ") + e.what());
  }
  GapSpec spec;
  try {
    spec.sample_rate = j.at("sample_rate").get<int>();
    for (const auto& g : j.at("gaps")) {
      if (!g.is_array() || g.size() != 2) {
        raise(errc::invalid_gap, "each gap must be a [start, end] pair");
      }
      spec.gaps.push_back({g[0].get<std::int64_t>(), g[1].get<std::int64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    raise(errc::invalid_gap, std::string("bad gap JSON: ") + e.what());
  }
  return spec;
}

void save_gapspec(const GapSpec& spec, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) raise(errc::io_error, "cannot write gap spec: " + path);
  os << spec.to_json();
}

GapSpec load_gapspec(const std::string& path) {
  std::ifstream is(path);
  if (!is) raise(errc::io_error, "cannot open gap spec: " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  return GapSpec::from_json(text);
}

std::vector<std::int64_t> project_gaps(const GapSpec& gaps,
                                       const CodecSpec& codec,
                                       std::int64_t waveform_len) {
  gaps.validate(waveform_len);
  const std::int64_t frame = codec.params.frame_length;
  const std::int64_t hop = codec.params.hop_length;
  const std::int64_t n_tokens = frame_count(waveform_len, codec.params);

  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < n_tokens; ++i) {
    const std::int64_t f0 = i * hop;
    const std::int64_t f1 = f0 + frame;
    for (const auto& g : gaps.gaps) {
      if (f0 < g[1] && g[0] < f1) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

CorruptionResult make_corrupted(const Waveform& w, double gap_length_ms,
                                int n_gaps) {
  validate_finite(w);
  if (w.sample_rate <= 0) raise(errc::invalid_audio, "sample_rate must be positive");
  if (n_gaps < 0) raise(errc::invalid_gap, "n_gaps must be >= 0");

  CorruptionResult result;
  result.corrupted = w;
  result.gaps.sample_rate = w.sample_rate;
  if (n_gaps == 0) return result;

  const std::int64_t len = w.size();
  const std::int64_t gap_len = static_cast<std::int64_t>(
      std::llround(gap_length_ms * 1e-3 * w.sample_rate));
  if (gap_len < 1) raise(errc::invalid_gap, "gap length rounds to zero samples");
  if (gap_len > len / 4) {
    raise(errc::invalid_gap,
          "gap of " + std::to_string(gap_len) +
              " samples exceeds a quarter of the clip (" + std::to_string(len) +
              " samples)");
  }

  for (int k = 0; k < n_gaps; ++k) {
    // Gap k of n starts at (k+1) * L / (n+1) - gap/2.
    const std::int64_t center =
        static_cast<std::int64_t>(std::llround(
            static_cast<double>(k + 1) * static_cast<double>(len) /
            static_cast<double>(n_gaps + 1)));
    const std::int64_t start = center - gap_len / 2;
    const std::int64_t end = start + gap_len;
    result.gaps.gaps.push_back({start, end});
  }
  result.gaps.validate(len);

  for (const auto& g : result.gaps.gaps) {
    std::fill(result.corrupted.samples.begin() + g[0],
              result.corrupted.samples.begin() + g[1], 0.0f);
  }
  return result;
}

void splice_gap(Waveform& out, std::span<const float> generated,
                std::int64_t gen_start,
                const std::array<std::int64_t, 2>& gap, int crossfade_samples) {
  const std::int64_t len = out.size();
  const std::int64_t w = std::max(1, crossfade_samples);
  const std::int64_t half = w / 2;
  const std::int64_t lo = std::max<std::int64_t>(0, gap[0] - half);
  const std::int64_t hi = std::min<std::int64_t>(len, gap[1] + half);
  for (std::int64_t i = lo; i < hi; ++i) {
    const double left = static_cast<double>(i - (gap[0] - half)) / static_cast<double>(w);
    const double right = static_cast<double>((gap[1] + half) - i) / static_cast<double>(w);
    const double weight = std::clamp(std::min(left, right), 0.0, 1.0);
    if (weight <= 0.0) continue;
    const std::int64_t gi = i - gen_start;
    if (gi < 0 || gi >= static_cast<std::int64_t>(generated.size())) {
      raise(errc::invalid_gap, "generated audio does not cover the blend region");
    }
    const float gen = generated[static_cast<std::size_t>(gi)];
    if (weight >= 1.0) {
      out.samples[static_cast<std::size_t>(i)] = gen;
    } else {
      const float ctx = out.samples[static_cast<std::size_t>(i)];
      out.samples[static_cast<std::size_t>(i)] = static_cast<float>(
          (1.0 - weight) * static_cast<double>(ctx) +
          weight * static_cast<double>(gen));
    }
  }
}

namespace {

// Groups consecutive masked-token runs into windows of at most
// `context_tokens`, joining nearby gaps that fit in one window.
struct Window {
  std::int64_t begin = 0;  // window token range
  std::int64_t end = 0;
  std::vector<std::array<std::int64_t, 2>> runs;  // masked runs inside
};

std::vector<std::array<std::int64_t, 2>> masked_runs(
    const std::vector<std::int64_t>& masked) {
  std::vector<std::array<std::int64_t, 2>> runs;
  for (std::size_t i = 0; i < masked.size();) {
    std::size_t j = i + 1;
    while (j < masked.size() && masked[j] == masked[j - 1] + 1) ++j;
    runs.push_back({masked[i], masked[j - 1] + 1});
    i = j;
  }
  return runs;
}

}  // namespace

InpaintResult inpaint(const Waveform& w, const GapSpec& gaps,
                      const CodecSpec& codec, ScoreNet& net,
                      const NoiseSchedule& schedule, const InpaintParams& params,
                      std::uint64_t seed) {
  validate_finite(w);
  gaps.validate(w.size());
  if (params.steps < 1) raise(errc::invalid_parameter, "steps must be >= 1");
  if (net.config().vocab_size != codec.params.codebook_size) {
    raise(errc::invalid_model, "model vocab does not match codec codebook");
  }
  if (!net.params().all_finite()) {
    raise(errc::invalid_model, "model weights are not finite");
  }

  InpaintResult result;
  result.output = w;
  if (gaps.gaps.empty()) {
    result.tokens = TokenSequence{};
    return result;
  }

  const int crossfade =
      std::max(2, static_cast<int>(std::llround(
                      params.crossfade_ms * 1e-3 * w.sample_rate)));

  // 1-2: encode the damaged audio and mask every gap-overlapping token.
  TokenSequence tokens = encode(w, codec);
  const std::vector<std::int64_t> masked = project_gaps(gaps, codec, w.size());
  for (std::int64_t i : masked) {
    tokens.ids[static_cast<std::size_t>(i)] = tokens.mask_id();
  }

  const int context = std::min<int>(params.context_tokens,
                                    net.config().context_length);
  const auto runs = masked_runs(masked);
  for (const auto& run : runs) {
    if (run[1] - run[0] > context) {
      raise(errc::gap_too_wide,
            "masked run of " + std::to_string(run[1] - run[0]) +
                " tokens exceeds the " + std::to_string(context) +
                "-token context window");
    }
  }

  // 3: clamped reverse diffusion, one window per group of nearby runs,
  // left to right. Completed windows feed context to later ones.
  RngStream rng = RngStream(seed).child("inpaint");
  std::size_t r = 0;
  int window_index = 0;
  while (r < runs.size()) {
    std::size_t r_end = r + 1;
    std::int64_t lo = runs[r][0];
    std::int64_t hi = runs[r][1];
    // Join following runs while everything fits in one context window.
    while (r_end < runs.size() && runs[r_end][1] - lo <= context) {
      hi = runs[r_end][1];
      ++r_end;
    }
    // Center the window on the joined span.
    const std::int64_t span = hi - lo;
    std::int64_t margin = (context - span) / 2;
    std::int64_t win_begin = std::max<std::int64_t>(0, lo - margin);
    std::int64_t win_end = std::min<std::int64_t>(tokens.size(), win_begin + context);
    win_begin = std::max<std::int64_t>(0, win_end - context);

    TokenSequence window;
    window.vocab_size = tokens.vocab_size;
    window.token_rate_hz = tokens.token_rate_hz;
    window.ids.assign(tokens.ids.begin() + win_begin, tokens.ids.begin() + win_end);
    ClampMask clamp(window.ids.size());
    for (std::size_t i = 0; i < window.ids.size(); ++i) {
      clamp[i] = window.ids[i] != window.mask_id() ? 1 : 0;
    }
    RngStream window_rng =
        rng.child("window", static_cast<std::uint64_t>(window_index++));
    const TokenSequence filled = sample_reverse(window, net, schedule,
                                                params.steps, window_rng, &clamp);
    std::copy(filled.ids.begin(), filled.ids.end(),
              tokens.ids.begin() + win_begin);
    r = r_end;
  }

  if (tokens.has_mask()) {
    raise(errc::numerical_failure, "sampler left masked tokens behind");
  }
  result.tokens = tokens;

  // 4-5: decode a padded token span per gap and splice with crossfade.
  const std::int64_t hop = codec.params.hop_length;
  const std::int64_t frame = codec.params.frame_length;
  const std::int64_t pad = (frame + hop - 1) / hop;  // covers OLA edge effects
  for (const auto& g : gaps.gaps) {
    // Tokens overlapping this gap.
    std::int64_t first = tokens.size();
    std::int64_t last = -1;
    for (std::int64_t i : masked) {
      const std::int64_t f0 = i * hop;
      const std::int64_t f1 = f0 + frame;
      if (f0 < g[1] && g[0] < f1) {
        first = std::min(first, i);
        last = std::max(last, i);
      }
    }
    GapInfo info;
    info.gap = g;
    info.crossfade_samples = crossfade;
    if (last < 0) {
      // Gap beyond the tokenized range; nothing to regenerate.
      info.token_span = {0, 0};
      result.gap_info.push_back(info);
      continue;
    }
    const std::int64_t ds = std::max<std::int64_t>(0, first - pad);
    const std::int64_t de = std::min<std::int64_t>(tokens.size(), last + 1 + pad);
    info.token_span = {first, last + 1};

    TokenSequence segment;
    segment.vocab_size = tokens.vocab_size;
    segment.token_rate_hz = tokens.token_rate_hz;
    segment.ids.assign(tokens.ids.begin() + ds, tokens.ids.begin() + de);
    const Waveform decoded = decode(segment, codec);
    splice_gap(result.output, decoded.samples, ds * hop, g, crossfade);
    result.gap_info.push_back(info);
  }

  return result;
}

}  // namespace aidd
