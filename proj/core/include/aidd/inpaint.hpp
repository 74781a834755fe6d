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
// Gap inpainting pipeline: encode the damaged waveform, mask every token
// whose frame overlaps a gap, regenerate the masked tokens by clamped
// reverse diffusion, decode just enough frames around each gap, and splice
// the generated audio back with a 10 ms linear crossfade. Samples outside
// gap +- crossfade regions are copied bit-exactly from the input.

#ifndef AIDD_INPAINT_HPP
#define AIDD_INPAINT_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aidd/reverse.hpp"
#include "aidd/schedule.hpp"
#include "aidd/score_net.hpp"
#include "aidd/token_codec.hpp"
#include "aidd/waveform.hpp"

namespace aidd {

// Half-open [start, end) sample intervals, sorted and non-overlapping.
struct GapSpec {
  int sample_rate = 0;
  std::vector<std::array<std::int64_t, 2>> gaps;

  // Throws InvalidGap unless intervals are sorted, disjoint, non-empty and
  // inside [0, waveform_len).
  void validate(std::int64_t waveform_len) const;

  std::string to_json() const;
  static GapSpec from_json(const std::string& text);
};

void save_gapspec(const GapSpec& spec, const std::string& path);
GapSpec load_gapspec(const std::string& path);

// Token indices whose frame [i*hop, i*hop + frame) intersects any gap.
std::vector<std::int64_t> project_gaps(const GapSpec& gaps,
                                       const CodecSpec& codec,
                                       std::int64_t waveform_len);

// Zeroes n_gaps evenly spaced intervals of gap_length_ms: gap k of n starts
// at (k+1)*L/(n+1) - gap/2 samples. Gaps longer than a quarter of the clip
// are rejected.
struct CorruptionResult {
  Waveform corrupted;
  GapSpec gaps;
};
CorruptionResult make_corrupted(const Waveform& w, double gap_length_ms,
                                int n_gaps);

struct InpaintParams {
  int steps = 128;
  int context_tokens = 256;
  double crossfade_ms = 10.0;
};

struct GapInfo {
  std::array<std::int64_t, 2> gap;          // sample interval
  std::array<std::int64_t, 2> token_span;   // [first, last) masked token
  int crossfade_samples = 0;
};

struct InpaintResult {
  Waveform output;
  TokenSequence tokens;       // inpainted token sequence (no MASK)
  std::vector<GapInfo> gap_info;
};

// Full pipeline. `net` must hold finite weights; a masked token run longer
// than the context window raises GapTooWide.
InpaintResult inpaint(const Waveform& w, const GapSpec& gaps,
                      const CodecSpec& codec, ScoreNet& net,
                      const NoiseSchedule& schedule, const InpaintParams& params,
                      std::uint64_t seed);

// Splices generated audio over one gap, blending in place. Sample i takes
// generated[i - gen_start] with weight
//   w(i) = clamp(min((i - gap0 + W/2) / W, (gap1 + W/2 - i) / W), 0, 1),
// a linear ramp of width W = crossfade_samples half inside and half outside
// each boundary; the boundary sample itself blends at exactly 1/2. Samples
// with w(i) = 0 are never written. Exposed for tests.
void splice_gap(Waveform& out, std::span<const float> generated,
                std::int64_t gen_start, const std::array<std::int64_t, 2>& gap,
                int crossfade_samples);

}  // namespace aidd

#endif  // AIDD_INPAINT_HPP
