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
// Frame vector-quantization codec: waveforms <-> discrete token sequences.
// The encoder extracts per-frame features (Hann-windowed log power spectrum
// plus frame RMS), quantizes each frame to the nearest codebook centroid, and
// the decoder overlap-adds one stored representative time-domain frame per
// centroid. The diffusion side is codec-agnostic; any token stream with the
// same file format can be imported instead.

#ifndef AIDD_TOKEN_CODEC_HPP
#define AIDD_TOKEN_CODEC_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aidd/fft.hpp"
#include "aidd/rng.hpp"
#include "aidd/waveform.hpp"

namespace aidd {

using TokenId = std::int32_t;

// Token ids live in {0..vocab_size-1}; the absorbing MASK symbol is encoded
// as vocab_size itself, keeping the clean alphabet contiguous.
struct TokenSequence {
  std::vector<TokenId> ids;
  int vocab_size = 0;
  double token_rate_hz = 0.0;

  TokenId mask_id() const noexcept { return vocab_size; }
  std::int64_t size() const noexcept {
    return static_cast<std::int64_t>(ids.size());
  }
  bool has_mask() const noexcept;
  // Throws MalformedTokenStream if any id is outside {0..vocab_size}.
  void validate() const;
};

struct CodecParams {
  int frame_length = 1024;
  int hop_length = 256;
  int codebook_size = 256;
};

struct CodecSpec {
  CodecParams params;
  int feature_dim = 0;
  // codebook_size x feature_dim, row-major.
  std::vector<float> codebook;
  // codebook_size x frame_length raw time-domain frames (cluster medoids).
  std::vector<float> medoid_frames;

  const float* centroid(int k) const {
    return codebook.data() + static_cast<std::size_t>(k) * feature_dim;
  }
  const float* medoid(int k) const {
    return medoid_frames.data() +
           static_cast<std::size_t>(k) * params.frame_length;
  }
  void validate() const;
};

// Feature dimension for a frame length: one-sided spectrum bins + RMS.
int codec_feature_dim(int frame_length);

// Extracts the quantizer feature vector of one frame. `frame` must have
// frame_length samples. Exposed for tests and oracles.
void frame_features(std::span<const float> frame,
                    const std::vector<double>& window, const RealFft& fft,
                    float* out);

// Number of analysis frames for a waveform of `num_samples` samples:
// floor((num_samples - frame) / hop) + 1, or an error if shorter than frame.
std::int64_t frame_count(std::int64_t num_samples, const CodecParams& params);

// K-means over the corpus frames (fixed 50-iteration cap, seeded init,
// empty clusters reseeded to the farthest frame). Deterministic per seed.
// `threads` parallelizes the assignment step; results are identical to the
// serial path for any thread count.
CodecSpec train_codebook(const std::vector<Waveform>& corpus,
                         const CodecParams& params, std::uint64_t seed,
                         int threads = 1);

TokenSequence encode(const Waveform& w, const CodecSpec& codec);
Waveform decode(const TokenSequence& t, const CodecSpec& codec);

// Token-stream file: magic "TOKD", version u16, vocab u32, rate f64,
// count u64, then count little-endian u32 ids (MASK stored as vocab).
void export_tokens(const TokenSequence& t, const std::string& path);
TokenSequence import_tokens(const std::string& path);

// Codec file: magic "TOKC", version u16, frame/hop/N/feature_dim u32,
// then f32 codebook and medoid frames.
void save_codec(const CodecSpec& codec, const std::string& path);
CodecSpec load_codec(const std::string& path);

}  // namespace aidd

#endif  // AIDD_TOKEN_CODEC_HPP
