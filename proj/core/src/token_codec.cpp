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

#include "aidd/token_codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "aidd/errors.hpp"
#include "aidd/parallel.hpp"

namespace aidd {

namespace {

constexpr char kTokenMagic[4] = {'T', 'O', 'K', 'D'};
constexpr char kCodecMagic[4] = {'T', 'O', 'K', 'C'};
constexpr std::uint16_t kTokenVersion = 1;
constexpr std::uint16_t kCodecVersion = 1;
constexpr double kLogFloor = 1e-10;  // power floor inside the feature log

template <typename T>
void put_raw(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::ifstream& is, errc code, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) raise(code, std::string("truncated while reading ") + what);
  return v;
}

// Squared Euclidean distance between a frame feature and a centroid.
double sq_distance(const float* a, const float* b, int dim) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

// Nearest centroid, ties broken by lowest index (strict < keeps the first).
int nearest_centroid(const float* feat, const CodecSpec& codec) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < codec.params.codebook_size; ++k) {
    const double d = sq_distance(feat, codec.centroid(k), codec.feature_dim);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

struct FrameTable {
  std::int64_t count = 0;
  int feature_dim = 0;
  std::vector<float> features;   // count x feature_dim
  std::vector<float> frames;     // count x frame_length raw samples
};

FrameTable extract_frames(const std::vector<Waveform>& corpus,
                          const CodecParams& p) {
  FrameTable table;
  table.feature_dim = codec_feature_dim(p.frame_length);
  const auto window = hann_window(p.frame_length);
  RealFft fft(p.frame_length);

  std::int64_t total = 0;
  for (const auto& w : corpus) {
    validate_finite(w);
    if (w.size() >= p.frame_length) total += frame_count(w.size(), p);
  }
  table.count = total;
  table.features.resize(static_cast<std::size_t>(total) * table.feature_dim);
  table.frames.resize(static_cast<std::size_t>(total) * p.frame_length);

  std::int64_t row = 0;
  for (const auto& w : corpus) {
    if (w.size() < p.frame_length) continue;
    const std::int64_t frames = frame_count(w.size(), p);
    for (std::int64_t f = 0; f < frames; ++f) {
      const float* src = w.samples.data() + f * p.hop_length;
      float* frame_dst =
          table.frames.data() + static_cast<std::size_t>(row) * p.frame_length;
      std::memcpy(frame_dst, src, sizeof(float) * p.frame_length);
      frame_features({src, static_cast<std::size_t>(p.frame_length)}, window,
                     fft,
                     table.features.data() +
                         static_cast<std::size_t>(row) * table.feature_dim);
      ++row;
    }
  }
  return table;
}

}  // namespace

bool TokenSequence::has_mask() const noexcept {
  return std::any_of(ids.begin(), ids.end(),
                     [this](TokenId id) { return id == mask_id(); });
}

void TokenSequence::validate() const {
  if (vocab_size < 1) {
    raise(errc::malformed_token_stream, "vocab_size must be >= 1");
  }
  for (TokenId id : ids) {
    if (id < 0 || id > mask_id()) {
      raise(errc::malformed_token_stream,
            "token id " + std::to_string(id) + " outside vocabulary of " +
                std::to_string(vocab_size));
    }
  }
}

void CodecSpec::validate() const {
  if (params.frame_length < 2 || params.hop_length < 1 ||
      params.hop_length > params.frame_length) {
    raise(errc::invalid_parameter, "require 1 <= hop_length <= frame_length");
  }
  if (params.codebook_size < 2) {
    raise(errc::invalid_parameter, "codebook_size must be >= 2");
  }
  if (feature_dim != codec_feature_dim(params.frame_length)) {
    raise(errc::invalid_parameter, "feature_dim inconsistent with frame_length");
  }
  const std::size_t n = static_cast<std::size_t>(params.codebook_size);
  if (codebook.size() != n * feature_dim ||
      medoid_frames.size() != n * params.frame_length) {
    raise(errc::invalid_parameter, "codebook/medoid table size mismatch");
  }
  for (float v : codebook) {
    if (!std::isfinite(v)) raise(errc::invalid_parameter, "non-finite centroid");
  }
  for (float v : medoid_frames) {
    if (!std::isfinite(v)) raise(errc::invalid_parameter, "non-finite medoid frame");
  }
}

int codec_feature_dim(int frame_length) { return frame_length / 2 + 2; }

void frame_features(std::span<const float> frame,
                    const std::vector<double>& window, const RealFft& fft,
                    float* out) {
  const int n = static_cast<int>(frame.size());
  static thread_local std::vector<double> buf;
  static thread_local std::vector<double> mags;
  buf.resize(static_cast<std::size_t>(n));
  double energy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = frame[static_cast<std::size_t>(i)];
    buf[static_cast<std::size_t>(i)] = s * window[static_cast<std::size_t>(i)];
    energy += s * s;
  }
  fft.magnitudes(buf, mags);
  const int bins = fft.bins();
  for (int k = 0; k < bins; ++k) {
    const double power = mags[static_cast<std::size_t>(k)] *
                         mags[static_cast<std::size_t>(k)];
    out[k] = static_cast<float>(std::log10(power + kLogFloor));
  }
  out[bins] = static_cast<float>(std::sqrt(energy / n));
}

std::int64_t frame_count(std::int64_t num_samples, const CodecParams& params) {
  if (num_samples < params.frame_length) {
    raise(errc::audio_too_short,
          "waveform of " + std::to_string(num_samples) +
              " samples is shorter than one frame (" +
              std::to_string(params.frame_length) + ")");
  }
  return (num_samples - params.frame_length) / params.hop_length + 1;
}

CodecSpec train_codebook(const std::vector<Waveform>& corpus,
                         const CodecParams& params, std::uint64_t seed,
                         int threads) {
  if (params.codebook_size < 2) {
    raise(errc::invalid_parameter, "codebook_size must be >= 2");
  }
  if (params.frame_length < 2 || params.hop_length < 1 ||
      params.hop_length > params.frame_length) {
    raise(errc::invalid_parameter, "require 1 <= hop_length <= frame_length");
  }

  FrameTable table = extract_frames(corpus, params);
  const int n_clusters = params.codebook_size;
  const int dim = table.feature_dim;
  if (table.count < n_clusters) {
    raise(errc::corpus_too_small,
          "corpus yields " + std::to_string(table.count) + " frames, need >= " +
              std::to_string(n_clusters));
  }

  CodecSpec codec;
  codec.params = params;
  codec.feature_dim = dim;
  codec.codebook.resize(static_cast<std::size_t>(n_clusters) * dim);
  codec.medoid_frames.resize(static_cast<std::size_t>(n_clusters) *
                             params.frame_length);

  auto feat = [&](std::int64_t i) {
    return table.features.data() + static_cast<std::size_t>(i) * dim;
  };

  // Seeded init: distinct random frames as initial centroids.
  RngStream rng = RngStream(seed).child("kmeans-init");
  {
    std::vector<std::int64_t> pick(static_cast<std::size_t>(table.count));
    for (std::int64_t i = 0; i < table.count; ++i) {
      pick[static_cast<std::size_t>(i)] = i;
    }
    for (int k = 0; k < n_clusters; ++k) {
      const std::int64_t j =
          k + static_cast<std::int64_t>(
                  rng.uniform_below(static_cast<std::uint64_t>(table.count - k)));
      std::swap(pick[static_cast<std::size_t>(k)], pick[static_cast<std::size_t>(j)]);
      std::memcpy(codec.codebook.data() + static_cast<std::size_t>(k) * dim,
                  feat(pick[static_cast<std::size_t>(k)]), sizeof(float) * dim);
    }
  }

  constexpr int kMaxIterations = 50;
  std::vector<int> assign(static_cast<std::size_t>(table.count), -1);
  std::vector<double> dist(static_cast<std::size_t>(table.count), 0.0);

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    bool changed = false;
    parallel_for(table.count, threads, [&](std::int64_t i) {
      const int k = nearest_centroid(feat(i), codec);
      dist[static_cast<std::size_t>(i)] =
          sq_distance(feat(i), codec.centroid(k), dim);
      if (k != assign[static_cast<std::size_t>(i)]) {
        assign[static_cast<std::size_t>(i)] = k;
      }
    });

    // Update step (serial; accumulation order fixed by frame order).
    std::vector<double> sums(static_cast<std::size_t>(n_clusters) * dim, 0.0);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n_clusters), 0);
    for (std::int64_t i = 0; i < table.count; ++i) {
      const int k = assign[static_cast<std::size_t>(i)];
      counts[static_cast<std::size_t>(k)]++;
      const float* f = feat(i);
      double* s = sums.data() + static_cast<std::size_t>(k) * dim;
      for (int d = 0; d < dim; ++d) s[d] += f[d];
    }
    for (int k = 0; k < n_clusters; ++k) {
      if (counts[static_cast<std::size_t>(k)] == 0) {
        // Empty cluster: reseed to the frame farthest from its centroid.
        std::int64_t far = 0;
        double far_d = -1.0;
        for (std::int64_t i = 0; i < table.count; ++i) {
          if (dist[static_cast<std::size_t>(i)] > far_d) {
            far_d = dist[static_cast<std::size_t>(i)];
            far = i;
          }
        }
        std::memcpy(codec.codebook.data() + static_cast<std::size_t>(k) * dim,
                    feat(far), sizeof(float) * dim);
        dist[static_cast<std::size_t>(far)] = -2.0;  // do not pick twice
        changed = true;
        continue;
      }
      float* c = codec.codebook.data() + static_cast<std::size_t>(k) * dim;
      const double* s = sums.data() + static_cast<std::size_t>(k) * dim;
      for (int d = 0; d < dim; ++d) {
        const float next =
            static_cast<float>(s[d] / counts[static_cast<std::size_t>(k)]);
        if (next != c[d]) changed = true;
        c[d] = next;
      }
    }
    if (!changed) break;
  }

  // Final assignment against the trained centroids, then pick each cluster's
  // medoid frame as its time-domain representative.
  parallel_for(table.count, threads, [&](std::int64_t i) {
    assign[static_cast<std::size_t>(i)] = nearest_centroid(feat(i), codec);
  });
  std::vector<std::int64_t> medoid(static_cast<std::size_t>(n_clusters), -1);
  std::vector<double> medoid_d(static_cast<std::size_t>(n_clusters),
                               std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> global(static_cast<std::size_t>(n_clusters), 0);
  std::vector<double> global_d(static_cast<std::size_t>(n_clusters),
                               std::numeric_limits<double>::infinity());
  for (std::int64_t i = 0; i < table.count; ++i) {
    for (int k = 0; k < n_clusters; ++k) {
      const double d = sq_distance(feat(i), codec.centroid(k), dim);
      if (assign[static_cast<std::size_t>(i)] == k &&
          d < medoid_d[static_cast<std::size_t>(k)]) {
        medoid_d[static_cast<std::size_t>(k)] = d;
        medoid[static_cast<std::size_t>(k)] = i;
      }
      if (d < global_d[static_cast<std::size_t>(k)]) {
        global_d[static_cast<std::size_t>(k)] = d;
        global[static_cast<std::size_t>(k)] = i;
      }
    }
  }
  for (int k = 0; k < n_clusters; ++k) {
    // A cluster can end empty after the final assignment; fall back to the
    // globally nearest frame.
    const std::int64_t i = medoid[static_cast<std::size_t>(k)] >= 0
                               ? medoid[static_cast<std::size_t>(k)]
                               : global[static_cast<std::size_t>(k)];
    std::memcpy(
        codec.medoid_frames.data() +
            static_cast<std::size_t>(k) * params.frame_length,
        table.frames.data() + static_cast<std::size_t>(i) * params.frame_length,
        sizeof(float) * params.frame_length);
  }

  codec.validate();
  return codec;
}

TokenSequence encode(const Waveform& w, const CodecSpec& codec) {
  codec.validate();
  validate_finite(w);
  const CodecParams& p = codec.params;
  const std::int64_t frames = frame_count(w.size(), p);

  TokenSequence t;
  t.vocab_size = p.codebook_size;
  t.token_rate_hz = static_cast<double>(w.sample_rate) / p.hop_length;
  t.ids.resize(static_cast<std::size_t>(frames));

  const auto window = hann_window(p.frame_length);
  RealFft fft(p.frame_length);
  std::vector<float> feat(static_cast<std::size_t>(codec.feature_dim));
  for (std::int64_t f = 0; f < frames; ++f) {
    const float* src = w.samples.data() + f * p.hop_length;
    frame_features({src, static_cast<std::size_t>(p.frame_length)}, window,
                   fft, feat.data());
    t.ids[static_cast<std::size_t>(f)] = nearest_centroid(feat.data(), codec);
  }
  return t;
}

Waveform decode(const TokenSequence& t, const CodecSpec& codec) {
  codec.validate();
  t.validate();
  if (t.has_mask()) {
    raise(errc::masked_token_in_decode,
          "token sequence contains MASK; inpaint before decoding");
  }
  if (t.vocab_size != codec.params.codebook_size) {
    raise(errc::malformed_token_stream,
          "token vocab does not match codec codebook size");
  }
  const CodecParams& p = codec.params;
  const std::int64_t n_tokens = t.size();
  if (n_tokens == 0) {
    raise(errc::audio_too_short, "cannot decode an empty token sequence");
  }

  Waveform w;
  w.sample_rate =
      static_cast<int>(std::llround(t.token_rate_hz * p.hop_length));
  if (w.sample_rate <= 0) {
    raise(errc::malformed_token_stream, "token_rate_hz must be positive");
  }
  const std::int64_t out_len = (n_tokens - 1) * p.hop_length + p.frame_length;
  std::vector<double> acc(static_cast<std::size_t>(out_len), 0.0);
  std::vector<double> wsum(static_cast<std::size_t>(out_len), 0.0);
  const auto window = hann_window(p.frame_length);

  for (std::int64_t i = 0; i < n_tokens; ++i) {
    const float* frame = codec.medoid(t.ids[static_cast<std::size_t>(i)]);
    const std::int64_t start = i * p.hop_length;
    for (int n = 0; n < p.frame_length; ++n) {
      acc[static_cast<std::size_t>(start + n)] +=
          window[static_cast<std::size_t>(n)] * frame[n];
      wsum[static_cast<std::size_t>(start + n)] +=
          window[static_cast<std::size_t>(n)];
    }
  }
  w.samples.resize(static_cast<std::size_t>(out_len));
  for (std::int64_t i = 0; i < out_len; ++i) {
    const double denom = wsum[static_cast<std::size_t>(i)];
    w.samples[static_cast<std::size_t>(i)] =
        denom > 1e-12 ? static_cast<float>(acc[static_cast<std::size_t>(i)] / denom)
                      : 0.0f;
  }
  return w;
}

void export_tokens(const TokenSequence& t, const std::string& path) {
  t.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(errc::io_error, "cannot write token stream: " + path);
  os.write(kTokenMagic, 4);
  put_raw(os, kTokenVersion);
  put_raw(os, static_cast<std::uint32_t>(t.vocab_size));
  put_raw(os, t.token_rate_hz);
  put_raw(os, static_cast<std::uint64_t>(t.ids.size()));
  for (TokenId id : t.ids) put_raw(os, static_cast<std::uint32_t>(id));
  if (!os) raise(errc::io_error, "short write to " + path);
}

TokenSequence import_tokens(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(errc::io_error, "cannot open token stream: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kTokenMagic, 4) != 0) {
    raise(errc::malformed_token_stream, "bad magic in " + path);
  }
  const auto version = get_raw<std::uint16_t>(is, errc::malformed_token_stream, "version");
  if (version != kTokenVersion) {
    raise(errc::malformed_token_stream,
          "unsupported token-stream version " + std::to_string(version));
  }
  TokenSequence t;
  const auto vocab = get_raw<std::uint32_t>(is, errc::malformed_token_stream, "vocab");
  t.vocab_size = static_cast<int>(vocab);
  t.token_rate_hz = get_raw<double>(is, errc::malformed_token_stream, "token rate");
  const auto count = get_raw<std::uint64_t>(is, errc::malformed_token_stream, "count");
  t.ids.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id = get_raw<std::uint32_t>(is, errc::malformed_token_stream, "token id");
    if (id > vocab) {
      raise(errc::malformed_token_stream,
            "token id " + std::to_string(id) + " out of range for vocab " +
                std::to_string(vocab));
    }
    t.ids[i] = static_cast<TokenId>(id);
  }
  t.validate();
  return t;
}

void save_codec(const CodecSpec& codec, const std::string& path) {
  codec.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(errc::io_error, "cannot write codec file: " + path);
  os.write(kCodecMagic, 4);
  put_raw(os, kCodecVersion);
  put_raw(os, static_cast<std::uint32_t>(codec.params.frame_length));
  put_raw(os, static_cast<std::uint32_t>(codec.params.hop_length));
  put_raw(os, static_cast<std::uint32_t>(codec.params.codebook_size));
  put_raw(os, static_cast<std::uint32_t>(codec.feature_dim));
  os.write(reinterpret_cast<const char*>(codec.codebook.data()),
           static_cast<std::streamsize>(codec.codebook.size() * sizeof(float)));
  os.write(reinterpret_cast<const char*>(codec.medoid_frames.data()),
           static_cast<std::streamsize>(codec.medoid_frames.size() * sizeof(float)));
  if (!os) raise(errc::io_error, "short write to " + path);
}

CodecSpec load_codec(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(errc::io_error, "cannot open codec file: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCodecMagic, 4) != 0) {
    raise(errc::malformed_token_stream, "bad magic in codec file " + path);
  }
  const auto version = get_raw<std::uint16_t>(is, errc::malformed_token_stream, "version");
  if (version != kCodecVersion) {
    raise(errc::malformed_token_stream,
          "unsupported codec version " + std::to_string(version));
  }
  CodecSpec codec;
  codec.params.frame_length =
      static_cast<int>(get_raw<std::uint32_t>(is, errc::malformed_token_stream, "frame"));
  codec.params.hop_length =
      static_cast<int>(get_raw<std::uint32_t>(is, errc::malformed_token_stream, "hop"));
  codec.params.codebook_size =
      static_cast<int>(get_raw<std::uint32_t>(is, errc::malformed_token_stream, "codebook size"));
  codec.feature_dim =
      static_cast<int>(get_raw<std::uint32_t>(is, errc::malformed_token_stream, "feature dim"));
  const std::size_t n = static_cast<std::size_t>(codec.params.codebook_size);
  codec.codebook.resize(n * static_cast<std::size_t>(codec.feature_dim));
  codec.medoid_frames.resize(n * static_cast<std::size_t>(codec.params.frame_length));
  is.read(reinterpret_cast<char*>(codec.codebook.data()),
          static_cast<std::streamsize>(codec.codebook.size() * sizeof(float)));
  is.read(reinterpret_cast<char*>(codec.medoid_frames.data()),
          static_cast<std::streamsize>(codec.medoid_frames.size() * sizeof(float)));
  if (!is) raise(errc::malformed_token_stream, "truncated codec file " + path);
  codec.validate();
  return codec;
}

}  // namespace aidd
