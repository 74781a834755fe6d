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
// Objective evaluation: frame-averaged log-spectral distance, Frechet
// distance between Gaussian fits of audio embeddings, and the gap-length
// evaluation table. The shipped embedder is a deterministic spectral
// feature map (64 log-mel bands + centroid/rolloff/flux statistics, 70
// dims); externally computed embeddings can be imported instead, so Frechet
// numbers are only comparable within one embedder.

#ifndef AIDD_METRICS_HPP
#define AIDD_METRICS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "aidd/waveform.hpp"

namespace aidd {

struct SpectrogramParams {
  int window = 2048;
  int hop = 512;

  void validate() const;
};

// Frame-averaged RMS distance between base-10 log power spectra, with
// magnitudes floored at 1e-8 before the log. Centered framing: frame t is
// the zero-padded window around sample t*hop. Zero iff the floored magnitude
// spectrograms agree; symmetric in its arguments.
double lsd(const Waveform& x, const Waveform& x_hat,
           const SpectrogramParams& params = {});

struct EmbeddingStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // unbiased (n - 1) normalization
  std::int64_t count = 0;
};

// Fits mean and covariance to rows of `embeddings`; needs count >= 2.
EmbeddingStats fit_embedding_stats(const Eigen::MatrixXd& embeddings);

// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^(1/2)), matrix square roots by
// symmetric eigendecomposition with eigenvalues clipped at -1e-8.
double frechet_distance(const EmbeddingStats& a, const EmbeddingStats& b);

inline constexpr int kMelBands = 64;
inline constexpr int kEmbeddingDim = 70;  // 64 mel + 3 stats x {mean, std}

// One 70-dim embedding per non-overlapping 1 s window; requires >= 1 s of
// audio. Silence maps to the all-log-floor mel vector with centroid 0.
Eigen::MatrixXd embed(const Waveform& w);

// Flat f32 row-major matrix with a JSON sidecar (<path>.json: dim, count,
// source).
void export_embeddings(const Eigen::MatrixXd& embeddings,
                       const std::string& path, const std::string& source);
Eigen::MatrixXd import_embeddings(const std::string& path);

struct ProtocolRow {
  int gap_ms = 0;
  double fad = 0.0;
  double mean_lsd = 0.0;
  std::int64_t clips = 0;
};

struct ProtocolOptions {
  // When set, embeddings are imported from <dir>/clean/<stem>.emb and
  // <dir>/<gap_ms>/<stem>.emb instead of running the shipped embedder.
  std::string embeddings_dir;
};

// Pairs <clean_dir>/<name>.wav with <restored_dir>/<gap_ms>/<name>.wav for
// every requested gap length; rows come back sorted by gap length. Missing
// counterparts raise PairingError.
std::vector<ProtocolRow> evaluate_protocol(const std::string& clean_dir,
                                           const std::string& restored_dir,
                                           const std::vector<int>& gap_ms_list,
                                           const ProtocolOptions& options = {});

// CSV with header gap_ms,fad,lsd,clips.
std::string protocol_csv(const std::vector<ProtocolRow>& rows);

}  // namespace aidd

#endif  // AIDD_METRICS_HPP
