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

#include "aidd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "aidd/errors.hpp"
#include "aidd/fft.hpp"

namespace aidd {

namespace {

constexpr double kMagnitudeFloor = 1e-8;

// Centered analysis frames: frame t covers samples around t*hop, zero-padded
// at the edges. Returns one-sided magnitudes per frame.
std::vector<std::vector<double>> stft_magnitudes(const Waveform& w,
                                                 const SpectrogramParams& p) {
  const std::int64_t len = w.size();
  const std::int64_t frames = len / p.hop + 1;
  const auto window = hann_window(p.window);
  RealFft fft(p.window);
  std::vector<double> buf(static_cast<std::size_t>(p.window));
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (std::int64_t f = 0; f < frames; ++f) {
    const std::int64_t center = f * p.hop;
    const std::int64_t start = center - p.window / 2;
    for (int i = 0; i < p.window; ++i) {
      const std::int64_t src = start + i;
      const double s = (src >= 0 && src < len)
                           ? static_cast<double>(
                                 w.samples[static_cast<std::size_t>(src)])
                           : 0.0;
      buf[static_cast<std::size_t>(i)] = s * window[static_cast<std::size_t>(i)];
    }
    auto& mags = out.emplace_back();
    fft.magnitudes(buf, mags);
  }
  return out;
}

double mel_from_hz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double hz_from_mel(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular mel filterbank over the one-sided spectrum.
Eigen::MatrixXd mel_filterbank(int bands, int bins, double sample_rate,
                               int fft_size) {
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(bands, bins);
  const double mel_lo = mel_from_hz(0.0);
  const double mel_hi = mel_from_hz(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(bands) + 2);
  for (int i = 0; i < bands + 2; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * i / (bands + 1);
    edges[static_cast<std::size_t>(i)] = hz_from_mel(mel);
  }
  for (int b = 0; b < bands; ++b) {
    const double lo = edges[static_cast<std::size_t>(b)];
    const double mid = edges[static_cast<std::size_t>(b) + 1];
    const double hi = edges[static_cast<std::size_t>(b) + 2];
    for (int k = 0; k < bins; ++k) {
      const double hz = sample_rate * k / fft_size;
      if (hz <= lo || hz >= hi) continue;
      fb(b, k) = hz <= mid ? (hz - lo) / (mid - lo) : (hi - hz) / (hi - mid);
    }
  }
  return fb;
}

std::vector<std::string> list_wav_stems(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    raise(errc::io_error, "not a directory: " + dir);
  }
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      stems.push_back(entry.path().stem().string());
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

}  // namespace

void SpectrogramParams::validate() const {
  if (window < 2 || hop < 1 || hop > window) {
    raise(errc::invalid_parameter, "require 1 <= hop <= window");
  }
}

double lsd(const Waveform& x, const Waveform& x_hat,
           const SpectrogramParams& params) {
  params.validate();
  if (x.size() != x_hat.size() || x.sample_rate != x_hat.sample_rate) {
    raise(errc::length_mismatch,
          "waveforms must share length and sample rate");
  }
  const auto mags_a = stft_magnitudes(x, params);
  const auto mags_b = stft_magnitudes(x_hat, params);
  const int bins = params.window / 2 + 1;

  double frame_acc = 0.0;
  for (std::size_t f = 0; f < mags_a.size(); ++f) {
    double bin_acc = 0.0;
    for (int k = 0; k < bins; ++k) {
      const double ma = std::max(mags_a[f][static_cast<std::size_t>(k)],
                                 kMagnitudeFloor);
      const double mb = std::max(mags_b[f][static_cast<std::size_t>(k)],
                                 kMagnitudeFloor);
      const double diff = std::log10(ma * ma) - std::log10(mb * mb);
      // Interior bins appear twice in the two-sided spectrum of Eq. with
      // K = window size; DC and Nyquist once.
      const double mult = (k == 0 || k == bins - 1) ? 1.0 : 2.0;
      bin_acc += mult * diff * diff;
    }
    frame_acc += std::sqrt(bin_acc / params.window);
  }
  return frame_acc / static_cast<double>(mags_a.size());
}

EmbeddingStats fit_embedding_stats(const Eigen::MatrixXd& embeddings) {
  if (embeddings.rows() < 2) {
    raise(errc::invalid_stats, "need at least 2 embedding vectors");
  }
  EmbeddingStats stats;
  stats.count = embeddings.rows();
  stats.mean = embeddings.colwise().mean();
  const Eigen::MatrixXd centered = embeddings.rowwise() - stats.mean.transpose();
  stats.covariance = centered.transpose() * centered /
                     static_cast<double>(embeddings.rows() - 1);
  return stats;
}

namespace {

// Symmetric PSD square root via eigendecomposition; eigenvalues below -1e-8
// are rejected, small negatives are clipped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) {
    raise(errc::invalid_stats, std::string("eigendecomposition failed for ") + what);
  }
  Eigen::VectorXd evals = es.eigenvalues();
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals(i) < -1e-8) {
      raise(errc::invalid_stats,
            std::string(what) + " is not positive semi-definite");
    }
    evals(i) = std::sqrt(std::max(0.0, evals(i)));
  }
  return es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const EmbeddingStats& a, const EmbeddingStats& b) {
  if (a.mean.size() != b.mean.size()) {
    raise(errc::dimension_mismatch, "embedding dimensions differ");
  }
  const Eigen::MatrixXd sqrt_a = psd_sqrt(a.covariance, "covariance A");
  // tr((Sa Sb)^(1/2)) = tr((sqrt(Sa) Sb sqrt(Sa))^(1/2)) for PSD inputs.
  Eigen::MatrixXd inner = sqrt_a * b.covariance * sqrt_a;
  inner = 0.5 * (inner + inner.transpose().eval());  // re-symmetrize
  const Eigen::MatrixXd sqrt_inner = psd_sqrt(inner, "covariance product");

  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double trace_term = a.covariance.trace() + b.covariance.trace() -
                            2.0 * sqrt_inner.trace();
  const double d = mean_term + trace_term;
  // Exact-zero distance for identical stats can round slightly negative.
  return d < 0.0 && d > -1e-9 ? 0.0 : d;
}

Eigen::MatrixXd embed(const Waveform& w) {
  validate_finite(w);
  if (w.sample_rate <= 0) raise(errc::invalid_audio, "sample_rate must be positive");
  const std::int64_t win_len = w.sample_rate;  // 1 s windows
  const std::int64_t windows = w.size() / win_len;
  if (windows < 1) {
    raise(errc::audio_too_short, "need at least 1 s of audio to embed");
  }

  SpectrogramParams sp;
  const int bins = sp.window / 2 + 1;
  const Eigen::MatrixXd fb =
      mel_filterbank(kMelBands, bins, w.sample_rate, sp.window);
  const double nyquist = w.sample_rate / 2.0;

  Eigen::MatrixXd out(windows, kEmbeddingDim);
  for (std::int64_t wi = 0; wi < windows; ++wi) {
    Waveform chunk;
    chunk.sample_rate = w.sample_rate;
    chunk.samples.assign(w.samples.begin() + wi * win_len,
                         w.samples.begin() + (wi + 1) * win_len);
    const auto frames = stft_magnitudes(chunk, sp);
    const std::size_t n_frames = frames.size();

    Eigen::VectorXd mel_acc = Eigen::VectorXd::Zero(kMelBands);
    std::vector<double> centroids, rolloffs, fluxes;
    centroids.reserve(n_frames);
    rolloffs.reserve(n_frames);
    fluxes.reserve(n_frames);
    std::vector<double> prev_mags;
    for (std::size_t f = 0; f < n_frames; ++f) {
      const auto& mags = frames[f];
      Eigen::VectorXd power(bins);
      double total_mag = 0.0;
      double total_power = 0.0;
      double weighted_hz = 0.0;
      for (int k = 0; k < bins; ++k) {
        const double m = mags[static_cast<std::size_t>(k)];
        const double hz = static_cast<double>(w.sample_rate) * k / sp.window;
        power(k) = m * m;
        total_mag += m;
        total_power += m * m;
        weighted_hz += hz * m;
      }
      mel_acc += fb * power;

      // Spectral centroid, normalized by Nyquist; silence maps to 0.
      centroids.push_back(total_mag > 0.0 ? weighted_hz / total_mag / nyquist
                                          : 0.0);
      // 85% energy rolloff, normalized by Nyquist.
      double rolloff = 0.0;
      if (total_power > 0.0) {
        double acc = 0.0;
        for (int k = 0; k < bins; ++k) {
          acc += power(k);
          if (acc >= 0.85 * total_power) {
            rolloff = static_cast<double>(w.sample_rate) * k / sp.window / nyquist;
            break;
          }
        }
      }
      rolloffs.push_back(rolloff);
      // Spectral flux: L2 change of the magnitude spectrum.
      double flux = 0.0;
      if (!prev_mags.empty()) {
        for (int k = 0; k < bins; ++k) {
          const double d = mags[static_cast<std::size_t>(k)] -
                           prev_mags[static_cast<std::size_t>(k)];
          flux += d * d;
        }
        flux = std::sqrt(flux);
      }
      fluxes.push_back(flux);
      prev_mags = mags;
    }

    auto mean_std = [](const std::vector<double>& xs) {
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= static_cast<double>(xs.size());
      return std::pair<double, double>(mean, std::sqrt(var));
    };

    for (int b = 0; b < kMelBands; ++b) {
      const double mean_power = mel_acc(b) / static_cast<double>(n_frames);
      out(wi, b) = std::log10(mean_power + kMagnitudeFloor * kMagnitudeFloor);
    }
    const auto [c_mean, c_std] = mean_std(centroids);
    const auto [r_mean, r_std] = mean_std(rolloffs);
    const auto [f_mean, f_std] = mean_std(fluxes);
    out(wi, kMelBands + 0) = c_mean;
    out(wi, kMelBands + 1) = c_std;
    out(wi, kMelBands + 2) = r_mean;
    out(wi, kMelBands + 3) = r_std;
    out(wi, kMelBands + 4) = f_mean;
    out(wi, kMelBands + 5) = f_std;
  }
  return out;
}

void export_embeddings(const Eigen::MatrixXd& embeddings,
                       const std::string& path, const std::string& source) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(errc::io_error, "cannot write embeddings: " + path);
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    for (Eigen::Index j = 0; j < embeddings.cols(); ++j) {
      const float v = static_cast<float>(embeddings(i, j));
      os.write(reinterpret_cast<const char*>(&v), sizeof(float));
    }
  }
  nlohmann::json sidecar;
  sidecar["dim"] = embeddings.cols();
  sidecar["count"] = embeddings.rows();
  sidecar["source"] = source;
  std::ofstream js(path + ".json", std::ios::trunc);
  if (!js) raise(errc::io_error, "cannot write sidecar: " + path + ".json");
  js << sidecar.dump(2) << "\n";
}

Eigen::MatrixXd import_embeddings(const std::string& path) {
  std::ifstream js(path + ".json");
  if (!js) raise(errc::io_error, "cannot open sidecar: " + path + ".json");
  nlohmann::json sidecar;
  try {
    js >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::io_error, std::string("bad sidecar JSON: ") + e.what());
  }
  const auto dim = sidecar.at("dim").get<Eigen::Index>();
  const auto count = sidecar.at("count").get<Eigen::Index>();
  if (dim < 1 || count < 1) {
    raise(errc::invalid_stats, "sidecar dim/count must be positive");
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(errc::io_error, "cannot open embeddings: " + path);
  Eigen::MatrixXd out(count, dim);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      float v = 0.0f;
      is.read(reinterpret_cast<char*>(&v), sizeof(float));
      if (!is) raise(errc::io_error, "truncated embeddings file: " + path);
      out(i, j) = static_cast<double>(v);
    }
  }
  return out;
}

std::vector<ProtocolRow> evaluate_protocol(const std::string& clean_dir,
                                           const std::string& restored_dir,
                                           const std::vector<int>& gap_ms_list,
                                           const ProtocolOptions& options) {
  namespace fs = std::filesystem;
  const auto stems = list_wav_stems(clean_dir);
  if (stems.empty()) {
    raise(errc::pairing_error, "no .wav files in " + clean_dir);
  }
  std::vector<int> gaps = gap_ms_list;
  std::sort(gaps.begin(), gaps.end());

  // Clean embeddings are shared across gap lengths.
  std::vector<Eigen::MatrixXd> clean_embeddings;
  std::map<std::string, Waveform> clean_wavs;
  for (const auto& stem : stems) {
    const std::string path = (fs::path(clean_dir) / (stem + ".wav")).string();
    clean_wavs[stem] = read_wav(path);
    if (options.embeddings_dir.empty()) {
      clean_embeddings.push_back(embed(clean_wavs[stem]));
    } else {
      const std::string emb =
          (fs::path(options.embeddings_dir) / "clean" / (stem + ".emb")).string();
      clean_embeddings.push_back(import_embeddings(emb));
    }
  }
  auto stack = [](const std::vector<Eigen::MatrixXd>& parts) {
    Eigen::Index rows = 0;
    for (const auto& p : parts) rows += p.rows();
    Eigen::MatrixXd all(rows, parts.front().cols());
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      all.middleRows(at, p.rows()) = p;
      at += p.rows();
    }
    return all;
  };
  const EmbeddingStats clean_stats = fit_embedding_stats(stack(clean_embeddings));

  std::vector<ProtocolRow> rows;
  for (int gap_ms : gaps) {
    const fs::path gap_dir = fs::path(restored_dir) / std::to_string(gap_ms);
    ProtocolRow row;
    row.gap_ms = gap_ms;
    std::vector<Eigen::MatrixXd> restored_embeddings;
    double lsd_acc = 0.0;
    for (const auto& stem : stems) {
      const std::string restored_path = (gap_dir / (stem + ".wav")).string();
      if (!fs::is_regular_file(restored_path)) {
        raise(errc::pairing_error,
              "missing restored file for '" + stem + "' at " + restored_path);
      }
      const Waveform restored = read_wav(restored_path);
      lsd_acc += lsd(clean_wavs[stem], restored);
      if (options.embeddings_dir.empty()) {
        restored_embeddings.push_back(embed(restored));
      } else {
        const std::string emb = (fs::path(options.embeddings_dir) /
                                 std::to_string(gap_ms) / (stem + ".emb"))
                                    .string();
        restored_embeddings.push_back(import_embeddings(emb));
      }
    }
    row.clips = static_cast<std::int64_t>(stems.size());
    row.mean_lsd = lsd_acc / static_cast<double>(stems.size());
    row.fad = frechet_distance(clean_stats,
                               fit_embedding_stats(stack(restored_embeddings)));
    rows.push_back(row);
  }
  return rows;
}

std::string protocol_csv(const std::vector<ProtocolRow>& rows) {
  std::ostringstream os;
  os << "gap_ms,fad,lsd,clips\n";
  os.precision(10);
  for (const auto& r : rows) {
    os << r.gap_ms << ',' << r.fad << ',' << r.mean_lsd << ',' << r.clips << "\n";
  }
  return os.str();
}

}  // namespace aidd
