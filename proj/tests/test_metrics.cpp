#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "aidd/errors.hpp"
#include "aidd/metrics.hpp"
#include "aidd/rng.hpp"
#include "aidd/waveform.hpp"
#include "oracles.hpp"

using namespace aidd;
namespace fs = std::filesystem;

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

Waveform white_noise(double seconds, std::uint64_t seed, int sr = 16000,
                     double amp = 0.2) {
  Waveform w;
  w.sample_rate = sr;
  RngStream rng(seed);
  const std::int64_t n = static_cast<std::int64_t>(seconds * sr);
  w.samples.resize(static_cast<std::size_t>(n));
  for (auto& s : w.samples) s = static_cast<float>(amp * rng.normal());
  return w;
}

// Independent reference implementation of the log-spectral distance using
// Eigen's FFT (kissfft backend), centered zero-padded frames and a Hann
// window, averaging squared log10 power differences over the full two-sided
// spectrum.
double reference_lsd(const Waveform& x, const Waveform& y) {
  const int window = 2048;
  const int hop = 512;
  const double floor_mag = 1e-8;
  Eigen::FFT<double> fft;
  std::vector<double> hann(window);
  for (int n = 0; n < window; ++n) {
    hann[static_cast<std::size_t>(n)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / window));
  }
  auto frame_mags = [&](const Waveform& w, std::int64_t center) {
    std::vector<double> buf(window);
    for (int i = 0; i < window; ++i) {
      const std::int64_t src = center - window / 2 + i;
      buf[static_cast<std::size_t>(i)] =
          (src >= 0 && src < w.size())
              ? static_cast<double>(w.samples[static_cast<std::size_t>(src)]) *
                    hann[static_cast<std::size_t>(i)]
              : 0.0;
    }
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, buf);
    return spec;  // two-sided, length == window
  };
  const std::int64_t frames = x.size() / hop + 1;
  double acc = 0.0;
  for (std::int64_t f = 0; f < frames; ++f) {
    const auto sx = frame_mags(x, f * hop);
    const auto sy = frame_mags(y, f * hop);
    double bin_acc = 0.0;
    for (int k = 0; k < window; ++k) {
      const double mx = std::max(std::abs(sx[static_cast<std::size_t>(k)]), floor_mag);
      const double my = std::max(std::abs(sy[static_cast<std::size_t>(k)]), floor_mag);
      const double d = std::log10(mx * mx) - std::log10(my * my);
      bin_acc += d * d;
    }
    acc += std::sqrt(bin_acc / window);
  }
  return acc / static_cast<double>(frames);
}

std::string temp_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("log-spectral distance") {
  SUBCASE("identity is exactly zero") {
    const Waveform x = make_tone(440.0, 1.0);
    CHECK(lsd(x, x) == 0.0);
  }

  SUBCASE("10x amplitude scaling gives exactly 2") {
    // log10(|10 X|^2) - log10(|X|^2) = 2 in every bin; white noise keeps all
    // bins far above the magnitude floor.
    const Waveform x = white_noise(1.0, 99);
    Waveform y = x;
    for (auto& s : y.samples) s *= 10.0f;
    CHECK(lsd(x, y) == doctest::Approx(2.0).epsilon(1e-9));
  }

  SUBCASE("symmetric in its arguments") {
    const Waveform x = white_noise(0.7, 1);
    const Waveform y = white_noise(0.7, 2);
    CHECK(lsd(x, y) == doctest::Approx(lsd(y, x)).epsilon(1e-12));
  }

  SUBCASE("matches an independent reference implementation") {
    const Waveform x = white_noise(0.8, 11);
    const Waveform y = white_noise(0.8, 12);
    CHECK(lsd(x, y) == doctest::Approx(reference_lsd(x, y)).epsilon(1e-6));
    const Waveform t = make_tone(523.0, 0.8);
    CHECK(lsd(x, t) == doctest::Approx(reference_lsd(x, t)).epsilon(1e-6));
  }

  SUBCASE("length or rate mismatch is rejected") {
    const Waveform x = make_tone(440.0, 1.0);
    Waveform y = make_tone(440.0, 0.5);
    CHECK_THROWS_AS(lsd(x, y), Error);
    y = make_tone(440.0, 1.0, 8000);
    try {
      lsd(x, y);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::length_mismatch);
    }
  }
}

TEST_CASE("frechet distance") {
  SUBCASE("identical stats give zero") {
    EmbeddingStats a;
    a.mean = Eigen::VectorXd::Constant(4, 0.3);
    a.covariance = Eigen::MatrixXd::Identity(4, 4) * 1.7;
    a.count = 10;
    CHECK(frechet_distance(a, a) <= 1e-12);
  }

  SUBCASE("scalar Gaussians: mean 0 vs 1, variance 1 vs 4 gives exactly 2") {
    EmbeddingStats a, b;
    a.mean = Eigen::VectorXd::Constant(1, 0.0);
    a.covariance = Eigen::MatrixXd::Constant(1, 1, 1.0);
    a.count = 5;
    b.mean = Eigen::VectorXd::Constant(1, 1.0);
    b.covariance = Eigen::MatrixXd::Constant(1, 1, 4.0);
    b.count = 5;
    // (0-1)^2 + 1 + 4 - 2 sqrt(4) = 2.
    CHECK(frechet_distance(a, b) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(frechet_distance(b, a) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("random 5-D PSD pair matches the nonsymmetric sqrtm oracle") {
    RngStream rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      auto random_psd = [&]() {
        Eigen::MatrixXd m(5, 5);
        for (int i = 0; i < 5; ++i) {
          for (int j = 0; j < 5; ++j) m(i, j) = rng.normal();
        }
        return Eigen::MatrixXd(m * m.transpose() +
                               0.1 * Eigen::MatrixXd::Identity(5, 5));
      };
      EmbeddingStats a, b;
      a.covariance = random_psd();
      b.covariance = random_psd();
      a.mean = Eigen::VectorXd::Zero(5);
      b.mean = Eigen::VectorXd::Zero(5);
      for (int i = 0; i < 5; ++i) {
        a.mean(i) = rng.normal();
        b.mean(i) = rng.normal();
      }
      a.count = b.count = 9;
      const double expected =
          (a.mean - b.mean).squaredNorm() + a.covariance.trace() +
          b.covariance.trace() -
          2.0 * oracles::trace_sqrt_product(a.covariance, b.covariance);
      CHECK(frechet_distance(a, b) == doctest::Approx(expected).epsilon(1e-6));
    }
  }

  SUBCASE("dimension mismatch is rejected") {
    EmbeddingStats a, b;
    a.mean = Eigen::VectorXd::Zero(3);
    a.covariance = Eigen::MatrixXd::Identity(3, 3);
    b.mean = Eigen::VectorXd::Zero(4);
    b.covariance = Eigen::MatrixXd::Identity(4, 4);
    try {
      frechet_distance(a, b);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::dimension_mismatch);
    }
  }

  SUBCASE("markedly non-PSD covariance is rejected") {
    EmbeddingStats a, b;
    a.mean = b.mean = Eigen::VectorXd::Zero(2);
    a.covariance = Eigen::MatrixXd::Identity(2, 2);
    b.covariance = Eigen::MatrixXd::Identity(2, 2);
    b.covariance(0, 0) = -0.5;
    try {
      frechet_distance(a, b);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::invalid_stats);
    }
  }
}

TEST_CASE("embedding statistics fit") {
  Eigen::MatrixXd rows(3, 2);
  rows << 1.0, 2.0, 3.0, 4.0, 5.0, 9.0;
  const EmbeddingStats stats = fit_embedding_stats(rows);
  CHECK(stats.count == 3);
  CHECK(stats.mean(0) == doctest::Approx(3.0));
  CHECK(stats.mean(1) == doctest::Approx(5.0));
  // Unbiased covariance, n - 1 in the denominator.
  CHECK(stats.covariance(0, 0) == doctest::Approx(4.0));
  CHECK(stats.covariance(1, 1) == doctest::Approx(13.0));
  CHECK(stats.covariance(0, 1) == doctest::Approx(7.0));
  CHECK(stats.covariance(1, 0) == doctest::Approx(7.0));

  Eigen::MatrixXd single(1, 2);
  single << 1.0, 2.0;
  CHECK_THROWS_AS(fit_embedding_stats(single), Error);
}

TEST_CASE("spectral embedder") {
  SUBCASE("one vector per full second") {
    const Waveform w = make_tone(440.0, 3.5);
    const Eigen::MatrixXd e = embed(w);
    CHECK(e.rows() == 3);
    CHECK(e.cols() == kEmbeddingDim);
  }

  SUBCASE("audio shorter than one second is rejected") {
    try {
      embed(make_tone(440.0, 0.5));
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::audio_too_short);
    }
  }

  SUBCASE("silence maps to the log floor with zero centroid") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(16000, 0.0f);
    const Eigen::MatrixXd e = embed(w);
    for (int b = 0; b < kMelBands; ++b) {
      CHECK(e(0, b) == doctest::Approx(-16.0).epsilon(1e-12));  // log10(1e-16)
    }
    for (int j = kMelBands; j < kEmbeddingDim; ++j) {
      CHECK(e(0, j) == 0.0);
    }
  }

  SUBCASE("pure 1 kHz tone peaks in the matching mel band") {
    // Oracle: rebuild the 64 triangular filters' peak frequencies from the
    // HTK mel scale and find the band whose triangle weights 1 kHz most.
    const int bands = kMelBands;
    const double lo = oracles::mel_of_hz(0.0);
    const double hi = oracles::mel_of_hz(8000.0);
    std::vector<double> edge_hz(static_cast<std::size_t>(bands) + 2);
    for (int i = 0; i < bands + 2; ++i) {
      const double mel = lo + (hi - lo) * i / (bands + 1);
      edge_hz[static_cast<std::size_t>(i)] =
          700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    }
    int expected_band = -1;
    double best_weight = 0.0;
    for (int b = 0; b < bands; ++b) {
      const double l = edge_hz[static_cast<std::size_t>(b)];
      const double m = edge_hz[static_cast<std::size_t>(b) + 1];
      const double r = edge_hz[static_cast<std::size_t>(b) + 2];
      double weight = 0.0;
      if (1000.0 > l && 1000.0 < r) {
        weight = 1000.0 <= m ? (1000.0 - l) / (m - l) : (r - 1000.0) / (r - m);
      }
      if (weight > best_weight) {
        best_weight = weight;
        expected_band = b;
      }
    }
    REQUIRE(expected_band >= 0);

    const Eigen::MatrixXd e = embed(make_tone(1000.0, 1.0));
    int argmax = 0;
    for (int b = 1; b < bands; ++b) {
      if (e(0, b) > e(0, argmax)) argmax = b;
    }
    CHECK(argmax == expected_band);
  }

  SUBCASE("deterministic and shift-consistent over whole windows") {
    const Waveform w = white_noise(3.0, 5);
    const Eigen::MatrixXd a = embed(w);
    const Eigen::MatrixXd b = embed(w);
    CHECK(a == b);

    // Dropping the first full window shifts the embedding rows.
    Waveform shifted;
    shifted.sample_rate = w.sample_rate;
    shifted.samples.assign(w.samples.begin() + w.sample_rate, w.samples.end());
    const Eigen::MatrixXd c = embed(shifted);
    CHECK(c.rows() == a.rows() - 1);
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        CHECK(c(i, j) == doctest::Approx(a(i + 1, j)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("embedding file round trip") {
  const std::string dir = temp_dir("aidd_emb_test");
  const std::string path = dir + "/x.emb";
  const Eigen::MatrixXd e = embed(white_noise(2.0, 8));
  export_embeddings(e, path, "unit-test");
  const Eigen::MatrixXd back = import_embeddings(path);
  CHECK(back.rows() == e.rows());
  CHECK(back.cols() == e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
      CHECK(back(i, j) == doctest::Approx(e(i, j)).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(import_embeddings(dir + "/missing.emb"), Error);
}

TEST_CASE("evaluation protocol") {
  const std::string root = temp_dir("aidd_protocol_test");
  const std::string clean = root + "/clean";
  const std::string restored = root + "/restored";
  fs::create_directories(clean);
  fs::create_directories(restored + "/50");
  fs::create_directories(restored + "/300");

  const Waveform a = white_noise(1.5, 31);
  const Waveform b = make_tone(440.0, 1.5);
  write_wav(clean + "/a.wav", a);
  write_wav(clean + "/b.wav", b);

  SUBCASE("identical restorations give all-zero rows in ascending order") {
    for (const char* gap : {"50", "300"}) {
      write_wav(restored + "/" + gap + "/a.wav", a);
      write_wav(restored + "/" + gap + "/b.wav", b);
    }
    const auto rows = evaluate_protocol(clean, restored, {300, 50});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].gap_ms == 50);
    CHECK(rows[1].gap_ms == 300);
    for (const auto& row : rows) {
      CHECK(row.clips == 2);
      CHECK(row.mean_lsd == 0.0);
      CHECK(row.fad <= 1e-9);
    }
    const std::string csv = protocol_csv(rows);
    CHECK(csv.rfind("gap_ms,fad,lsd,clips\n", 0) == 0);
    CHECK(csv.find("\n50,") != std::string::npos);
  }

  SUBCASE("missing counterpart raises a pairing error") {
    write_wav(restored + "/50/a.wav", a);
    write_wav(restored + "/300/a.wav", a);
    write_wav(restored + "/300/b.wav", b);
    try {
      evaluate_protocol(clean, restored, {50, 300});
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::pairing_error);
    }
  }
}
