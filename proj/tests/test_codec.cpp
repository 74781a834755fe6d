#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "aidd/errors.hpp"
#include "aidd/token_codec.hpp"
#include "aidd/waveform.hpp"
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

Waveform silence(std::int64_t n, int sr = 16000) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.assign(static_cast<std::size_t>(n), 0.0f);
  return w;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("degenerate corpus of identical frames still trains") {
  CodecParams p;
  p.frame_length = 64;
  p.hop_length = 64;
  p.codebook_size = 2;
  // Constant-amplitude frames, all bit-identical.
  Waveform w = make_tone(250.0, 0.0);
  w.samples.assign(64 * 8, 0.25f);
  const CodecSpec codec = train_codebook({w}, p, 1);
  codec.validate();
  CHECK(codec.params.codebook_size == 2);
  const TokenSequence t = encode(w, codec);
  // Ties quantize to the lowest index.
  for (TokenId id : t.ids) CHECK(id == 0);
}

TEST_CASE("two pure tones split into pure clusters") {
  CodecParams p;
  p.codebook_size = 2;
  const Waveform a = make_tone(440.0, 3.0);
  const Waveform b = make_tone(880.0, 3.0);
  const CodecSpec codec = train_codebook({a, b}, p, 7);

  const TokenSequence ta = encode(a, codec);
  const TokenSequence tb = encode(b, codec);
  // Cluster purity 100%: every frame of a tone lands in one cluster and the
  // clusters differ.
  for (TokenId id : ta.ids) CHECK(id == ta.ids[0]);
  for (TokenId id : tb.ids) CHECK(id == tb.ids[0]);
  CHECK(ta.ids[0] != tb.ids[0]);
}

TEST_CASE("invalid training parameters") {
  CodecParams p;
  p.codebook_size = 0;
  CHECK_THROWS_AS(train_codebook({make_tone(440.0, 1.0)}, p, 1), Error);
  try {
    train_codebook({make_tone(440.0, 1.0)}, p, 1);
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_parameter);
  }
}

TEST_CASE("corpus smaller than the codebook is rejected") {
  CodecParams p;
  p.codebook_size = 64;
  try {
    train_codebook({make_tone(440.0, 0.3)}, p, 1);  // few frames only
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::corpus_too_small);
  }
}

TEST_CASE("non-finite audio is rejected") {
  CodecParams p;
  p.codebook_size = 2;
  Waveform bad = make_tone(440.0, 1.0);
  bad.samples[100] = std::nanf("");
  try {
    train_codebook({bad}, p, 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_audio);
  }
}

TEST_CASE("training is deterministic per seed") {
  CodecParams p;
  p.codebook_size = 8;
  const std::vector<Waveform> corpus = {make_tone(330.0, 1.0),
                                        make_tone(550.0, 1.0)};
  const CodecSpec a = train_codebook(corpus, p, 99);
  const CodecSpec b = train_codebook(corpus, p, 99);
  CHECK(a.codebook == b.codebook);
  CHECK(a.medoid_frames == b.medoid_frames);
  // Parallel assignment must match the serial result.
  const CodecSpec c = train_codebook(corpus, p, 99, /*threads=*/2);
  CHECK(a.codebook == c.codebook);
  CHECK(a.medoid_frames == c.medoid_frames);
}

TEST_CASE("silence encodes to the centroid nearest the zero-feature frame") {
  CodecParams p;
  p.codebook_size = 2;
  const CodecSpec codec =
      train_codebook({make_tone(440.0, 3.0), make_tone(880.0, 3.0)}, p, 7);
  const TokenSequence t = encode(silence(4096), codec);

  // Oracle: brute-force nearest centroid of the zero frame's feature vector.
  const auto window = hann_window(p.frame_length);
  RealFft fft(p.frame_length);
  std::vector<float> zero_frame(static_cast<std::size_t>(p.frame_length), 0.0f);
  std::vector<float> feat(static_cast<std::size_t>(codec.feature_dim));
  frame_features(zero_frame, window, fft, feat.data());
  int best = 0;
  double best_d = 1e300;
  for (int k = 0; k < p.codebook_size; ++k) {
    double d = 0.0;
    for (int i = 0; i < codec.feature_dim; ++i) {
      const double diff = feat[static_cast<std::size_t>(i)] - codec.centroid(k)[i];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  for (TokenId id : t.ids) CHECK(id == best);
}

TEST_CASE("framing arithmetic") {
  CodecParams p;
  p.codebook_size = 2;
  const CodecSpec codec =
      train_codebook({make_tone(440.0, 1.0), make_tone(880.0, 1.0)}, p, 3);

  SUBCASE("frame + 3 hops gives exactly 4 tokens") {
    Waveform w = make_tone(440.0, 1.0);
    w.samples.resize(static_cast<std::size_t>(p.frame_length + 3 * p.hop_length));
    CHECK(encode(w, codec).size() == 4);
  }

  SUBCASE("token count matches floor((len - frame) / hop) + 1") {
    for (std::int64_t extra : {0, 1, 255, 256, 257, 1000, 4096}) {
      Waveform w = make_tone(440.0, 1.0);
      w.samples.resize(static_cast<std::size_t>(p.frame_length + extra));
      const std::int64_t expected = (extra) / p.hop_length + 1;
      CHECK(encode(w, codec).size() == expected);
    }
  }

  SUBCASE("shorter than one frame is rejected") {
    Waveform w = silence(p.frame_length - 1);
    try {
      encode(w, codec);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::audio_too_short);
    }
  }
}

TEST_CASE("encode emits no MASK and is deterministic") {
  CodecParams p;
  p.codebook_size = 4;
  const CodecSpec codec =
      train_codebook({make_tone(440.0, 2.0), make_tone(660.0, 2.0)}, p, 5);
  const Waveform w = make_tone(523.25, 1.5);
  const TokenSequence a = encode(w, codec);
  const TokenSequence b = encode(w, codec);
  CHECK(a.ids == b.ids);
  CHECK_FALSE(a.has_mask());
  CHECK(a.token_rate_hz == doctest::Approx(16000.0 / 256.0));
}

TEST_CASE("decoding a single repeated token gives a hop-periodic interior") {
  CodecParams p;
  p.codebook_size = 2;
  const CodecSpec codec =
      train_codebook({make_tone(440.0, 3.0), make_tone(880.0, 3.0)}, p, 7);
  TokenSequence t;
  t.vocab_size = 2;
  t.token_rate_hz = 62.5;
  t.ids.assign(16, 1);
  const Waveform w = decode(t, codec);
  CHECK(w.size() == (16 - 1) * p.hop_length + p.frame_length);
  // Interior samples (fully covered by overlapping windows) repeat with the
  // hop period, which is <= frame_length.
  for (std::int64_t i = p.frame_length; i + p.hop_length < w.size() - p.frame_length; ++i) {
    CHECK(w.samples[static_cast<std::size_t>(i)] ==
          doctest::Approx(w.samples[static_cast<std::size_t>(i + p.hop_length)])
              .epsilon(1e-5));
  }
}

TEST_CASE("decode rejects MASK tokens") {
  CodecParams p;
  p.codebook_size = 2;
  const CodecSpec codec =
      train_codebook({make_tone(440.0, 3.0), make_tone(880.0, 3.0)}, p, 7);
  TokenSequence t;
  t.vocab_size = 2;
  t.token_rate_hz = 62.5;
  t.ids = {0, 1, t.mask_id(), 0};
  try {
    decode(t, codec);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == errc::masked_token_in_decode);
  }
}

TEST_CASE("tone round trip reaches 10 dB") {
  // Expected value derived with the DSP oracle: a self-trained N=256 codec
  // reconstructs a pure 440 Hz tone essentially exactly (measured ~272 dB),
  // so the 10 dB bound has a wide margin.
  CodecParams p;  // 1024 / 256 / 256
  const Waveform t440 = make_tone(440.0, 6.0);
  const CodecSpec codec = train_codebook({t440}, p, 123);
  const TokenSequence tok = encode(t440, codec);
  const Waveform rec = decode(tok, codec);
  CHECK(rec.sample_rate == 16000);
  CHECK(oracles::snr_db(t440.samples, rec.samples) >= 10.0);
}

TEST_CASE("re-encoding decoded tones is idempotent on a two-tone codebook") {
  CodecParams p;
  p.codebook_size = 2;
  const CodecSpec codec =
      train_codebook({make_tone(440.0, 3.0), make_tone(880.0, 3.0)}, p, 7);
  for (double hz : {440.0, 880.0}) {
    const TokenSequence tok = encode(make_tone(hz, 3.0), codec);
    const TokenSequence tok2 = encode(decode(tok, codec), codec);
    CHECK(tok2.ids == std::vector<TokenId>(tok.ids.begin(),
                                           tok.ids.begin() + tok2.size()));
  }
}

TEST_CASE("token stream round trip") {
  const std::string path = temp_path("aidd_tokens_roundtrip.tok");

  SUBCASE("short sequence survives exactly") {
    TokenSequence t;
    t.vocab_size = 8;
    t.token_rate_hz = 62.5;
    t.ids = {3, 1, 4, 1, 5};
    export_tokens(t, path);
    const TokenSequence back = import_tokens(path);
    CHECK(back.ids == t.ids);
    CHECK(back.vocab_size == 8);
    CHECK(back.token_rate_hz == 62.5);
  }

  SUBCASE("MASK id round-trips as vocab_size") {
    TokenSequence t;
    t.vocab_size = 8;
    t.token_rate_hz = 50.0;
    t.ids = {1, t.mask_id(), 2};
    export_tokens(t, path);
    CHECK(import_tokens(path).ids == t.ids);
  }

  SUBCASE("file-level round trip is bit-exact") {
    TokenSequence t;
    t.vocab_size = 100;
    t.token_rate_hz = 75.0;
    RngStream rng(17);
    for (int i = 0; i < 1000; ++i) {
      t.ids.push_back(static_cast<TokenId>(rng.uniform_below(100)));
    }
    export_tokens(t, path);
    std::ifstream f1(path, std::ios::binary);
    const std::string bytes1((std::istreambuf_iterator<char>(f1)),
                             std::istreambuf_iterator<char>());
    const std::string path2 = temp_path("aidd_tokens_roundtrip2.tok");
    export_tokens(import_tokens(path), path2);
    std::ifstream f2(path2, std::ios::binary);
    const std::string bytes2((std::istreambuf_iterator<char>(f2)),
                             std::istreambuf_iterator<char>());
    CHECK(bytes1 == bytes2);
  }

  SUBCASE("empty payload with a valid header") {
    TokenSequence t;
    t.vocab_size = 4;
    t.token_rate_hz = 10.0;
    export_tokens(t, path);
    const TokenSequence back = import_tokens(path);
    CHECK(back.size() == 0);
    CHECK(back.vocab_size == 4);
  }

  SUBCASE("out-of-range id is rejected") {
    TokenSequence t;
    t.vocab_size = 8;
    t.token_rate_hz = 62.5;
    t.ids = {9};
    CHECK_THROWS_AS(export_tokens(t, path), Error);

    // Hand-craft a stream with id 9 over vocab 8.
    t.ids = {1};
    export_tokens(t, path);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-4, std::ios::end);
    const std::uint32_t bad = 9;
    f.write(reinterpret_cast<const char*>(&bad), 4);
    f.close();
    try {
      import_tokens(path);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == errc::malformed_token_stream);
    }
  }

  SUBCASE("bad magic is rejected") {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "NOPE12345678";
    f.close();
    CHECK_THROWS_AS(import_tokens(path), Error);
  }
}

TEST_CASE("codec file round trip") {
  CodecParams p;
  p.codebook_size = 4;
  const CodecSpec codec =
      train_codebook({make_tone(440.0, 2.0), make_tone(660.0, 2.0)}, p, 5);
  const std::string path = temp_path("aidd_codec_roundtrip.tokc");
  save_codec(codec, path);
  const CodecSpec back = load_codec(path);
  CHECK(back.codebook == codec.codebook);
  CHECK(back.medoid_frames == codec.medoid_frames);
  CHECK(back.params.frame_length == codec.params.frame_length);

  const std::string path2 = temp_path("aidd_codec_roundtrip2.tokc");
  save_codec(back, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)),
                       std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)),
                       std::istreambuf_iterator<char>());
  CHECK(b1 == b2);

  SUBCASE("truncated codec file is rejected") {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "TOKC";
    f.close();
    CHECK_THROWS_AS(load_codec(path), Error);
  }
}

TEST_CASE("wav io") {
  const std::string path = temp_path("aidd_wav_roundtrip.wav");

  SUBCASE("pcm16 round trip is bit-exact") {
    Waveform w = make_tone(440.0, 0.5);
    write_wav(path, w);
    const Waveform r1 = read_wav(path);
    CHECK(r1.sample_rate == w.sample_rate);
    CHECK(r1.size() == w.size());
    write_wav(path, r1);
    const Waveform r2 = read_wav(path);
    CHECK(r1.samples == r2.samples);
  }

  SUBCASE("stereo is downmixed by averaging") {
    // Hand-build a 2-channel file: L = 8192, R = -4096 -> mean 2048.
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    auto u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { f.write(reinterpret_cast<char*>(&v), 2); };
    f << "RIFF";
    u32(36 + 8);
    f << "WAVEfmt ";
    u32(16);
    u16(1);
    u16(2);
    u32(16000);
    u32(16000 * 4);
    u16(4);
    u16(16);
    f << "data";
    u32(8);
    u16(8192);
    u16(static_cast<std::uint16_t>(-4096));
    u16(8192);
    u16(static_cast<std::uint16_t>(-4096));
    f.close();
    const Waveform w = read_wav(path);
    CHECK(w.size() == 2);
    CHECK(w.samples[0] == doctest::Approx(2048.0 / 32768.0));
  }

  SUBCASE("non-wav input is rejected") {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "this is not audio";
    f.close();
    CHECK_THROWS_AS(read_wav(path), Error);
  }
}
