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

#include "aidd/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "aidd/errors.hpp"

namespace aidd {

namespace {

constexpr float kPcmScale = 32768.0f;

std::uint32_t read_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::uint16_t read_u16(const std::uint8_t* p) {
  return std::uint16_t(p[0]) | std::uint16_t(p[1]) << 8;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace

void validate_finite(const Waveform& w) {
  for (float s : w.samples) {
    if (!std::isfinite(s)) {
      raise(errc::invalid_audio, "waveform contains a non-finite sample");
    }
  }
}

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open WAV file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    raise(errc::invalid_audio, "not a RIFF/WAVE file: " + path);
  }

  int channels = 0;
  int sample_rate = 0;
  int bits = 0;
  int format = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk = read_u32(bytes.data() + pos + 4);
    const std::uint8_t* body = bytes.data() + pos + 8;
    if (pos + 8 + chunk > bytes.size()) {
      raise(errc::invalid_audio, "truncated WAV chunk in " + path);
    }
    if (std::memcmp(id, "fmt ", 4) == 0 && chunk >= 16) {
      format = read_u16(body);
      channels = read_u16(body + 2);
      sample_rate = static_cast<int>(read_u32(body + 4));
      bits = read_u16(body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = body;
      data_len = chunk;
    }
    pos += 8 + chunk + (chunk & 1);  // chunks are word-aligned
  }

  if (format != 1 || bits != 16) {
    raise(errc::invalid_audio, "only 16-bit PCM WAV is supported: " + path);
  }
  if (channels < 1 || sample_rate <= 0 || data == nullptr) {
    raise(errc::invalid_audio, "missing fmt/data chunk in " + path);
  }

  const std::size_t frame_bytes = 2 * static_cast<std::size_t>(channels);
  const std::size_t frames = data_len / frame_bytes;
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      std::int16_t s = static_cast<std::int16_t>(
          read_u16(data + f * frame_bytes + 2 * static_cast<std::size_t>(c)));
      acc += static_cast<double>(s);
    }
    w.samples[f] = static_cast<float>(acc / channels / kPcmScale);
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) raise(errc::invalid_audio, "sample_rate must be positive");
  validate_finite(w);

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (float x : w.samples) {
    const long v = std::lround(static_cast<double>(x) * kPcmScale);
    const std::int16_t s =
        static_cast<std::int16_t>(std::clamp<long>(v, -32768, 32767));
    put_u16(out, static_cast<std::uint16_t>(s));
  }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) raise(errc::io_error, "cannot write WAV file: " + path);
  os.write(reinterpret_cast<const char*>(out.data()),
           static_cast<std::streamsize>(out.size()));
  if (!os) raise(errc::io_error, "short write to " + path);
}

}  // namespace aidd
