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

#ifndef AIDD_WAVEFORM_HPP
#define AIDD_WAVEFORM_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace aidd {

// Mono audio in [-1, 1]. PCM16 samples map to float as s / 32768, and back
// with the same power-of-two scale, so a 16-bit file round-trips bit-exactly.
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 0;

  std::int64_t size() const noexcept {
    return static_cast<std::int64_t>(samples.size());
  }
  double duration_s() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Throws InvalidAudio if any sample is non-finite.
void validate_finite(const Waveform& w);

// 16-bit PCM WAV. Multichannel input is downmixed by averaging channels.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

}  // namespace aidd

#endif  // AIDD_WAVEFORM_HPP
