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

#ifndef AIDD_FFT_HPP
#define AIDD_FFT_HPP

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace aidd {

// Real-to-complex FFT of a fixed size. Plans are created with FFTW_ESTIMATE
// so results are deterministic run to run. Instances are not thread-safe;
// use one per thread (plan creation itself is internally serialized).
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const noexcept;
  int bins() const noexcept;  // size/2 + 1

  // input.size() must equal size(); returns the one-sided spectrum.
  void transform(std::span<const double> input,
                 std::vector<std::complex<double>>& out) const;

  // Convenience: one-sided magnitudes |X_k|.
  void magnitudes(std::span<const double> input, std::vector<double>& out) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Periodic Hann window, w[n] = 0.5 (1 - cos(2 pi n / N)).
std::vector<double> hann_window(int size);

}  // namespace aidd

#endif  // AIDD_FFT_HPP
