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

#include "aidd/fft.hpp"

#include <fftw3.h>

#include <cassert>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "aidd/errors.hpp"

namespace aidd {

namespace {
// FFTW's planner is not thread-safe; calls are serialized.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Impl {
  int n = 0;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit Impl(int size) : n(size) {
    in = fftw_alloc_real(static_cast<std::size_t>(n));
    out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }

  ~Impl() {
    if (plan) {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
  }
};

RealFft::RealFft(int size) {
  if (size < 2) raise(errc::invalid_parameter, "FFT size must be >= 2");
  impl_ = std::make_unique<Impl>(size);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

int RealFft::size() const noexcept { return impl_->n; }
int RealFft::bins() const noexcept { return impl_->n / 2 + 1; }

void RealFft::transform(std::span<const double> input,
                        std::vector<std::complex<double>>& out) const {
  assert(static_cast<int>(input.size()) == impl_->n);
  std::memcpy(impl_->in, input.data(), sizeof(double) * input.size());
  fftw_execute(impl_->plan);
  out.resize(static_cast<std::size_t>(bins()));
  for (int k = 0; k < bins(); ++k) {
    out[static_cast<std::size_t>(k)] = {impl_->out[k][0], impl_->out[k][1]};
  }
}

void RealFft::magnitudes(std::span<const double> input,
                         std::vector<double>& out) const {
  assert(static_cast<int>(input.size()) == impl_->n);
  std::memcpy(impl_->in, input.data(), sizeof(double) * input.size());
  fftw_execute(impl_->plan);
  out.resize(static_cast<std::size_t>(bins()));
  for (int k = 0; k < bins(); ++k) {
    out[static_cast<std::size_t>(k)] =
        std::hypot(impl_->out[k][0], impl_->out[k][1]);
  }
}

std::vector<double> hann_window(int size) {
  std::vector<double> w(static_cast<std::size_t>(size));
  for (int n = 0; n < size; ++n) {
    w[static_cast<std::size_t>(n)] =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * n / size));
  }
  return w;
}

}  // namespace aidd
