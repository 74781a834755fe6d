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

#ifndef AIDD_SCHEDULE_HPP
#define AIDD_SCHEDULE_HPP

#include <string>

namespace aidd {

enum class ScheduleKind { log_linear, constant };

// Scalar noise schedule sigma(t) on t in [0, 1] and its closed-form integral.
// survival(t) = exp(-integral_0^t sigma) is the probability that a token has
// not been absorbed by time t.
//
// log_linear: total noise gamma(t) = c * (m^(1-t) * M^t - m) with m =
// sigma_min, M = sigma_max, and c chosen so survival(T) equals
// terminal_survival exactly (default 1e-3). The -m offset anchors
// gamma(0) = 0, i.e. survival(0) = 1.
//
// constant: sigma(t) = sigma_const, gamma(t) = sigma_const * t. Used by the
// analytic tests; survival(1) = exp(-sigma_const).
class NoiseSchedule {
 public:
  static constexpr double kHorizon = 1.0;       // T
  static constexpr double kTimeFloor = 1e-4;    // epsilon sampling floor

  static NoiseSchedule log_linear(double sigma_min = 1e-3, double sigma_max = 7.0,
                                  double terminal_survival = 1e-3);
  static NoiseSchedule constant(double sigma);

  double sigma(double t) const;        // instantaneous rate, t in [0, T]
  double total_noise(double t) const;  // integral of sigma over [0, t]
  double survival(double t) const;     // exp(-total_noise(t))

  ScheduleKind kind() const noexcept { return kind_; }
  double sigma_min() const noexcept { return sigma_min_; }
  double sigma_max() const noexcept { return sigma_max_; }
  double sigma_const() const noexcept { return sigma_const_; }
  double terminal_survival() const { return survival(kHorizon); }
  // The exact target passed to log_linear(); serialization uses this so a
  // reconstructed schedule is bit-identical.
  double terminal_target() const noexcept { return terminal_target_; }

  std::string describe() const;

 private:
  NoiseSchedule() = default;
  void check_time(double t) const;

  ScheduleKind kind_ = ScheduleKind::log_linear;
  double sigma_min_ = 0.0;
  double sigma_max_ = 0.0;
  double sigma_const_ = 0.0;
  double terminal_target_ = 0.0;
  double scale_ = 1.0;       // c for the log_linear form
  double log_ratio_ = 0.0;   // ln(sigma_max / sigma_min)
};

}  // namespace aidd

#endif  // AIDD_SCHEDULE_HPP
