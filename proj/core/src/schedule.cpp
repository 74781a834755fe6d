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

#include "aidd/schedule.hpp"

#include <cmath>

#include "aidd/errors.hpp"

namespace aidd {

NoiseSchedule NoiseSchedule::log_linear(double sigma_min, double sigma_max,
                                        double terminal_survival) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min)) {
    raise(errc::invalid_parameter, "need 0 < sigma_min < sigma_max");
  }
  if (!(terminal_survival > 0.0 && terminal_survival < 1.0)) {
    raise(errc::invalid_parameter, "terminal survival must be in (0, 1)");
  }
  NoiseSchedule s;
  s.kind_ = ScheduleKind::log_linear;
  s.sigma_min_ = sigma_min;
  s.sigma_max_ = sigma_max;
  s.terminal_target_ = terminal_survival;
  s.log_ratio_ = std::log(sigma_max / sigma_min);
  s.scale_ = -std::log(terminal_survival) / (sigma_max - sigma_min);
  return s;
}

NoiseSchedule NoiseSchedule::constant(double sigma) {
  if (!(sigma > 0.0)) raise(errc::invalid_parameter, "sigma must be positive");
  NoiseSchedule s;
  s.kind_ = ScheduleKind::constant;
  s.sigma_const_ = sigma;
  return s;
}

void NoiseSchedule::check_time(double t) const {
  if (!(t >= 0.0 && t <= kHorizon)) {
    raise(errc::invalid_time,
          "t = " + std::to_string(t) + " outside [0, " + std::to_string(kHorizon) + "]");
  }
}

double NoiseSchedule::sigma(double t) const {
  check_time(t);
  if (kind_ == ScheduleKind::constant) return sigma_const_;
  // d/dt of c * (m^(1-t) M^t - m) = c * ln(M/m) * m^(1-t) M^t
  return scale_ * log_ratio_ *
         std::exp(std::log(sigma_min_) + t * log_ratio_);
}

double NoiseSchedule::total_noise(double t) const {
  check_time(t);
  if (kind_ == ScheduleKind::constant) return sigma_const_ * t;
  const double g = std::exp(std::log(sigma_min_) + t * log_ratio_);
  return scale_ * (g - sigma_min_);
}

double NoiseSchedule::survival(double t) const {
  return std::exp(-total_noise(t));
}

std::string NoiseSchedule::describe() const {
  if (kind_ == ScheduleKind::constant) {
    return "constant(sigma=" + std::to_string(sigma_const_) + ")";
  }
  return "log_linear(sigma_min=" + std::to_string(sigma_min_) +
         ", sigma_max=" + std::to_string(sigma_max_) + ")";
}

}  // namespace aidd
