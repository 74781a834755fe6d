#include <doctest.h>

#include <cmath>

#include "aidd/errors.hpp"
#include "aidd/schedule.hpp"
#include "oracles.hpp"

using aidd::Error;
using aidd::errc;
using aidd::NoiseSchedule;

TEST_CASE("survival at t = 0 is exactly one") {
  CHECK(NoiseSchedule::constant(1.0).survival(0.0) == 1.0);
  CHECK(NoiseSchedule::log_linear().survival(0.0) == 1.0);
}

TEST_CASE("constant sigma = 1 gives survival e^-1 at t = 1") {
  const NoiseSchedule s = NoiseSchedule::constant(1.0);
  CHECK(s.survival(1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(s.total_noise(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.sigma(0.25) == 1.0);
}

TEST_CASE("log-linear total noise matches quadrature of sigma") {
  const NoiseSchedule s = NoiseSchedule::log_linear(1e-3, 7.0, 1e-3);
  for (double t : {1e-4, 0.01, 0.137, 0.5, 0.83, 1.0}) {
    const double numeric =
        oracles::integrate([&](double u) { return s.sigma(u); }, 0.0, t);
    CHECK(s.total_noise(t) == doctest::Approx(numeric).epsilon(1e-8));
  }
}

TEST_CASE("log-linear terminal survival hits the requested value exactly") {
  for (double target : {1e-3, 1e-2, 1e-4}) {
    const NoiseSchedule s = NoiseSchedule::log_linear(0.01, 5.0, target);
    CHECK(s.survival(1.0) == doctest::Approx(target).epsilon(1e-12));
  }
}

TEST_CASE("total noise is strictly increasing and sigma positive") {
  const NoiseSchedule s = NoiseSchedule::log_linear();
  double prev = s.total_noise(0.0);
  for (int i = 1; i <= 100; ++i) {
    const double t = i / 100.0;
    CHECK(s.sigma(t) > 0.0);
    const double g = s.total_noise(t);
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("time outside the horizon is rejected") {
  const NoiseSchedule s = NoiseSchedule::constant(1.0);
  CHECK_THROWS_AS(s.survival(-0.01), Error);
  CHECK_THROWS_AS(s.survival(1.01), Error);
  try {
    s.survival(2.0);
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_time);
  }
}

TEST_CASE("invalid schedule parameters are rejected") {
  CHECK_THROWS_AS(NoiseSchedule::constant(0.0), Error);
  CHECK_THROWS_AS(NoiseSchedule::constant(-1.0), Error);
  CHECK_THROWS_AS(NoiseSchedule::log_linear(0.0, 7.0), Error);
  CHECK_THROWS_AS(NoiseSchedule::log_linear(2.0, 1.0), Error);
  CHECK_THROWS_AS(NoiseSchedule::log_linear(1e-3, 7.0, 1.5), Error);
}
