// Test-only oracles: independent reference implementations used to derive
// expected values. These deliberately avoid the library's own code paths.

#ifndef AIDD_TESTS_ORACLES_HPP
#define AIDD_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

namespace oracles {

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double fa, double fm, double fb,
                               double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fm, fb, simpson(f, a, b, fa, fm, fb),
                          tol, 48);
}

// Dense matrix exponential (Eigen's scaling-and-squaring Pade).
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& m) { return m.exp(); }

// trace((A B)^(1/2)) via the nonsymmetric eigendecomposition of A*B; valid
// for PSD A, B whose product has real nonnegative spectrum.
inline double trace_sqrt_product(const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& b) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a * b);
  std::complex<double> acc = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    acc += std::sqrt(es.eigenvalues()(i));
  }
  return acc.real();
}

// HTK mel scale.
inline double mel_of_hz(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

// Signal-to-noise ratio in dB of an estimate against a reference.
inline double snr_db(const std::vector<float>& reference,
                     const std::vector<float>& estimate) {
  double signal = 0.0;
  double noise = 0.0;
  const std::size_t n = std::min(reference.size(), estimate.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double r = reference[i];
    const double d = r - static_cast<double>(estimate[i]);
    signal += r * r;
    noise += d * d;
  }
  if (noise == 0.0) return 300.0;
  return 10.0 * std::log10(signal / noise);
}

// chi-square critical value at alpha = 0.01 for 7 degrees of freedom.
inline constexpr double kChi2Crit7_01 = 18.4753;

// Total-variation distance between two distributions.
inline double total_variation(const std::vector<double>& p,
                              const std::vector<double>& q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

}  // namespace oracles

#endif  // AIDD_TESTS_ORACLES_HPP
