#pragma once

// Adaptive-quadrature oracle for the Beta upper tail, independent of the
// continued-fraction implementation under test.

#include <cmath>
#include <functional>

namespace sclab::testing {

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive(const std::function<double(double)>& f, double a, double b, double fa,
                       double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return detail::adaptive(f, a, b, fa, fm, fb, detail::simpson(f, a, b, fa, fm, fb), tol, 40);
}

/// P(Y > theta) for Y ~ Beta(a, b) by integrating the density. When b < 1
/// the right endpoint is singular, so integrate in u = (1-x)^b, under which
/// the integrand becomes (1 - u^(1/b))^(a-1) / b and is smooth for theta > 0.
inline double beta_tail_quadrature(double theta, double a, double b) {
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double norm = std::exp(log_norm);
  if (b >= 1.0) {
    auto density = [&](double x) {
      return norm * std::pow(x, a - 1.0) * std::pow(1.0 - x, b - 1.0);
    };
    return integrate(density, theta, 1.0);
  }
  auto transformed = [&](double u) {
    return norm / b * std::pow(1.0 - std::pow(u, 1.0 / b), a - 1.0);
  };
  return integrate(transformed, 0.0, std::pow(1.0 - theta, b));
}

}  // namespace sclab::testing
