#pragma once

// Reference values computed independently of the library code paths.

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

namespace oracle {

/// exp(-z) I0(z) for z >= 0.
inline double scaled_bessel_i0(double z) {
  if (z < 500.0) return std::exp(-z) * boost::math::cyl_bessel_i(0, z);
  // Hankel expansion; terms fall fast for z >= 500.
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 8; ++k) {
    term *= (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * z);
    sum += term;
  }
  return sum / std::sqrt(2.0 * M_PI * z);
}

/// Q1(a, b) by adaptive Gauss-Kronrod quadrature of its defining integral
///   int_b^inf x exp(-(x^2 + a^2)/2) I0(a x) dx.
inline double marcum_q1_integral(double a, double b) {
  auto f = [a](double x) { return x * std::exp(-0.5 * (x - a) * (x - a)) * scaled_bessel_i0(a * x); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double upper = std::max(a, b) + 40.0;
  double total = 0.0;
  if (b < a) total += GK::integrate(f, b, a, 15, 1e-12);
  total += GK::integrate(f, std::max(a, b), upper, 15, 1e-12);
  return total;
}

/// Minimum total power for a single user over the matched filter: zeta s^2 / |h|^2.
inline double matched_filter_power(double zeta, double sigma2, double h_norm2) { return zeta * sigma2 / h_norm2; }

}  // namespace oracle
