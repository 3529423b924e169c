// First-order Marcum Q function.
//
// Q1(a, b) is the survival function of a non-central chi-square variable with
// two degrees of freedom and non-centrality a^2, evaluated at b^2. Expanding
// the Bessel series in its Poisson-mixture form gives
//
//   Q1(a, b)     = sum_j Pois(j; a^2/2) * Q(j + 1, b^2/2)
//   1 - Q1(a, b) = sum_j Pois(j; a^2/2) * P(j + 1, b^2/2)
//
// with P, Q the regularized incomplete gamma functions. Both sums have only
// non-negative terms, so each side keeps relative accuracy on its own.

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "isac/interference.hpp"

namespace isac {

namespace {

struct MarcumPair {
  double q;     // Q1(a, b)
  double miss;  // 1 - Q1(a, b)
};

// exp(-(a-b)^2/2) bounds the smaller of the two tails. Below this exponent
// the smaller tail underflows double precision.
constexpr double kUnderflowExponent = 745.0;

MarcumPair marcum_pair(double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw std::domain_error("Marcum Q needs finite non-negative arguments");

  if (b == 0.0) return {1.0, 0.0};
  const double d = a - b;
  if (d > 0.0 && 0.5 * d * d > kUnderflowExponent) return {1.0, 0.0};
  if (d < 0.0 && 0.5 * d * d > kUnderflowExponent) return {0.0, 1.0};

  const double alpha = 0.5 * a * a;
  const double beta = 0.5 * b * b;

  if (alpha == 0.0) {
    // Only the j = 0 term survives.
    return {std::exp(-beta), -std::expm1(-beta)};
  }

  const double log_alpha = std::log(alpha);
  const double spread = 12.0 * std::sqrt(alpha) + 40.0;
  const long j_lo = static_cast<long>(std::max(0.0, std::floor(alpha - spread)));

  double q = 0.0;
  double miss = 0.0;
  for (long j = j_lo;; ++j) {
    const double jd = static_cast<double>(j);
    const double weight = std::exp(-alpha + jd * log_alpha - std::lgamma(jd + 1.0));
    if (weight > 0.0) {
      q += weight * boost::math::gamma_q(jd + 1.0, beta);
      miss += weight * boost::math::gamma_p(jd + 1.0, beta);
    }
    // Poisson tail beyond j is bounded by a geometric series with ratio r.
    if (jd > alpha) {
      const double r = alpha / (jd + 2.0);
      if (weight * r / (1.0 - r) < 1e-30 * std::max(q, 1e-300) || weight == 0.0) break;
    }
  }
  return {std::min(q, 1.0), std::min(miss, 1.0)};
}

}  // namespace

double marcum_q1(double a, double b) {
  const MarcumPair p = marcum_pair(a, b);
  return p.miss < 0.5 ? 1.0 - p.miss : p.q;
}

double marcum_q1_complement(double a, double b) {
  const MarcumPair p = marcum_pair(a, b);
  return p.q < 0.5 ? 1.0 - p.q : p.miss;
}

double detection_probability(double gamma_r, double p_f) {
  if (!(gamma_r >= 0.0) || !(p_f > 0.0 && p_f < 1.0))
    throw std::domain_error("detection_probability: need gamma_r >= 0 and 0 < p_f < 1");
  return marcum_q1(std::sqrt(2.0 * gamma_r), std::sqrt(-2.0 * std::log(p_f)));
}

double miss_probability(double gamma_r, double p_f) {
  if (!(gamma_r >= 0.0) || !(p_f > 0.0 && p_f < 1.0))
    throw std::domain_error("miss_probability: need gamma_r >= 0 and 0 < p_f < 1");
  return marcum_q1_complement(std::sqrt(2.0 * gamma_r), std::sqrt(-2.0 * std::log(p_f)));
}

}  // namespace isac
