#include "icw/normal.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace icw {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kInvSqrtPi = 0.56418958354775628695;
}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double normal_cdf(double x) {
  // Phi(x) = erfc(-x/sqrt(2)) / 2, evaluated on the negative side and
  // mirrored, so Phi(x) + Phi(-x) == 1 exactly in floating point.
  if (x <= 0.0) return 0.5 * std::erfc(-x * kInvSqrt2);
  return 1.0 - 0.5 * std::erfc(x * kInvSqrt2);
}

double erfcx(double x) {
  if (x < 2.5) return std::exp(x * x) * std::erfc(x);
  // Laplace continued fraction
  //   sqrt(pi) e^{x^2} erfc(x) = 1 / (x + 1/(2x + 2/(x + 3/(2x + ...))))
  // evaluated with the modified Lentz algorithm.
  const double tiny = 1e-300;
  double f = x;
  double c = f;
  double d = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double a = static_cast<double>(k);
    const double b = (k % 2 == 1) ? 2.0 * x : x;
    d = b + a * d;
    if (d == 0.0) d = tiny;
    c = b + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return kInvSqrtPi / f;
}

double log_normal_sf(double x) {
  if (x <= 5.0) return std::log(0.5 * std::erfc(x * kInvSqrt2));
  return -0.5 * x * x + std::log(0.5 * erfcx(x * kInvSqrt2));
}

double log_normal_cdf(double x) { return log_normal_sf(-x); }

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace icw
