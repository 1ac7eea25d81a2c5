#pragma once

namespace icw {

// Standard normal density.
double normal_pdf(double x);

// Standard normal CDF with absolute error below 1e-14, built on the libm
// rational/continued-fraction erfc. Evaluated so that Phi(x) + Phi(-x) == 1
// holds exactly in floating point.
double normal_cdf(double x);

// Scaled complementary error function exp(x^2) erfc(x) for x >= 0.
// exp(x*x)*erfc(x) directly for small x, Laplace continued fraction for
// large x; needed to evaluate Gaussian tails far beyond the erfc underflow
// point.
double erfcx(double x);

// log(1 - Phi(x)) and log Phi(x), stable over the whole real line.
double log_normal_sf(double x);
double log_normal_cdf(double x);

// log(exp(a) + exp(b)) without overflow; -inf operands allowed.
double log_add_exp(double a, double b);

}  // namespace icw
