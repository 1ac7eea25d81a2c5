#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "icw/landau.hpp"
#include "icw/model.hpp"
#include "icw/sampler.hpp"
#include "icw/weights.hpp"

namespace icw {

// Bounded solution of the Stein equation f'(x) - x f(x) = 1{x<=z} - Phi(z):
//   f_z(x) = sqrt(2 pi) e^{x^2/2} Phi(min(x,z)) (1 - Phi(max(x,z))),
// evaluated in log space through the scaled normal tails so the e^{x^2/2}
// factor never overflows; f' comes from the equation itself.
struct SteinSolution {
  double f;
  double f_prime;
};
SteinSolution stein_f(double z, double x);

// lambda, Lambda = [[1, -c], [0, 1/sigma^2]] and ell = first row of
// Lambda^{-1} = (1, c sigma^2).
struct RegressionData {
  double lambda;
  std::array<std::array<double, 2>, 2> matrix;
  std::array<double, 2> ell;
};
RegressionData regression_data(const Observables& obs, std::size_t n);

// Both sides of the two-dimensional regression identity
//   E[(X, X~) - (X', X~') | F_n] = lambda Lambda (X, X~) + lambda (R1+R2, R~1+R~2),
// which holds configuration by configuration as an algebraic identity; the
// residual is pure floating-point noise.
struct RegressionCheck {
  std::array<double, 2> lhs;
  std::array<double, 2> rhs;
  std::array<double, 2> residual;
};
RegressionCheck verify_regression(const WeightSequence& ws, const ModelParams& p,
                                  const Observables& obs, const Configuration& cfg);

// Per-configuration error terms of the regression equation and of the two
// conditional-expectation decompositions, together with the directly
// computed conditional expectations they decompose.
struct SteinDiagnostics {
  double x, x_tilde;
  double r1, r2, r1_tilde, r2_tilde;
  double r3, r4, r5;
  double r3_hat, r4_hat, r5_hat;
  double r3_bar, r4_bar, r5_bar;
  double r3_check, r4_check, r5_check;
  double first_term;   // |1 - (1/2 lambda) E[ell D D_1 | F_n]|
  double second_term;  // (1/lambda) |E[ |ell D| D_1 | F_n ]|
  double ell_r;        // R1 + R2 + c sigma^2 (R~1 + R~2)
};

// spin_means holds the exact Gibbs expectations E[sigma_i] (see
// spin_expectations), needed by the R4/R5 families.
SteinDiagnostics decomposition_terms(const WeightSequence& ws,
                                     const ModelParams& p, const Observables& obs,
                                     std::span<const double> spin_means,
                                     const Configuration& cfg);

// The three terms of the marginal Stein bound
//   d_K(X_n, Z) <= T1 + T2 + T3,
// with every conditional expectation taken given F_n and the outer
// expectation exact (full enumeration, n <= 14) or Monte Carlo over a
// sample batch (standard errors reported).
struct SteinBoundTerms {
  double t1, t2, t3;
  double t1_se, t2_se, t3_se;
  std::size_t count;
  bool exact;
  double total() const { return t1 + t2 + t3; }
};

SteinBoundTerms bound_terms_exact(const WeightSequence& ws, const ModelParams& p,
                                  const Observables& obs);
SteinBoundTerms bound_terms_sampled(const WeightSequence& ws,
                                    const ModelParams& p, const Observables& obs,
                                    const SampleBatch& batch);

// Pointwise bound rows for the error terms: R1, R~1 are bounded pointwise;
// R2, R~2 with the configuration's own X~^2; the R3 family with the
// configuration's own |X~|; the R4 family through E|X~| (passed in,
// computed from an exact law or a batch).
struct ErrorBoundRow {
  std::string term;
  double value;
  double bound;
  bool holds;
};
std::vector<ErrorBoundRow> errorterm_bounds(const WeightSequence& ws,
                                            const ModelParams& p,
                                            const Observables& obs,
                                            std::span<const double> spin_means,
                                            double mean_abs_x_tilde,
                                            const Configuration& cfg);

}  // namespace icw
