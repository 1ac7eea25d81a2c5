#pragma once

#include <cstddef>

#include "icw/model.hpp"
#include "icw/weights.hpp"

namespace icw {

// log cosh(x) = |x| + log1p(e^{-2|x|}) - log 2; no overflow for any x.
double log_cosh(double x);

// Landau-type potential of the model,
//   G(x; s) = x^2/2 - E[ log cosh( sqrt(beta/E[W]) W (x+s) + h ) ],
// whose curvature at the minimizer sets the weighted susceptibility and the
// variance of the auxiliary field.
double landau_potential(const WeightLaw& law, const ModelParams& p, double x,
                        double s = 0.0);

// Analytic d^k/dx^k G(x; 0) for order in {1, 2, 3}:
//   G'   = x - E[tanh(u) sqrt(beta/E[W]) W]
//   G''  = 1 - E[(1 - tanh^2(u)) (beta/E[W]) W^2]
//   G''' = 2 E[tanh(u)(1 - tanh^2(u)) (beta/E[W])^{3/2} W^3]
// with u = sqrt(beta/E[W]) W x + h.
double landau_derivative(const WeightLaw& law, const ModelParams& p, double x,
                         int order);

// The sign-of-h root of G' (the global minimizer of G inside the uniqueness
// regime): bisection on a bracket that tanh-boundedness guarantees, then
// Newton polish to |G'| <= 1e-13. A coarse scan confirms the returned point
// is the global minimum. Throws a regime error outside the uniqueness
// regime and a solver error on non-convergence.
double solve_fixed_point(const WeightLaw& law, const ModelParams& p);

// Scalar observables of the model at (law, beta, h) and system size n.
struct Observables {
  double x_star;                   // fixed point of G'
  double magnetization;            // M_n = E[tanh(u*)]
  double weighted_magnetization;   // E[tanh(u*) W]  (= sqrt(E[W]/beta) x* for beta > 0)
  double susceptibility;           // chi_n
  double weighted_susceptibility;  // chi~_n = sigma^2 E[(1 - tanh^2(u*)) W^2]
  double sigma_sq;                 // 1 / G''(x*)
  double cross_coef;               // c, the off-diagonal regression coefficient
  double lambda;                   // 1/n
  double beta_c;                   // E[W]/E[W^2]
};

// Throws a degeneracy error when G''(x*) < 1e-8 (proximity to the critical
// line would otherwise blow up chi silently).
Observables compute_observables(const WeightLaw& law, const ModelParams& p,
                                std::size_t n);
Observables compute_observables(const WeightSequence& ws, const ModelParams& p);

}  // namespace icw
