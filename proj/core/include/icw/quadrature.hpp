#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "icw/model.hpp"
#include "icw/weights.hpp"

namespace icw {

// Integrand generator for the auxiliary-field integrals:
//   P(x) = x^2/2 - (1/n) sum_i log cosh(scale * w_i * x + field_i),
// with terms grouped by identical (w, field) pairs. The plain model has
// field_i = h; tilting by s in the weighted-sum CGF shifts field_i to
// scale*w_i*s + h; general site fields give h + s*t_i.
class TiltedPotential {
 public:
  struct Term {
    double w;
    double field;
    double frac;  // multiplicity / n
  };

  static TiltedPotential gibbs(const WeightSequence& ws, const ModelParams& p,
                               double s = 0.0);
  static TiltedPotential with_site_fields(const WeightSequence& ws,
                                          const ModelParams& p,
                                          std::span<const double> t, double s);

  double value(double x) const;
  double deriv1(double x) const;
  double deriv2(double x) const;

  double scale() const { return scale_; }
  // Coercivity data: P(x) >= x^2/2 - slope*|x| - offset.
  double coercivity_slope() const;
  double coercivity_offset() const;
  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
  double scale_ = 0.0;
};

struct QuadratureOptions {
  double rel_tol = 1e-12;
  int max_intervals = 20000;
};

struct QuadratureDiagnostics {
  double window_lo = 0.0;     // integration window in the y = x/sqrt(n) frame
  double window_hi = 0.0;
  double log_tail_bound = 0;  // certified log of the neglected tail mass,
                              // relative to the computed integral
  double error_estimate = 0;  // relative, from Gauss-Kronrod differences
  int evaluations = 0;
  int intervals = 0;
};

// log of  integral exp(-n P(x/sqrt(n) + a)) dx  over the real line. The
// value does not depend on the centering a (plain change of variables), so
// none is taken; internally the integrand is max-subtracted and the window
// is chosen from the coercivity bound with a certified Gaussian tail.
// All local minima of P are located by a derivative sign scan first, so
// secondary wells (beta > beta_c with a field) are integrated, not skipped.
double log_laplace_integral(const TiltedPotential& pot, std::size_t n,
                            QuadratureDiagnostics* diag = nullptr,
                            const QuadratureOptions& opts = {});

double log_laplace_integral(const WeightSequence& ws, const ModelParams& p,
                            double s, QuadratureDiagnostics* diag = nullptr,
                            const QuadratureOptions& opts = {});

struct CgfResult {
  double s = 0.0;
  double value = 0.0;                         // c_n(s)
  double first_derivative_at_zero = 0.0;      // Richardson central differences,
  double second_derivative_at_zero = 0.0;     // steps 1e-3 and 5e-4
  QuadratureDiagnostics diagnostics;
};

// c_n(s) = (1/n) log E[exp(s sqrt(beta/E[W_n]) sum_i w_i sigma_i)], as the
// difference of two auxiliary-field log-integrals. beta = 0 short-circuits
// to the closed product form.
CgfResult cgf(const WeightSequence& ws, const ModelParams& p, double s,
              const QuadratureOptions& opts = {});

// c~_n(s) = (1/n) log E[exp(s sum_i t_i sigma_i)] for arbitrary site
// coefficients t (length n).
CgfResult cgf_general(const WeightSequence& ws, const ModelParams& p,
                      std::span<const double> t, double s,
                      const QuadratureOptions& opts = {});

// Normalized density of the auxiliary field z, proportional to
// exp(-n P(z/sqrt(n))), tabulated on a mass-adaptive grid of 2^14 nodes with
// an inverse-CDF sampler (monotone cubic interpolation). Tail mass beyond
// the truncation window is assigned to the boundary nodes and recorded.
class HsDensity {
 public:
  static HsDensity build(const WeightSequence& ws, const ModelParams& p,
                         const QuadratureOptions& opts = {});

  // Inverse CDF; u in [0,1).
  double sample(double u) const;

  double mode() const { return mode_; }
  double tail_mass() const { return tail_mass_; }
  double log_density(double z) const;

  const std::vector<double>& grid() const { return z_; }
  const std::vector<double>& cdf() const { return cdf_; }
  const std::vector<double>& pdf() const { return pdf_; }

 private:
  std::vector<double> z_, cdf_, pdf_;
  double mode_ = 0.0;
  double tail_mass_ = 0.0;
  double log_norm_ = 0.0;  // log of |integral| in z units
  double potential_min_ = 0.0;
  double sqrt_n_ = 1.0;
  TiltedPotential pot_;
  std::size_t n_ = 0;
};

}  // namespace icw
