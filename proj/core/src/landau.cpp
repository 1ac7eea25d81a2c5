#include "icw/landau.hpp"

#include <cmath>
#include <string>

#include "icw/errors.hpp"

namespace icw {

namespace {
constexpr double kLog2 = 0.69314718055994530942;
constexpr double kGradTol = 1e-13;
constexpr double kDegeneracyTol = 1e-8;
}  // namespace

double log_cosh(double x) {
  const double a = std::fabs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - kLog2;
}

double landau_potential(const WeightLaw& law, const ModelParams& p, double x,
                        double s) {
  const double scale = std::sqrt(p.beta / law.moment(1));
  return 0.5 * x * x -
         law.average([&](double w) { return log_cosh(scale * w * (x + s) + p.h); });
}

double landau_derivative(const WeightLaw& law, const ModelParams& p, double x,
                         int order) {
  const double ratio = p.beta / law.moment(1);
  const double scale = std::sqrt(ratio);
  switch (order) {
    case 1:
      return x - law.average([&](double w) {
               return std::tanh(scale * w * x + p.h) * scale * w;
             });
    case 2:
      return 1.0 - law.average([&](double w) {
               const double th = std::tanh(scale * w * x + p.h);
               return (1.0 - th * th) * ratio * w * w;
             });
    case 3:
      return 2.0 * law.average([&](double w) {
               const double th = std::tanh(scale * w * x + p.h);
               return th * (1.0 - th * th) * ratio * scale * w * w * w;
             });
    default:
      fail(ErrorKind::validation, "derivative order must be 1, 2 or 3");
  }
}

double solve_fixed_point(const WeightLaw& law, const ModelParams& p) {
  // beta = 0 sits on the boundary of the uniqueness regime but the free
  // model is perfectly regular (G' is the identity); accept it
  if (p.beta == 0.0) return 0.0;
  if (!in_uniqueness_regime(law, p))
    fail(ErrorKind::regime,
         "parameters outside the uniqueness regime (beta = " +
             std::to_string(p.beta) + ", h = " + std::to_string(p.h) +
             ", beta_c = " + std::to_string(critical_beta(law)) + ")");
  if (p.h == 0.0) return 0.0;

  // |x*| < sqrt(beta E[W]) since |tanh| <= 1; pad with |h| for the bracket.
  const double bound = std::sqrt(p.beta * law.moment(1)) + std::fabs(p.h);
  double lo = 0.0, hi = (p.h > 0.0) ? bound : -bound;
  double g_lo = landau_derivative(law, p, lo, 1);
  double g_hi = landau_derivative(law, p, hi, 1);
  if (p.h < 0.0) {
    std::swap(lo, hi);
    std::swap(g_lo, g_hi);
  }
  if (!(g_lo < 0.0 && g_hi > 0.0))
    fail(ErrorKind::solver, "fixed point bracket does not change sign");

  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double g = landau_derivative(law, p, x, 1);
    if (std::fabs(g) <= kGradTol) break;
    if (g < 0.0)
      lo = x;
    else
      hi = x;
    // Newton step when it stays inside the bracket, bisection otherwise.
    const double g2 = landau_derivative(law, p, x, 2);
    double next = (g2 > 0.0) ? x - g / g2 : x;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  if (std::fabs(landau_derivative(law, p, x, 1)) > 1e-12)
    fail(ErrorKind::solver, "fixed point iteration did not reach tolerance");

  // coarse scan over the coercivity interval: no lower potential value
  const double g_x = landau_potential(law, p, x, 0.0);
  for (int k = -64; k <= 64; ++k) {
    const double y = bound * static_cast<double>(k) / 64.0;
    if (landau_potential(law, p, y, 0.0) < g_x - 1e-12)
      fail(ErrorKind::solver, "fixed point is not the global minimizer");
  }
  return x;
}

Observables compute_observables(const WeightLaw& law, const ModelParams& p,
                                std::size_t n) {
  const double ew = law.moment(1);
  const double ratio = p.beta / ew;
  const double scale = std::sqrt(ratio);
  const double x_star = solve_fixed_point(law, p);

  const auto th = [&](double w) { return std::tanh(scale * w * x_star + p.h); };
  const double mean_tanh = law.average([&](double w) { return th(w); });
  const double mean_tanh_sq = law.average([&](double w) {
    const double t = th(w);
    return t * t;
  });
  const double mean_sech_w = law.average([&](double w) {
    const double t = th(w);
    return (1.0 - t * t) * w;
  });
  const double curvature = landau_derivative(law, p, x_star, 2);
  if (curvature < kDegeneracyTol)
    fail(ErrorKind::degeneracy,
         "G''(x*) = " + std::to_string(curvature) +
             " is below tolerance; model too close to the critical line (beta_c = " +
             std::to_string(critical_beta(law)) + ")");

  Observables obs;
  obs.x_star = x_star;
  obs.magnetization = mean_tanh;
  obs.weighted_magnetization =
      law.average([&](double w) { return th(w) * w; });
  obs.sigma_sq = 1.0 / curvature;
  obs.susceptibility =
      1.0 - mean_tanh_sq + ratio * mean_sech_w * mean_sech_w / curvature;
  obs.weighted_susceptibility =
      obs.sigma_sq * law.average([&](double w) {
        const double t = th(w);
        return (1.0 - t * t) * w * w;
      });
  obs.cross_coef = std::sqrt(obs.weighted_susceptibility / obs.susceptibility) *
                   ratio * mean_sech_w;
  obs.lambda = 1.0 / static_cast<double>(n);
  obs.beta_c = critical_beta(law);
  return obs;
}

Observables compute_observables(const WeightSequence& ws, const ModelParams& p) {
  return compute_observables(ws.empirical_law(), p, ws.size());
}

}  // namespace icw
