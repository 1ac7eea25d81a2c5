#include "icw/stein.hpp"

#include <cmath>
#include <numbers>

#include "icw/errors.hpp"
#include "icw/normal.hpp"

namespace icw {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
const double kSqrt2PiOver4 = std::sqrt(2.0 * std::numbers::pi) / 4.0;

// shared per-configuration quantities
struct ConfigScratch {
  double m, m_tilde;
  double x, x_tilde;
};

ConfigScratch config_stats(const WeightSequence& ws, const Observables& obs,
                           const Configuration& cfg) {
  const double n = static_cast<double>(ws.size());
  ConfigScratch cs;
  cs.m = static_cast<double>(spin_sum(cfg)) / n;
  cs.m_tilde = weighted_spin_sum(ws, cfg) / n;
  cs.x = std::sqrt(n) * (cs.m - obs.magnetization) / std::sqrt(obs.susceptibility);
  cs.x_tilde = std::sqrt(n) * (cs.m_tilde - obs.weighted_magnetization) /
               std::sqrt(obs.weighted_susceptibility);
  return cs;
}

// the three direct conditional quantities of the bound; no E[sigma_i] needed
struct DirectTerms {
  double first_term;
  double second_term;
  double ell_r;
};

DirectTerms direct_terms(const WeightSequence& ws, const ModelParams& p,
                         const Observables& obs, const Configuration& cfg) {
  const std::size_t n = ws.size();
  const double nd = static_cast<double>(n);
  const double ew = ws.moment(1);
  const double ratio = p.beta / ew;
  const double scale = std::sqrt(ratio);
  const ConfigScratch cs = config_stats(ws, obs, cfg);

  const double chi = obs.susceptibility;
  const double chit = obs.weighted_susceptibility;
  const double cross = obs.cross_coef * obs.sigma_sq / std::sqrt(chi * chit);

  double sum_a = 0.0;         // (1 - sigma tanh_loo) * bracket
  double sum_b = 0.0;         // bracket * (sigma - tanh_loo)
  double sum_m_loo = 0.0;     // tanh_m - tanh_loo
  double sum_w_m_loo = 0.0;   // w (tanh_m - tanh_loo)
  double sum_star_m = 0.0;    // tanh_star - tanh_m
  double sum_w_m_star = 0.0;  // w (tanh_m - tanh_star)
  for (std::size_t i = 0; i < n; ++i) {
    const double w = ws[i];
    const double sigma = static_cast<double>(cfg[i]);
    const double tanh_star = std::tanh(scale * w * obs.x_star + p.h);
    const double tanh_m = std::tanh(ratio * w * cs.m_tilde + p.h);
    const double tanh_loo =
        std::tanh(ratio * w * (cs.m_tilde - w * sigma / nd) + p.h);
    const double bracket = 1.0 / chi + cross * w;
    sum_a += (1.0 - sigma * tanh_loo) * bracket;
    sum_b += bracket * (sigma - tanh_loo);
    sum_m_loo += tanh_m - tanh_loo;
    sum_w_m_loo += w * (tanh_m - tanh_loo);
    sum_star_m += tanh_star - tanh_m;
    sum_w_m_star += w * (tanh_m - tanh_star);
  }

  const double sqrt_n = std::sqrt(nd);
  const double r1 = sqrt_n / std::sqrt(chi) * sum_m_loo / nd;
  const double r2 = sqrt_n / std::sqrt(chi) * sum_star_m / nd +
                    obs.cross_coef * cs.x_tilde;
  const double r1t = sqrt_n / std::sqrt(chit) * sum_w_m_loo / nd;
  // Taylor-remainder form of R~2 (identical to the display; finite at beta=0)
  const double r2t =
      sqrt_n / std::sqrt(chit) *
      ((cs.m_tilde - obs.weighted_magnetization) * (1.0 - 1.0 / obs.sigma_sq) -
       sum_w_m_star / nd);

  DirectTerms dt;
  dt.first_term = std::fabs(1.0 - sum_a / nd);
  dt.second_term = std::fabs(2.0 * sum_b / nd);
  dt.ell_r = r1 + r2 + obs.cross_coef * obs.sigma_sq * (r1t + r2t);
  return dt;
}

}  // namespace

SteinSolution stein_f(double z, double x) {
  const double a = std::min(x, z);
  const double b = std::max(x, z);
  const double log_f =
      kLogSqrt2Pi + 0.5 * x * x + log_normal_cdf(a) + log_normal_sf(b);
  SteinSolution sol;
  sol.f = std::exp(log_f);
  sol.f_prime = x * sol.f + (x <= z ? 1.0 : 0.0) - normal_cdf(z);
  return sol;
}

RegressionData regression_data(const Observables& obs, std::size_t n) {
  RegressionData rd;
  rd.lambda = 1.0 / static_cast<double>(n);
  rd.matrix = {{{1.0, -obs.cross_coef}, {0.0, 1.0 / obs.sigma_sq}}};
  rd.ell = {1.0, obs.cross_coef * obs.sigma_sq};
  return rd;
}

RegressionCheck verify_regression(const WeightSequence& ws, const ModelParams& p,
                                  const Observables& obs,
                                  const Configuration& cfg) {
  const std::size_t n = ws.size();
  if (cfg.size() != n) fail(ErrorKind::dimension, "configuration size mismatch");
  const double nd = static_cast<double>(n);
  const double ew = ws.moment(1);
  const double ratio = p.beta / ew;
  const double scale = std::sqrt(ratio);
  const ConfigScratch cs = config_stats(ws, obs, cfg);
  const double sqrt_n = std::sqrt(nd);
  const double chi = obs.susceptibility;
  const double chit = obs.weighted_susceptibility;

  double sum_lhs = 0.0, sum_w_lhs = 0.0;
  double sum_m_loo = 0.0, sum_w_m_loo = 0.0, sum_star_m = 0.0, sum_w_m_star = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = ws[i];
    const double sigma = static_cast<double>(cfg[i]);
    const double tanh_star = std::tanh(scale * w * obs.x_star + p.h);
    const double tanh_m = std::tanh(ratio * w * cs.m_tilde + p.h);
    const double tanh_loo =
        std::tanh(ratio * w * (cs.m_tilde - w * sigma / nd) + p.h);
    sum_lhs += sigma - tanh_loo;
    sum_w_lhs += w * (sigma - tanh_loo);
    sum_m_loo += tanh_m - tanh_loo;
    sum_w_m_loo += w * (tanh_m - tanh_loo);
    sum_star_m += tanh_star - tanh_m;
    sum_w_m_star += w * (tanh_m - tanh_star);
  }

  const double r1 = sqrt_n / std::sqrt(chi) * sum_m_loo / nd;
  const double r2 =
      sqrt_n / std::sqrt(chi) * sum_star_m / nd + obs.cross_coef * cs.x_tilde;
  const double r1t = sqrt_n / std::sqrt(chit) * sum_w_m_loo / nd;
  const double r2t =
      sqrt_n / std::sqrt(chit) *
      ((cs.m_tilde - obs.weighted_magnetization) * (1.0 - 1.0 / obs.sigma_sq) -
       sum_w_m_star / nd);

  const double lambda = 1.0 / nd;
  RegressionCheck check;
  check.lhs = {sum_lhs / (sqrt_n * std::sqrt(chi) * nd),
               sum_w_lhs / (sqrt_n * std::sqrt(chit) * nd)};
  check.rhs = {lambda * (cs.x - obs.cross_coef * cs.x_tilde) + lambda * (r1 + r2),
               lambda * cs.x_tilde / obs.sigma_sq + lambda * (r1t + r2t)};
  check.residual = {check.lhs[0] - check.rhs[0], check.lhs[1] - check.rhs[1]};
  return check;
}

SteinDiagnostics decomposition_terms(const WeightSequence& ws,
                                     const ModelParams& p, const Observables& obs,
                                     std::span<const double> spin_means,
                                     const Configuration& cfg) {
  const std::size_t n = ws.size();
  if (cfg.size() != n || spin_means.size() != n)
    fail(ErrorKind::dimension, "configuration / spin-mean size mismatch");
  const double nd = static_cast<double>(n);
  const double ew = ws.moment(1);
  const double ratio = p.beta / ew;
  const double scale = std::sqrt(ratio);
  const ConfigScratch cs = config_stats(ws, obs, cfg);
  const double sqrt_n = std::sqrt(nd);
  const double chi = obs.susceptibility;
  const double chit = obs.weighted_susceptibility;
  const double cross = obs.cross_coef * obs.sigma_sq / std::sqrt(chi * chit);

  double sum_a = 0.0, sum_b = 0.0;
  double sum_m_loo = 0.0, sum_w_m_loo = 0.0, sum_star_m = 0.0, sum_w_m_star = 0.0;
  double s3 = 0.0, s4 = 0.0, s5 = 0.0;
  double s3h = 0.0, s4h = 0.0, s5h = 0.0;
  double s3b = 0.0, s4b = 0.0, s5b = 0.0;
  double s3c = 0.0, s4c = 0.0, s5c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = ws[i];
    const double sigma = static_cast<double>(cfg[i]);
    const double mean_i = spin_means[i];
    const double tanh_star = std::tanh(scale * w * obs.x_star + p.h);
    const double tanh_m = std::tanh(ratio * w * cs.m_tilde + p.h);
    const double tanh_loo =
        std::tanh(ratio * w * (cs.m_tilde - w * sigma / nd) + p.h);
    const double bracket = 1.0 / chi + cross * w;
    sum_a += (1.0 - sigma * tanh_loo) * bracket;
    sum_b += bracket * (sigma - tanh_loo);
    sum_m_loo += tanh_m - tanh_loo;
    sum_w_m_loo += w * (tanh_m - tanh_loo);
    sum_star_m += tanh_star - tanh_m;
    sum_w_m_star += w * (tanh_m - tanh_star);

    const double gap = tanh_star - tanh_loo;
    s3 += sigma * gap;
    s4 += tanh_star * (tanh_star - mean_i);
    s5 += tanh_star * (mean_i - sigma);
    s3h += w * sigma * gap;
    s4h += w * tanh_star * (tanh_star - mean_i);
    s5h += w * tanh_star * (mean_i - sigma);
    s3b += gap;
    s4b += mean_i - tanh_star;
    s5b += sigma - mean_i;
    s3c += w * gap;
    s4c += w * (mean_i - tanh_star);
    s5c += w * (sigma - mean_i);
  }

  SteinDiagnostics d;
  d.x = cs.x;
  d.x_tilde = cs.x_tilde;
  d.r1 = sqrt_n / std::sqrt(chi) * sum_m_loo / nd;
  d.r2 = sqrt_n / std::sqrt(chi) * sum_star_m / nd + obs.cross_coef * cs.x_tilde;
  d.r1_tilde = sqrt_n / std::sqrt(chit) * sum_w_m_loo / nd;
  d.r2_tilde =
      sqrt_n / std::sqrt(chit) *
      ((cs.m_tilde - obs.weighted_magnetization) * (1.0 - 1.0 / obs.sigma_sq) -
       sum_w_m_star / nd);
  d.r3 = s3 / (chi * nd);
  d.r4 = s4 / (chi * nd);
  d.r5 = s5 / (chi * nd);
  d.r3_hat = cross * s3h / nd;
  d.r4_hat = cross * s4h / nd;
  d.r5_hat = cross * s5h / nd;
  d.r3_bar = s3b / (chi * nd);
  d.r4_bar = s4b / (chi * nd);
  d.r5_bar = s5b / (chi * nd);
  d.r3_check = cross * s3c / nd;
  d.r4_check = cross * s4c / nd;
  d.r5_check = cross * s5c / nd;
  d.first_term = std::fabs(1.0 - sum_a / nd);
  d.second_term = std::fabs(2.0 * sum_b / nd);
  d.ell_r = d.r1 + d.r2 + obs.cross_coef * obs.sigma_sq * (d.r1_tilde + d.r2_tilde);
  return d;
}

SteinBoundTerms bound_terms_exact(const WeightSequence& ws, const ModelParams& p,
                                  const Observables& obs) {
  const std::size_t n = ws.size();
  if (n > 14)
    fail(ErrorKind::size, "exact bound terms enumerate all configurations; n <= 14");
  const double ell = ws.total();

  // first pass: max log weight for stable normalization
  const std::uint64_t count = 1ull << n;
  double hi = -1e308;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    std::int64_t s = 0;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1ull << i)) {
        ++s;
        t += ws[i];
      } else {
        --s;
        t -= ws[i];
      }
    }
    hi = std::max(hi, p.beta * t * t / (2.0 * ell) + p.h * s);
  }

  long double z = 0.0L, t1 = 0.0L, t2 = 0.0L, t3 = 0.0L;
  Configuration cfg(n);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    std::int64_t s = 0;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1ull << i)) {
        cfg[i] = 1;
        ++s;
        t += ws[i];
      } else {
        cfg[i] = -1;
        --s;
        t -= ws[i];
      }
    }
    const double u =
        std::exp(p.beta * t * t / (2.0 * ell) + p.h * s - hi);
    const DirectTerms dt = direct_terms(ws, p, obs, cfg);
    z += u;
    t1 += u * dt.first_term;
    t2 += u * dt.second_term;
    t3 += u * std::fabs(dt.ell_r);
  }

  SteinBoundTerms out;
  out.t1 = static_cast<double>(t1 / z);
  out.t2 = static_cast<double>(t2 / z);
  out.t3 = kSqrt2PiOver4 * static_cast<double>(t3 / z);
  out.t1_se = out.t2_se = out.t3_se = 0.0;
  out.count = count;
  out.exact = true;
  return out;
}

SteinBoundTerms bound_terms_sampled(const WeightSequence& ws,
                                    const ModelParams& p, const Observables& obs,
                                    const SampleBatch& batch) {
  const std::size_t count = batch.configurations.size();
  if (count < 2) fail(ErrorKind::validation, "need at least two configurations");
  long double s1 = 0.0L, s2 = 0.0L, s3 = 0.0L;
  long double q1 = 0.0L, q2 = 0.0L, q3 = 0.0L;
  for (const auto& cfg : batch.configurations) {
    const DirectTerms dt = direct_terms(ws, p, obs, cfg);
    const double a = dt.first_term, b = dt.second_term, c = std::fabs(dt.ell_r);
    s1 += a;
    s2 += b;
    s3 += c;
    q1 += a * a;
    q2 += b * b;
    q3 += c * c;
  }
  const double nd = static_cast<double>(count);
  auto finish = [&](long double s, long double q, double& mean, double& se) {
    mean = static_cast<double>(s / nd);
    const double var = std::max(0.0, static_cast<double>(q / nd) - mean * mean);
    se = std::sqrt(var / nd);
  };
  SteinBoundTerms out;
  finish(s1, q1, out.t1, out.t1_se);
  finish(s2, q2, out.t2, out.t2_se);
  finish(s3, q3, out.t3, out.t3_se);
  out.t3 *= kSqrt2PiOver4;
  out.t3_se *= kSqrt2PiOver4;
  out.count = count;
  out.exact = false;
  return out;
}

std::vector<ErrorBoundRow> errorterm_bounds(const WeightSequence& ws,
                                            const ModelParams& p,
                                            const Observables& obs,
                                            std::span<const double> spin_means,
                                            double mean_abs_x_tilde,
                                            const Configuration& cfg) {
  const SteinDiagnostics d = decomposition_terms(ws, p, obs, spin_means, cfg);
  const double nd = static_cast<double>(ws.size());
  const double sqrt_n = std::sqrt(nd);
  const double m1 = ws.moment(1), m2 = ws.moment(2), m3 = ws.moment(3);
  const double chi = obs.susceptibility;
  const double chit = obs.weighted_susceptibility;
  const double beta = p.beta;
  const double c_s2 = obs.cross_coef * obs.sigma_sq;
  const double abs_xt = std::fabs(d.x_tilde);
  const double xt_sq = d.x_tilde * d.x_tilde;

  const double bound_r1 = beta / std::sqrt(chi) * (m2 / m1) / sqrt_n;
  const double bound_r1t = beta / std::sqrt(chit) * (m3 / m1) / sqrt_n;
  const double bound_r2 =
      chit / std::sqrt(chi) * (beta / m1) * (beta / m1) * m2 * xt_sq / sqrt_n;
  const double bound_r2t =
      2.0 * std::sqrt(chit) * (beta / m1) * (beta / m1) * m3 * xt_sq / sqrt_n;
  const auto bound_r3_family = [&](double xt_term) {
    return beta * std::sqrt(chit) / chi * xt_term / sqrt_n +
           beta / chi * (m2 / m1) / nd;
  };
  const auto bound_r3hat_family = [&](double xt_term) {
    return beta * c_s2 / std::sqrt(chi) * (m2 / m1) * xt_term / sqrt_n +
           beta * c_s2 / std::sqrt(chi * chit) * (m3 / m1) / nd;
  };

  const auto row = [](std::string term, double value, double bound) {
    // the inequalities hold in exact arithmetic; the epsilon absorbs rounding
    const bool holds = std::fabs(value) <= bound * (1.0 + 1e-9) + 1e-12;
    return ErrorBoundRow{std::move(term), value, bound, holds};
  };

  std::vector<ErrorBoundRow> rows;
  rows.push_back(row("R1", d.r1, bound_r1));
  rows.push_back(row("R1~", d.r1_tilde, bound_r1t));
  rows.push_back(row("R2", d.r2, bound_r2));
  rows.push_back(row("R2~", d.r2_tilde, bound_r2t));
  rows.push_back(row("R3", d.r3, bound_r3_family(abs_xt)));
  rows.push_back(row("R3-", d.r3_bar, bound_r3_family(abs_xt)));
  rows.push_back(row("R3^", d.r3_hat, bound_r3hat_family(abs_xt)));
  rows.push_back(row("R3v", d.r3_check, bound_r3hat_family(abs_xt)));
  rows.push_back(row("R4", d.r4, bound_r3_family(mean_abs_x_tilde)));
  rows.push_back(row("R4-", d.r4_bar, bound_r3_family(mean_abs_x_tilde)));
  rows.push_back(row("R4^", d.r4_hat, bound_r3hat_family(mean_abs_x_tilde)));
  rows.push_back(row("R4v", d.r4_check, bound_r3hat_family(mean_abs_x_tilde)));
  return rows;
}

}  // namespace icw
