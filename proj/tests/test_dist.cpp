#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "icw/errors.hpp"
#include "icw/exact_dist.hpp"
#include "icw/landau.hpp"
#include "icw/normal.hpp"
#include "icw/quadrature.hpp"

using namespace icw;

namespace {

WeightSequence mixed12() {
  return WeightSequence::from_values({1, 1, 2, 2}).replicate(3);
}

double atom_mass(const JointDistribution& jd, std::int64_t s, std::int64_t qt) {
  for (const auto& a : jd.atoms)
    if (a.s == s && a.qt == qt) return std::exp(a.log_mass);
  return 0.0;
}

}  // namespace

TEST_CASE("enumerate: independent fair spins") {
  const auto jd = enumerate_joint(WeightSequence::from_values({1, 1}),
                                  ModelParams(0.0, 0.0));
  CHECK(jd.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  const auto spin = jd.spin_marginal();
  REQUIRE(spin.values.size() == 3);
  CHECK(spin.mass[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(spin.mass[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(spin.mass[2] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("enumerate: single site") {
  // the quadratic term is constant for n=1, so P(+1) = e^h / (2 cosh h)
  const auto jd = enumerate_joint(WeightSequence::from_values({1.0}),
                                  ModelParams(0.7, 0.3));
  const double expected = std::exp(0.3) / (2.0 * std::cosh(0.3));
  CHECK(atom_mass(jd, 1, 1) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(atom_mass(jd, -1, -1) == doctest::Approx(1.0 - expected).epsilon(1e-14));
}

TEST_CASE("enumerate: two sites, hand normalization") {
  // w = [1,2], beta = 1, h = 0: weights e^{3/2} at (S,T) = (+-2, +-3),
  // e^{1/6} at (0, +-1); ell_n = 3
  const auto jd = enumerate_joint(WeightSequence::from_values({1, 2}),
                                  ModelParams(1.0, 0.0));
  const double z = 2.0 * std::exp(1.5) + 2.0 * std::exp(1.0 / 6.0);
  CHECK(atom_mass(jd, 2, 3) == doctest::Approx(std::exp(1.5) / z).epsilon(1e-13));
  CHECK(atom_mass(jd, -2, -3) == doctest::Approx(std::exp(1.5) / z).epsilon(1e-13));
  CHECK(atom_mass(jd, 0, 1) ==
        doctest::Approx(std::exp(1.0 / 6.0) / z).epsilon(1e-13));
  CHECK(atom_mass(jd, 0, -1) ==
        doctest::Approx(std::exp(1.0 / 6.0) / z).epsilon(1e-13));
}

TEST_CASE("enumerate: irrational weights take the grouping path") {
  const auto ws = WeightSequence::from_values({std::sqrt(2.0), 1.0});
  REQUIRE(!ws.integer_scale().has_value());
  const ModelParams p(0.4, 0.2);
  const auto jd = enumerate_joint(ws, p);
  CHECK(jd.q == 0);
  REQUIRE(jd.atoms.size() == 4);  // all four configurations have distinct (S,T)
  CHECK(jd.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  // hand normalization
  const double ell = std::sqrt(2.0) + 1.0;
  double z = 0.0;
  for (int a : {-1, 1})
    for (int b : {-1, 1}) {
      const double t = a * std::sqrt(2.0) + b;
      z += std::exp(0.4 * t * t / (2.0 * ell) + 0.2 * (a + b));
    }
  const double t_pp = std::sqrt(2.0) + 1.0;
  const double expected = std::exp(0.4 * t_pp * t_pp / (2.0 * ell) + 0.4) / z;
  CHECK(std::exp(jd.atoms.back().log_mass) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("enumerate size cap") {
  CHECK_THROWS_AS(
      enumerate_joint(WeightSequence::from_values({1.0}).replicate(25),
                      ModelParams(0.1, 0.0)),
      Error);
}

TEST_CASE("transfer computation equals enumeration") {
  struct Instance {
    WeightSequence ws;
    double beta, h;
  };
  const Instance instances[] = {
      {mixed12(), 0.3, 0.1},
      {WeightSequence::from_values({1.0}).replicate(13), 0.5, 0.2},
      {WeightSequence::from_values({1, 2}).replicate(7), 0.9, 0.3},
      {WeightSequence::from_values({0.5, 1.5}).replicate(5), 0.4, -0.2},
  };
  for (const auto& inst : instances) {
    const ModelParams p(inst.beta, inst.h);
    const auto a = enumerate_joint(inst.ws, p);
    const auto b = dp_joint(inst.ws, p);
    REQUIRE(a.atoms.size() == b.atoms.size());
    for (std::size_t i = 0; i < a.atoms.size(); ++i) {
      CHECK(a.atoms[i].s == b.atoms[i].s);
      CHECK(a.atoms[i].qt == b.atoms[i].qt);
      CHECK(std::fabs(a.atoms[i].log_mass - b.atoms[i].log_mass) <= 1e-10);
    }
  }
}

TEST_CASE("transfer computation: free case is a product law") {
  // beta = 0: S ~ sum of iid tilted spins, P(+1) = e^h/(2 cosh h)
  const auto ws = WeightSequence::from_values({1.0}).replicate(10);
  const auto jd = dp_joint(ws, ModelParams(0.0, 0.4));
  const double p_plus = std::exp(0.4) / (2.0 * std::cosh(0.4));
  const auto spin = jd.spin_marginal();
  for (std::size_t i = 0; i < spin.values.size(); ++i) {
    const int k = static_cast<int>((spin.values[i] + 10) / 2);  // # of +1 spins
    double binom = 1.0;
    for (int j = 0; j < k; ++j) binom = binom * (10 - j) / (j + 1);
    const double expected =
        binom * std::pow(p_plus, k) * std::pow(1.0 - p_plus, 10 - k);
    CHECK(spin.mass[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("spin-flip symmetry of the joint law at h=0") {
  const auto ws = WeightSequence::from_values({1, 1, 2, 2}).replicate(16);
  const auto jd = dp_joint(ws, ModelParams(0.45, 0.0));
  std::map<std::pair<std::int64_t, std::int64_t>, double> mass;
  for (const auto& a : jd.atoms) mass[{a.s, a.qt}] = std::exp(a.log_mass);
  for (const auto& [key, m] : mass) {
    const auto mirror = mass.find({-key.first, -key.second});
    REQUIRE(mirror != mass.end());
    CHECK(m == doctest::Approx(mirror->second).epsilon(1e-12));
  }
}

TEST_CASE("transfer computation preconditions") {
  CHECK_THROWS_AS(
      dp_joint(WeightSequence::from_values({std::sqrt(2.0)}).replicate(4),
               ModelParams(0.2, 0.0)),
      Error);
  CHECK_THROWS_AS(
      dp_joint(WeightSequence::from_values({1.0}).replicate(8000),
               ModelParams(0.2, 0.0)),
      Error);
}

TEST_CASE("kolmogorov distance") {
  CHECK(kolmogorov_distance({{0.0}, {1.0}}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(kolmogorov_distance({{-1.0, 1.0}, {0.5, 0.5}}) ==
        doctest::Approx(0.3413447460685429).epsilon(1e-13));
  // discretized standard normal: distance vanishes under refinement
  const auto discretized = [](int cells) {
    DiscreteLaw law;
    const double lo = -8.0, hi = 8.0;
    const double step = (hi - lo) / cells;
    for (int i = 0; i < cells; ++i) {
      const double a = lo + i * step;
      law.values.push_back(a + 0.5 * step);
      law.mass.push_back(normal_cdf(a + step) - normal_cdf(a));
    }
    law.mass.front() += normal_cdf(lo);
    law.mass.back() += 1.0 - normal_cdf(hi);
    return law;
  };
  const double coarse = kolmogorov_distance(discretized(100));
  const double fine = kolmogorov_distance(discretized(10000));
  CHECK(fine < coarse);
  CHECK(fine < 2e-3);
  CHECK_THROWS_AS(kolmogorov_distance({{0.0}, {0.7}}), Error);
}

TEST_CASE("standardized marginals, free fair case") {
  const auto ws = WeightSequence::from_values({1.0}).replicate(10);
  const ModelParams p(0.0, 0.0);
  const auto obs = compute_observables(ws, p);
  const auto summary = standardize(dp_joint(ws, p), obs);
  CHECK(summary.spin.mean == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(summary.spin.variance == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(summary.weighted.variance == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(summary.spin.d_k > 0.0);
  CHECK(summary.spin.d_k <= 1.0);
}

TEST_CASE("standardized single spin distance") {
  // X is a symmetric two-point mass at +-1; the exact distance to the normal
  // is Phi(1) - 1/2 (attained at the atoms)
  const auto ws = WeightSequence::from_values({1.0});
  const ModelParams p(0.0, 0.0);
  const auto obs = compute_observables(ws, p);
  const auto summary = standardize(enumerate_joint(ws, p), obs);
  CHECK(summary.spin.d_k == doctest::Approx(0.3413447460685429).epsilon(1e-13));
}

TEST_CASE("variance drifts toward 1 as n grows") {
  const ModelParams p(0.5, 0.0);
  const auto var_at = [&](std::size_t n) {
    const auto ws = WeightSequence::from_values({1.0}).replicate(n);
    return standardize(dp_joint(ws, p), compute_observables(ws, p)).spin.variance;
  };
  const double v16 = var_at(16), v64 = var_at(64);
  CHECK(std::fabs(v64 - 1.0) < std::fabs(v16 - 1.0));
}

TEST_CASE("scaled distance stays bounded on an n-grid") {
  const ModelParams p(0.3, 0.1);
  double lo = 1e300, hi = 0.0;
  for (std::size_t n : {16u, 32u, 64u}) {
    const auto ws = WeightSequence::from_values({1, 1, 2, 2}).replicate(n / 4);
    const auto obs = compute_observables(ws, p);
    const double dk = standardize(dp_joint(ws, p), obs).spin.d_k;
    const double scaled = std::sqrt(static_cast<double>(n)) * dk;
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  CHECK(hi <= 2.0 * lo);
}

TEST_CASE("mean magnetization vs field derivative of the log partition") {
  const auto ws = mixed12();
  const auto jd = dp_joint(ws, ModelParams(0.3, 0.1));
  // E[m] = (1/n) d/dh log Z; the h-independent constants cancel in the
  // central differences (Richardson, steps 1e-3 and 5e-4)
  const auto logz = [&](double h) {
    return log_laplace_integral(ws, ModelParams(0.3, h), 0.0);
  };
  const double h0 = 0.1, step = 1e-3;
  const double d_h = (logz(h0 + step) - logz(h0 - step)) / (2 * step);
  const double d_h2 = (logz(h0 + 0.5 * step) - logz(h0 - 0.5 * step)) / step;
  const double deriv = (4.0 * d_h2 - d_h) / 3.0;
  CHECK(jd.mean_magnetization() == doctest::Approx(deriv / 12.0).epsilon(1e-8));
}

TEST_CASE("per-site expectations: enumeration, transfer and integral routes") {
  const auto ws = mixed12();
  const ModelParams p(0.3, 0.1);
  const auto means = spin_expectations(ws, p);  // enumeration route at n=12
  REQUIRE(means.size() == 12);
  // sites of equal weight share the expectation
  for (std::size_t i = 0; i < 12; ++i)
    CHECK(means[i] == doctest::Approx(means[i % 4]).epsilon(1e-13));

  // cross-check against the auxiliary-field integral
  // E[sigma_i] = integral tanh(scale w_i z / sqrt(n) + h) rho(z) dz
  const auto density = HsDensity::build(ws, p);
  const double scale = std::sqrt(p.beta / ws.moment(1));
  const auto& grid = density.grid();
  const auto& cdf = density.cdf();
  for (double w : {1.0, 2.0}) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const double mid = 0.5 * (grid[k] + grid[k + 1]);
      acc += (cdf[k + 1] - cdf[k]) *
             std::tanh(scale * w * mid / std::sqrt(12.0) + p.h);
    }
    const std::size_t site = (w == 1.0) ? 0 : 2;
    // midpoint rule over the tabulated density limits the comparison
    CHECK(means[site] == doctest::Approx(acc).epsilon(1e-5));
  }

  // average of per-site means equals E[m] (transfer route at n = 50)
  const auto ws50 = WeightSequence::from_values({1, 2}).replicate(25);
  const auto means50 = spin_expectations(ws50, p);
  double avg = 0.0;
  for (double m : means50) avg += m;
  avg /= 50.0;
  CHECK(avg == doctest::Approx(dp_joint(ws50, p).mean_magnetization()).epsilon(1e-12));
}

TEST_CASE("cgf vanishes at s=0 and is convex") {
  const auto ws = WeightSequence::from_values({1, 1, 2, 2}).replicate(4);
  const ModelParams p(0.3, 0.1);
  CHECK(std::fabs(cgf(ws, p, 0.0).value) <= 1e-15);
  for (double s : {0.2, 0.7}) {
    const double mid = cgf(ws, p, 0.0).value;
    const double avg = 0.5 * (cgf(ws, p, -s).value + cgf(ws, p, s).value);
    CHECK(mid <= avg + 1e-13);
  }
}

TEST_CASE("cgf at vanishing coupling matches the independent-spin form") {
  const auto ws = WeightSequence::from_values({1, 1, 2, 2}).replicate(4);
  const double beta = 1e-8, h = 0.3, s = 0.1;
  const ModelParams p(beta, h);
  const double scale = std::sqrt(beta / ws.moment(1));
  double closed = 0.0;
  for (double w : ws.values())
    closed += log_cosh(h + s * scale * w) - log_cosh(h);
  closed /= static_cast<double>(ws.size());
  CHECK(cgf(ws, p, s).value == doctest::Approx(closed).epsilon(1e-8));
  // beta = 0 exactly short-circuits to zero
  CHECK(cgf(ws, ModelParams(0.0, h), s).value == 0.0);
}

TEST_CASE("cgf matches the exact log-MGF") {
  const auto ws = WeightSequence::from_values({1.0}).replicate(64);
  const ModelParams p(0.5, 0.2);
  const auto jd = dp_joint(ws, p);
  const double scale = std::sqrt(p.beta / ws.moment(1));
  for (double s : {-0.5, -0.1, 0.1, 0.5}) {
    const double exact = jd.log_mgf_weighted(s * scale) / 64.0;
    CHECK(cgf(ws, p, s).value == doctest::Approx(exact).epsilon(1e-9));
  }
  // enumeration-scale instance: relative error of the MGF itself below 1e-8
  const auto small = mixed12();
  const ModelParams q(0.3, 0.1);
  const auto jd12 = enumerate_joint(small, q);
  const double scale12 = std::sqrt(q.beta / small.moment(1));
  for (double s : {-0.5, -0.1, 0.1, 0.5}) {
    const double log_exact = jd12.log_mgf_weighted(s * scale12);
    const double log_quad = 12.0 * cgf(small, q, s).value;
    CHECK(std::fabs(log_quad - log_exact) <= 1e-8);
  }
}

TEST_CASE("centered second moment ties the transfer law to the cgf derivatives") {
  // E[(scale T / sqrt(n) - sqrt(n) x*)^2] = c_n''(0) + n (c_n'(0) - x*)^2
  const auto ws = WeightSequence::from_values({1, 1, 2, 2}).replicate(16);
  const ModelParams p(0.3, 0.1);
  const double nd = 64.0;
  const double scale = std::sqrt(p.beta / ws.moment(1));
  const double x_star = solve_fixed_point(ws.empirical_law(), p);
  const auto law = dp_joint(ws, p).weighted_marginal();
  long double m2 = 0.0L;
  for (std::size_t i = 0; i < law.values.size(); ++i) {
    const long double centered =
        scale * law.values[i] / std::sqrt(nd) - std::sqrt(nd) * x_star;
    m2 += law.mass[i] * centered * centered;
  }
  const auto res = cgf(ws, p, 0.0);
  const double via_cgf = res.second_derivative_at_zero +
                         nd * (res.first_derivative_at_zero - x_star) *
                             (res.first_derivative_at_zero - x_star);
  CHECK(static_cast<double>(m2) == doctest::Approx(via_cgf).epsilon(1e-8));
}

TEST_CASE("cgf second derivative stable under replication") {
  const auto base = WeightSequence::from_values({1, 1, 2, 2});
  // the finite-size drift of c_n''(0) is O(1/n) with a parameter-dependent
  // constant; at (0.2, 0.4) it is small outright
  const ModelParams far(0.2, 0.4);
  const double f64 = cgf(base.replicate(16), far, 0.0).second_derivative_at_zero;
  const double f256 = cgf(base.replicate(64), far, 0.0).second_derivative_at_zero;
  CHECK(std::fabs(f64 - f256) <= 1e-3);
  // at (0.3, 0.1) the constant is larger; successive differences still
  // shrink like 1/n when n quadruples
  const ModelParams p(0.3, 0.1);
  const double d16 = cgf(base.replicate(4), p, 0.0).second_derivative_at_zero;
  const double d64 = cgf(base.replicate(16), p, 0.0).second_derivative_at_zero;
  const double d256 = cgf(base.replicate(64), p, 0.0).second_derivative_at_zero;
  CHECK(std::fabs(d64 - d256) <= 0.5 * std::fabs(d16 - d64));
}

TEST_CASE("sqrt(n) (c_n'(0) - x*) shrinks when n quadruples") {
  const auto base = WeightSequence::from_values({1, 1, 2, 2});
  const ModelParams p(0.3, 0.1);
  const double x_star = solve_fixed_point(base.empirical_law(), p);
  const auto gap = [&](std::size_t factor) {
    const auto ws = base.replicate(factor);
    const double n = static_cast<double>(ws.size());
    return std::sqrt(n) *
           std::fabs(cgf(ws, p, 0.0).first_derivative_at_zero - x_star);
  };
  const double g64 = gap(16), g256 = gap(64);
  CHECK(g64 >= 1.3 * g256);
}

TEST_CASE("general site coefficients") {
  const auto ws = mixed12();
  const ModelParams p(0.3, 0.1);

  const std::vector<double> zero(12, 0.0);
  for (double s : {-0.4, 0.9})
    CHECK(std::fabs(cgf_general(ws, p, zero, s).value) <= 1e-12);

  // t_i = scale w_i recovers the weighted-sum CGF
  const double scale = std::sqrt(p.beta / ws.moment(1));
  std::vector<double> t(12);
  for (std::size_t i = 0; i < 12; ++i) t[i] = scale * ws[i];
  for (double s : {-0.3, 0.2})
    CHECK(cgf_general(ws, p, t, s).value ==
          doctest::Approx(cgf(ws, p, s).value).epsilon(1e-11));

  // tanh-composed coefficients: variance proxy against enumeration
  const double x_star = solve_fixed_point(ws.empirical_law(), p);
  for (std::size_t i = 0; i < 12; ++i)
    t[i] = std::tanh(scale * ws[i] * x_star + p.h);
  const double proxy = cgf_general(ws, p, t, 0.0).second_derivative_at_zero;
  // Var(sum t_i sigma_i)/n over the exact law
  const auto jd = enumerate_joint(ws, p);
  // t depends on sigma only through per-weight spin counts, recoverable from
  // (S, T) for two distinct weights: S1 + S2 = S, S1 + 2 S2 = T
  long double mean = 0.0L, second = 0.0L;
  for (const auto& a : jd.atoms) {
    const long double s2 = a.t - a.s;
    const long double s1 = a.s - s2;
    const long double v = t[0] * s1 + t[2] * s2;
    const long double m = std::exp(static_cast<long double>(a.log_mass));
    mean += m * v;
    second += m * v * v;
  }
  const double var = static_cast<double>(second - mean * mean) / 12.0;
  CHECK(proxy == doctest::Approx(var).epsilon(1e-6));

  // beta = 0 closed form
  const ModelParams free(0.0, 0.25);
  std::vector<double> tf(12, 0.5);
  const double closed = log_cosh(0.25 + 0.3 * 0.5) - log_cosh(0.25);
  CHECK(cgf_general(ws, free, tf, 0.3).value ==
        doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("auxiliary field density: free case is standard normal") {
  const auto ws = WeightSequence::from_values({1, 1, 2, 2}).replicate(4);
  const auto density = HsDensity::build(ws, ModelParams(0.0, 0.3));
  for (double z : {-2.5, -1.0, 0.0, 0.8, 2.2})
    CHECK(density.log_density(z) ==
          doctest::Approx(-0.5 * z * z - 0.5 * std::log(2 * M_PI)).epsilon(1e-10));
  // inverse CDF against the normal quantiles
  for (double u : {0.01, 0.1, 0.37, 0.5, 0.73, 0.9, 0.99})
    CHECK(normal_cdf(density.sample(u)) == doctest::Approx(u).epsilon(1e-6));
  CHECK(density.tail_mass() < 1e-10);
}

TEST_CASE("auxiliary field density: mode and normalization") {
  const auto ws = mixed12();
  const ModelParams p(0.3, 0.1);
  const auto density = HsDensity::build(ws, p);
  const double x_star = solve_fixed_point(ws.empirical_law(), p);
  CHECK(density.mode() ==
        doctest::Approx(std::sqrt(12.0) * x_star).epsilon(1e-8));
  CHECK(density.cdf().front() == 0.0);
  CHECK(density.cdf().back() == 1.0);
  CHECK(density.tail_mass() < 1e-10);
  // density integrates to 1: composite Simpson over the cells, against the
  // independently normalized log_density. Simpson itself is only sharp on
  // narrow cells, so the per-cell comparison is restricted to those.
  const auto& z = density.grid();
  const auto& cdf = density.cdf();
  double acc = 0.0, narrow_err = 0.0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double width = z[i + 1] - z[i];
    const double mid = 0.5 * (z[i] + z[i + 1]);
    const double cell = width / 6.0 *
                        (std::exp(density.log_density(z[i])) +
                         4.0 * std::exp(density.log_density(mid)) +
                         std::exp(density.log_density(z[i + 1])));
    acc += cell;
    if (width < 0.02) narrow_err += std::fabs(cell - (cdf[i + 1] - cdf[i]));
  }
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(narrow_err <= 1e-9);
}

TEST_CASE("quadrature diagnostics are recorded") {
  const auto ws = mixed12();
  const auto res = cgf(ws, ModelParams(0.3, 0.1), 0.2);
  CHECK(res.diagnostics.evaluations > 0);
  CHECK(res.diagnostics.intervals > 0);
  CHECK(res.diagnostics.window_hi > res.diagnostics.window_lo);
  CHECK(res.diagnostics.log_tail_bound < std::log(1e-10));
  CHECK(res.diagnostics.error_estimate <= 1e-10);
}
