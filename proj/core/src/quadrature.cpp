#include "icw/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <string>

#include "icw/errors.hpp"
#include "icw/landau.hpp"
#include "icw/normal.hpp"

namespace icw {

namespace {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
// (QUADPACK dqk15 constants).
constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
constexpr double kWgk[8] = {
    0.02293532201052922, 0.06309209262997855, 0.10479001032225018,
    0.14065325971552592, 0.16900472663926790, 0.19035057806478558,
    0.20443294007529889, 0.20948214108472783};
constexpr double kWg[4] = {0.12948496616886969, 0.27970539148927666,
                           0.38183005050511894, 0.41795918367346939};

struct Interval {
  double a, b;
  double integral;
  double error;
};

template <class F>
Interval gk15(const F& f, double a, double b, int& evals) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f0 = f(mid);
  double k15 = kWgk[7] * f0;
  double g7 = kWg[3] * f0;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kXgk[i];
    const double fi = f(mid - dx) + f(mid + dx);
    k15 += kWgk[i] * fi;
    if (i % 2 == 1) g7 += kWg[i / 2] * fi;
  }
  evals += 15;
  return {a, b, k15 * half, std::fabs((k15 - g7) * half)};
}

struct Extremum {
  double x;
  double curvature;
};

// All local minima of the potential, found by a derivative sign scan over
// the interval where stationary points can live (|x| <= coercivity slope)
// followed by bisection.
std::vector<Extremum> local_minima(const TiltedPotential& pot) {
  const double reach = pot.coercivity_slope() + 1.0;
  constexpr int kScan = 512;
  std::vector<Extremum> minima;
  double x_prev = -reach;
  double d_prev = pot.deriv1(x_prev);
  for (int i = 1; i <= kScan; ++i) {
    const double x = -reach + 2.0 * reach * i / kScan;
    const double d = pot.deriv1(x);
    if (d_prev < 0.0 && d >= 0.0) {
      double lo = x_prev, hi = x;
      for (int iter = 0; iter < 80; ++iter) {
        const double m = 0.5 * (lo + hi);
        (pot.deriv1(m) < 0.0 ? lo : hi) = m;
      }
      const double root = 0.5 * (lo + hi);
      minima.push_back({root, pot.deriv2(root)});
    }
    x_prev = x;
    d_prev = d;
  }
  if (minima.empty())  // derivative has a zero by coercivity; scan missed it
    minima.push_back({0.0, pot.deriv2(0.0)});
  return minima;
}

struct ShiftedIntegral {
  double log_value;       // log of integral exp(-n(P - P_min)) dy
  double potential_min;   // P_min
  std::vector<Interval> intervals;  // sorted by position
  QuadratureDiagnostics diag;
};

ShiftedIntegral integrate_shifted(const TiltedPotential& pot, std::size_t n,
                                  const QuadratureOptions& opts) {
  const double nd = static_cast<double>(n);
  auto minima = local_minima(pot);
  double p_min = std::numeric_limits<double>::infinity();
  for (const auto& m : minima) p_min = std::min(p_min, pot.value(m.x));

  const auto f = [&](double y) {
    const double e = -nd * (pot.value(y) - p_min);
    return e < -745.0 ? 0.0 : std::exp(e);
  };

  // window from the coercivity bound: P(y) >= y^2/2 - A|y| - B, so the
  // shifted tail beyond Y is below
  //   exp(n(B + P_min + A^2/2)) sqrt(2 pi / n) (1 - Phi(sqrt(n) (Y - A))).
  const double slope = pot.coercivity_slope();
  const double offset = pot.coercivity_offset();
  const double two_pi = 2.0 * std::numbers::pi;
  const double log_peak_mass = 0.5 * std::log(two_pi / nd) -
                               0.5 * std::log(std::max(minima[0].curvature, 1e-12));
  const double tail_exponent = nd * (offset + p_min + 0.5 * slope * slope);
  double window = slope + 2.0;
  double log_tail = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    log_tail = tail_exponent + 0.5 * std::log(two_pi / nd) +
               log_normal_sf(std::sqrt(nd) * (window - slope)) + std::log(2.0);
    if (log_tail <= log_peak_mass + std::log(1e-16)) break;
    window *= 1.25;
  }

  // breakpoints anchored at every local minimum
  std::vector<double> points{-window, window};
  for (const auto& m : minima) {
    const double width = 1.0 / std::sqrt(nd * std::max(m.curvature, 1e-12));
    for (double k : {-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0}) {
      const double y = m.x + k * width;
      if (y > -window && y < window) points.push_back(y);
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  QuadratureDiagnostics diag;
  diag.window_lo = -window;
  diag.window_hi = window;

  auto worse = [](const Interval& a, const Interval& b) { return a.error < b.error; };
  std::priority_queue<Interval, std::vector<Interval>, decltype(worse)> queue(worse);
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    auto iv = gk15(f, points[i], points[i + 1], diag.evaluations);
    total += iv.integral;
    total_err += iv.error;
    queue.push(iv);
  }
  while (total_err > opts.rel_tol * std::max(total, 1e-300) &&
         static_cast<int>(queue.size()) < opts.max_intervals) {
    const Interval top = queue.top();
    queue.pop();
    total -= top.integral;
    total_err -= top.error;
    const double mid = 0.5 * (top.a + top.b);
    for (auto iv : {gk15(f, top.a, mid, diag.evaluations),
                    gk15(f, mid, top.b, diag.evaluations)}) {
      total += iv.integral;
      total_err += iv.error;
      queue.push(iv);
    }
  }
  if (total_err > 10.0 * opts.rel_tol * std::max(total, 1e-300))
    fail(ErrorKind::quadrature,
         "adaptive refinement stalled: error estimate " + std::to_string(total_err) +
             " on integral " + std::to_string(total) + " with " +
             std::to_string(queue.size()) + " intervals");

  ShiftedIntegral out;
  out.potential_min = p_min;
  out.log_value = std::log(total);
  diag.error_estimate = total_err / std::max(total, 1e-300);
  diag.intervals = static_cast<int>(queue.size());
  diag.log_tail_bound = log_tail - out.log_value;
  out.diag = diag;
  out.intervals.reserve(queue.size());
  while (!queue.empty()) {
    out.intervals.push_back(queue.top());
    queue.pop();
  }
  std::sort(out.intervals.begin(), out.intervals.end(),
            [](const Interval& a, const Interval& b) { return a.a < b.a; });
  return out;
}

}  // namespace

TiltedPotential TiltedPotential::gibbs(const WeightSequence& ws,
                                       const ModelParams& p, double s) {
  TiltedPotential pot;
  pot.scale_ = std::sqrt(p.beta / ws.moment(1));
  std::map<double, std::size_t> counts;
  for (double w : ws.values()) ++counts[w];
  const double n = static_cast<double>(ws.size());
  for (const auto& [w, count] : counts)
    pot.terms_.push_back({w, pot.scale_ * w * s + p.h,
                          static_cast<double>(count) / n});
  return pot;
}

TiltedPotential TiltedPotential::with_site_fields(const WeightSequence& ws,
                                                  const ModelParams& p,
                                                  std::span<const double> t,
                                                  double s) {
  if (t.size() != ws.size())
    fail(ErrorKind::dimension, "site coefficient vector has length " +
                                   std::to_string(t.size()) + ", expected " +
                                   std::to_string(ws.size()));
  TiltedPotential pot;
  pot.scale_ = std::sqrt(p.beta / ws.moment(1));
  std::map<std::pair<double, double>, std::size_t> counts;
  for (std::size_t i = 0; i < ws.size(); ++i)
    ++counts[{ws[i], p.h + s * t[i]}];
  const double n = static_cast<double>(ws.size());
  for (const auto& [key, count] : counts)
    pot.terms_.push_back({key.first, key.second,
                          static_cast<double>(count) / n});
  return pot;
}

double TiltedPotential::value(double x) const {
  double acc = 0.0;
  for (const auto& t : terms_) acc += t.frac * log_cosh(scale_ * t.w * x + t.field);
  return 0.5 * x * x - acc;
}

double TiltedPotential::deriv1(double x) const {
  double acc = 0.0;
  for (const auto& t : terms_)
    acc += t.frac * std::tanh(scale_ * t.w * x + t.field) * scale_ * t.w;
  return x - acc;
}

double TiltedPotential::deriv2(double x) const {
  double acc = 0.0;
  for (const auto& t : terms_) {
    const double th = std::tanh(scale_ * t.w * x + t.field);
    acc += t.frac * (1.0 - th * th) * scale_ * scale_ * t.w * t.w;
  }
  return 1.0 - acc;
}

double TiltedPotential::coercivity_slope() const {
  double acc = 0.0;
  for (const auto& t : terms_) acc += t.frac * scale_ * t.w;
  return acc;
}

double TiltedPotential::coercivity_offset() const {
  double acc = 0.0;
  for (const auto& t : terms_) acc += t.frac * std::fabs(t.field);
  return acc;
}

double log_laplace_integral(const TiltedPotential& pot, std::size_t n,
                            QuadratureDiagnostics* diag,
                            const QuadratureOptions& opts) {
  const auto shifted = integrate_shifted(pot, n, opts);
  if (diag) *diag = shifted.diag;
  return 0.5 * std::log(static_cast<double>(n)) -
         static_cast<double>(n) * shifted.potential_min + shifted.log_value;
}

double log_laplace_integral(const WeightSequence& ws, const ModelParams& p,
                            double s, QuadratureDiagnostics* diag,
                            const QuadratureOptions& opts) {
  return log_laplace_integral(TiltedPotential::gibbs(ws, p, s), ws.size(), diag,
                              opts);
}

namespace {

// Richardson-extrapolated central differences at steps 1e-3 and 5e-4, using
// value(0) = 0.
template <class F>
void fd_derivatives(const F& value, CgfResult& out) {
  constexpr double kStep = 1e-3;
  const double f1p = value(kStep), f1m = value(-kStep);
  const double f2p = value(0.5 * kStep), f2m = value(-0.5 * kStep);
  const double d1_h = (f1p - f1m) / (2.0 * kStep);
  const double d1_h2 = (f2p - f2m) / kStep;
  out.first_derivative_at_zero = (4.0 * d1_h2 - d1_h) / 3.0;
  const double d2_h = (f1p + f1m) / (kStep * kStep);
  const double d2_h2 = (f2p + f2m) / (0.25 * kStep * kStep);
  out.second_derivative_at_zero = (4.0 * d2_h2 - d2_h) / 3.0;
}

}  // namespace

CgfResult cgf(const WeightSequence& ws, const ModelParams& p, double s,
              const QuadratureOptions& opts) {
  CgfResult out;
  out.s = s;
  if (p.beta == 0.0) {
    // independent spins: the weighted-sum tilt has prefactor sqrt(beta) = 0
    out.value = 0.0;
    return out;
  }
  const double n = static_cast<double>(ws.size());
  const double den = log_laplace_integral(ws, p, 0.0, nullptr, opts);
  const auto value_at = [&](double sv) {
    return (log_laplace_integral(ws, p, sv, nullptr, opts) - den) / n;
  };
  out.value = (log_laplace_integral(ws, p, s, &out.diagnostics, opts) - den) / n;
  fd_derivatives(value_at, out);
  return out;
}

CgfResult cgf_general(const WeightSequence& ws, const ModelParams& p,
                      std::span<const double> t, double s,
                      const QuadratureOptions& opts) {
  CgfResult out;
  out.s = s;
  if (p.beta == 0.0) {
    const auto closed = [&](double sv) {
      double acc = 0.0;
      for (std::size_t i = 0; i < ws.size(); ++i)
        acc += log_cosh(p.h + sv * t[i]) - log_cosh(p.h);
      return acc / static_cast<double>(ws.size());
    };
    out.value = closed(s);
    fd_derivatives(closed, out);
    return out;
  }
  const double n = static_cast<double>(ws.size());
  const double den = log_laplace_integral(ws, p, 0.0, nullptr, opts);
  const auto value_at = [&](double sv) {
    const auto pot = TiltedPotential::with_site_fields(ws, p, t, sv);
    return (log_laplace_integral(pot, ws.size(), nullptr, opts) - den) / n;
  };
  const auto pot = TiltedPotential::with_site_fields(ws, p, t, s);
  out.value =
      (log_laplace_integral(pot, ws.size(), &out.diagnostics, opts) - den) / n;
  fd_derivatives(value_at, out);
  return out;
}

HsDensity HsDensity::build(const WeightSequence& ws, const ModelParams& p,
                           const QuadratureOptions& opts) {
  constexpr std::size_t kNodes = 1u << 14;
  HsDensity d;
  d.n_ = ws.size();
  d.sqrt_n_ = std::sqrt(static_cast<double>(ws.size()));
  d.pot_ = TiltedPotential::gibbs(ws, p, 0.0);
  auto shifted = integrate_shifted(d.pot_, ws.size(), opts);
  d.potential_min_ = shifted.potential_min;

  // split by mass until the node budget is reached, so the table is roughly
  // equal-mass and the cubic inverse stays accurate in the tails
  const double nd = static_cast<double>(ws.size());
  const auto f = [&](double y) {
    const double e = -nd * (d.pot_.value(y) - shifted.potential_min);
    return e < -745.0 ? 0.0 : std::exp(e);
  };
  auto by_mass = [](const Interval& a, const Interval& b) {
    return a.integral < b.integral;
  };
  std::priority_queue<Interval, std::vector<Interval>, decltype(by_mass)> queue(
      by_mass);
  int evals = 0;
  for (const auto& iv : shifted.intervals) queue.push(iv);
  while (queue.size() + 1 < kNodes && queue.top().integral > 0.0) {
    const Interval top = queue.top();
    queue.pop();
    const double mid = 0.5 * (top.a + top.b);
    queue.push(gk15(f, top.a, mid, evals));
    queue.push(gk15(f, mid, top.b, evals));
  }
  std::vector<Interval> cells;
  cells.reserve(queue.size());
  while (!queue.empty()) {
    cells.push_back(queue.top());
    queue.pop();
  }
  std::sort(cells.begin(), cells.end(),
            [](const Interval& a, const Interval& b) { return a.a < b.a; });

  double total = 0.0;
  for (const auto& c : cells) total += c.integral;

  d.z_.reserve(cells.size() + 1);
  d.cdf_.reserve(cells.size() + 1);
  d.pdf_.reserve(cells.size() + 1);
  // density of z = sqrt(n) y:  rho(z) = f(y) / (total * sqrt(n))
  double cum = 0.0;
  d.z_.push_back(d.sqrt_n_ * cells.front().a);
  d.cdf_.push_back(0.0);
  d.pdf_.push_back(f(cells.front().a) / (total * d.sqrt_n_));
  for (const auto& c : cells) {
    cum += c.integral;
    d.z_.push_back(d.sqrt_n_ * c.b);
    d.cdf_.push_back(std::min(cum / total, 1.0));
    d.pdf_.push_back(f(c.b) / (total * d.sqrt_n_));
  }
  d.cdf_.back() = 1.0;
  d.log_norm_ = std::log(total) + 0.5 * std::log(nd);
  d.tail_mass_ = std::exp(shifted.diag.log_tail_bound);

  double best = d.z_.front();
  double best_val = -std::numeric_limits<double>::infinity();
  // mode from the potential minimum
  auto minima = local_minima(d.pot_);
  for (const auto& m : minima) {
    const double v = -nd * d.pot_.value(m.x);
    if (v > best_val) {
      best_val = v;
      best = d.sqrt_n_ * m.x;
    }
  }
  d.mode_ = best;
  return d;
}

double HsDensity::sample(double u) const {
  if (u <= cdf_.front()) return z_.front();
  if (u >= cdf_.back()) return z_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - cdf_.begin()) - 1;
  const double dc = cdf_[i + 1] - cdf_[i];
  if (dc <= 0.0) return z_[i];
  const double dz = z_[i + 1] - z_[i];
  const double slope = dz / dc;
  // monotone (Fritsch-Carlson limited) cubic Hermite of z as a function of
  // the CDF; endpoint derivatives are 1/pdf
  auto limited = [&](double pdf) {
    const double m = pdf > 1e-300 ? 1.0 / pdf : 3.0 * slope;
    return std::min(m, 3.0 * slope);
  };
  const double m0 = limited(pdf_[i]);
  const double m1 = limited(pdf_[i + 1]);
  const double t = (u - cdf_[i]) / dc;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * z_[i] + (t3 - 2 * t2 + t) * dc * m0 +
         (-2 * t3 + 3 * t2) * z_[i + 1] + (t3 - t2) * dc * m1;
}

double HsDensity::log_density(double z) const {
  const double y = z / sqrt_n_;
  return -static_cast<double>(n_) * (pot_.value(y) - potential_min_) -
         log_norm_;
}

}  // namespace icw
