#include "icw/exact_dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "icw/errors.hpp"
#include "icw/normal.hpp"

namespace icw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kEnumerateLimit = 24;
constexpr std::size_t kCellBudget = 60'000'000;

// Dense log-space table over (k, qT) with k = number of +1 spins and qT
// offset by qspan; grown one site at a time with per-site factors exp(+-h).
struct DpTable {
  std::size_t rows = 0;   // sites + 1
  std::int64_t qspan = 0;
  std::vector<double> logw;

  double& at(std::size_t k, std::int64_t qt) {
    return logw[k * (2 * qspan + 1) + static_cast<std::size_t>(qt + qspan)];
  }
  double get(std::size_t k, std::int64_t qt) const {
    return logw[k * (2 * qspan + 1) + static_cast<std::size_t>(qt + qspan)];
  }
};

DpTable dp_site_factors(const std::vector<std::int64_t>& qws, double h,
                        std::int64_t qspan) {
  const std::size_t sites = qws.size();
  const std::size_t width = static_cast<std::size_t>(2 * qspan + 1);
  DpTable cur{sites + 1, qspan, std::vector<double>((sites + 1) * width, kNegInf)};
  cur.at(0, 0) = 0.0;
  std::vector<double> next_buf(cur.logw.size());
  std::int64_t qpart = 0;
  for (std::size_t i = 0; i < sites; ++i) {
    const std::int64_t qw = qws[i];
    std::fill(next_buf.begin(), next_buf.end(), kNegInf);
    DpTable next{cur.rows, qspan, std::move(next_buf)};
    const std::int64_t reach = qpart + qw;
    for (std::size_t k = 0; k <= i + 1; ++k) {
      for (std::int64_t qt = -reach; qt <= reach; ++qt) {
        double acc = kNegInf;
        if (k >= 1 && qt - qw >= -qspan && qt - qw <= qspan) {
          const double up = cur.get(k - 1, qt - qw);
          if (up != kNegInf) acc = up + h;
        }
        if (k <= i && qt + qw >= -qspan && qt + qw <= qspan) {
          const double down = cur.get(k, qt + qw);
          if (down != kNegInf) acc = log_add_exp(acc, down - h);
        }
        next.at(k, qt) = acc;
      }
    }
    next_buf = std::move(cur.logw);
    cur.logw = std::move(next.logw);
    qpart = reach;
  }
  return cur;
}

// log sum over finite entries, max-subtracted
double log_sum(const std::vector<double>& logs) {
  double hi = kNegInf;
  for (double v : logs) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  long double acc = 0.0L;
  for (double v : logs)
    if (v != kNegInf) acc += std::exp(static_cast<long double>(v - hi));
  return hi + static_cast<double>(std::log(acc));
}

void normalize_atoms(std::vector<JointAtom>& atoms) {
  std::vector<double> logs;
  logs.reserve(atoms.size());
  for (const auto& a : atoms) logs.push_back(a.log_mass);
  const double total = log_sum(logs);
  for (auto& a : atoms) a.log_mass -= total;
  std::sort(atoms.begin(), atoms.end(), [](const JointAtom& a, const JointAtom& b) {
    return a.s != b.s ? a.s < b.s : a.qt < b.qt;
  });
}

std::vector<std::int64_t> scaled_weights(const WeightSequence& ws,
                                         std::int64_t q) {
  std::vector<std::int64_t> qws(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i)
    qws[i] = std::llround(static_cast<double>(q) * ws[i]);
  return qws;
}

}  // namespace

DiscreteLaw JointDistribution::spin_marginal() const {
  DiscreteLaw law;
  // atoms are sorted by s, so equal-s runs are contiguous
  std::size_t i = 0;
  while (i < atoms.size()) {
    std::size_t j = i;
    std::vector<double> logs;
    while (j < atoms.size() && atoms[j].s == atoms[i].s)
      logs.push_back(atoms[j++].log_mass);
    law.values.push_back(static_cast<double>(atoms[i].s));
    law.mass.push_back(std::exp(log_sum(logs)));
    i = j;
  }
  return law;
}

DiscreteLaw JointDistribution::weighted_marginal() const {
  std::map<std::int64_t, std::vector<double>> groups;
  std::map<std::int64_t, double> t_of;
  for (const auto& a : atoms) {
    groups[a.qt].push_back(a.log_mass);
    t_of.emplace(a.qt, a.t);
  }
  DiscreteLaw law;
  for (auto& [qt, logs] : groups) {
    law.values.push_back(t_of[qt]);
    law.mass.push_back(std::exp(log_sum(logs)));
  }
  return law;
}

double JointDistribution::mean_magnetization() const {
  long double acc = 0.0L;
  for (const auto& a : atoms)
    acc += std::exp(static_cast<long double>(a.log_mass)) * a.s;
  return static_cast<double>(acc) / static_cast<double>(n);
}

double JointDistribution::log_mgf_weighted(double a) const {
  std::vector<double> logs;
  logs.reserve(atoms.size());
  for (const auto& atom : atoms) logs.push_back(atom.log_mass + a * atom.t);
  return log_sum(logs);
}

double JointDistribution::total_mass() const {
  long double acc = 0.0L;
  for (const auto& a : atoms) acc += std::exp(static_cast<long double>(a.log_mass));
  return static_cast<double>(acc);
}

JointDistribution enumerate_joint(const WeightSequence& ws,
                                  const ModelParams& p) {
  const std::size_t n = ws.size();
  if (n > kEnumerateLimit)
    fail(ErrorKind::size, "enumeration limited to " +
                              std::to_string(kEnumerateLimit) + " sites, got " +
                              std::to_string(n));
  JointDistribution jd;
  jd.n = n;
  jd.q = ws.integer_scale().value_or(0);

  const double ell = ws.total();
  if (jd.q > 0) {
    const auto qws = scaled_weights(ws, jd.q);
    std::map<std::pair<std::int64_t, std::int64_t>, double> cells;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
      std::int64_t s = 0, qt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1ull << i)) {
          ++s;
          qt += qws[i];
        } else {
          --s;
          qt -= qws[i];
        }
      }
      const double t = static_cast<double>(qt) / static_cast<double>(jd.q);
      const double logw = p.beta * t * t / (2.0 * ell) + p.h * s;
      auto [it, fresh] = cells.try_emplace({s, qt}, logw);
      if (!fresh) it->second = log_add_exp(it->second, logw);
    }
    for (const auto& [key, logm] : cells)
      jd.atoms.push_back({key.first, key.second,
                          static_cast<double>(key.second) / static_cast<double>(jd.q),
                          logm});
  } else {
    // no integer lattice: group T values by a rounding key
    const double tol = 1e-9 * std::max(1.0, ws.total());
    std::map<std::pair<std::int64_t, std::int64_t>, std::pair<double, double>> cells;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
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
      const double logw = p.beta * t * t / (2.0 * ell) + p.h * s;
      const std::int64_t key = std::llround(t / tol);
      auto [it, fresh] = cells.try_emplace({s, key}, std::make_pair(t, logw));
      if (!fresh) it->second.second = log_add_exp(it->second.second, logw);
    }
    for (const auto& [key, tv] : cells)
      jd.atoms.push_back({key.first, key.second, tv.first, tv.second});
  }
  normalize_atoms(jd.atoms);
  return jd;
}

JointDistribution dp_joint(const WeightSequence& ws, const ModelParams& p) {
  const auto q_opt = ws.integer_scale();
  if (!q_opt)
    fail(ErrorKind::representation,
         "weights have no integer lattice scale; use enumeration or sampling");
  const std::int64_t q = *q_opt;
  const std::size_t n = ws.size();
  const auto qws = scaled_weights(ws, q);
  std::int64_t qspan = 0;
  for (auto v : qws) qspan += v;
  const std::size_t cells = (n + 1) * static_cast<std::size_t>(2 * qspan + 1);
  if (cells > kCellBudget)
    fail(ErrorKind::size, "lattice would need " + std::to_string(cells) +
                              " cells, budget is " + std::to_string(kCellBudget));

  DpTable table = dp_site_factors(qws, p.h, qspan);

  JointDistribution jd;
  jd.n = n;
  jd.q = q;
  const double ell = ws.total();
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::int64_t qt = -qspan; qt <= qspan; ++qt) {
      const double logw = table.get(k, qt);
      if (logw == kNegInf) continue;
      const double t = static_cast<double>(qt) / static_cast<double>(q);
      jd.atoms.push_back({2 * static_cast<std::int64_t>(k) - static_cast<std::int64_t>(n),
                          qt, t, logw + p.beta * t * t / (2.0 * ell)});
    }
  }
  normalize_atoms(jd.atoms);
  return jd;
}

double kolmogorov_distance(const DiscreteLaw& law) {
  if (law.values.size() != law.mass.size() || law.values.empty())
    fail(ErrorKind::validation, "empty or inconsistent discrete law");
  long double total = 0.0L;
  for (double m : law.mass) total += m;
  if (std::fabs(static_cast<double>(total) - 1.0) > 1e-9)
    fail(ErrorKind::validation, "law is not normalized");

  double d = 0.0;
  long double cum = 0.0L;
  for (std::size_t i = 0; i < law.values.size(); ++i) {
    const double phi = normal_cdf(law.values[i]);
    const double below = static_cast<double>(cum);
    cum += law.mass[i];
    const double at = static_cast<double>(cum);
    d = std::max({d, std::fabs(below - phi), std::fabs(at - phi)});
  }
  return d;
}

namespace {

MarginalMoments standardized_moments(const DiscreteLaw& raw, double center,
                                     double scale_div) {
  DiscreteLaw std_law;
  std_law.mass = raw.mass;
  std_law.values.reserve(raw.values.size());
  for (double v : raw.values) std_law.values.push_back((v - center) / scale_div);

  long double mean = 0.0L;
  for (std::size_t i = 0; i < std_law.values.size(); ++i)
    mean += std_law.mass[i] * static_cast<long double>(std_law.values[i]);
  long double m2 = 0.0L, m3 = 0.0L, m4 = 0.0L;
  for (std::size_t i = 0; i < std_law.values.size(); ++i) {
    const long double d = std_law.values[i] - mean;
    const long double w = std_law.mass[i];
    m2 += w * d * d;
    m3 += w * d * d * d;
    m4 += w * d * d * d * d;
  }
  MarginalMoments mm;
  mm.mean = static_cast<double>(mean);
  mm.variance = static_cast<double>(m2);
  mm.third_central = static_cast<double>(m3);
  mm.fourth_central = static_cast<double>(m4);
  mm.d_k = kolmogorov_distance(std_law);
  return mm;
}

}  // namespace

MarginalSummary standardize(const JointDistribution& jd, const Observables& obs) {
  const double nd = static_cast<double>(jd.n);
  const double sqrt_n = std::sqrt(nd);
  MarginalSummary summary;
  // X_n = (S - n M_n) / (sqrt(n) sqrt(chi_n))
  summary.spin = standardized_moments(jd.spin_marginal(), nd * obs.magnetization,
                                      sqrt_n * std::sqrt(obs.susceptibility));
  // X~_n = (T - n M~_n) / (sqrt(n) sqrt(chi~_n))
  summary.weighted = standardized_moments(
      jd.weighted_marginal(), nd * obs.weighted_magnetization,
      sqrt_n * std::sqrt(obs.weighted_susceptibility));
  return summary;
}

std::vector<double> spin_expectations(const WeightSequence& ws,
                                      const ModelParams& p) {
  const std::size_t n = ws.size();
  const double ell = ws.total();

  if (n <= 20) {
    // single pass for the max, second pass for normalized accumulation
    std::vector<double> logs(1ull << n);
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
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
      logs[mask] = p.beta * t * t / (2.0 * ell) + p.h * s;
    }
    const double hi = *std::max_element(logs.begin(), logs.end());
    std::vector<long double> acc(n, 0.0L);
    long double z = 0.0L;
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
      const long double w = std::exp(static_cast<long double>(logs[mask] - hi));
      z += w;
      for (std::size_t i = 0; i < n; ++i)
        acc[i] += (mask & (1ull << i)) ? w : -w;
    }
    std::vector<double> means(n);
    for (std::size_t i = 0; i < n; ++i)
      means[i] = static_cast<double>(acc[i] / z);
    return means;
  }

  const auto q_opt = ws.integer_scale();
  if (!q_opt)
    fail(ErrorKind::representation,
         "per-site expectations need enumeration (n <= 20) or an integer "
         "weight lattice");
  const std::int64_t q = *q_opt;
  const auto qws = scaled_weights(ws, q);
  std::int64_t qspan = 0;
  for (auto v : qws) qspan += v;
  const std::size_t cells = (n + 1) * static_cast<std::size_t>(2 * qspan + 1);
  if (cells > kCellBudget)
    fail(ErrorKind::size, "lattice would need " + std::to_string(cells) + " cells");

  // one leave-one-out table per distinct weight; E[sigma_i] is shared by all
  // sites of equal weight
  std::map<std::int64_t, double> mean_by_qw;
  for (std::size_t i = 0; i < n; ++i) mean_by_qw.emplace(qws[i], 0.0);
  for (auto& [qv, mean] : mean_by_qw) {
    std::vector<std::int64_t> rest = qws;
    rest.erase(std::find(rest.begin(), rest.end(), qv));
    DpTable table = dp_site_factors(rest, p.h, qspan);
    std::vector<double> plus_terms, minus_terms;
    plus_terms.reserve(cells);
    minus_terms.reserve(cells);
    const double v = static_cast<double>(qv) / static_cast<double>(q);
    // the table already carries the exp(h S') site factors of the remaining
    // sites; only the left-out spin contributes +-h here
    for (std::size_t k = 0; k + 1 <= n; ++k) {
      for (std::int64_t qt = -qspan + qv; qt <= qspan - qv; ++qt) {
        const double logw = table.get(k, qt);
        if (logw == kNegInf) continue;
        const double t = static_cast<double>(qt) / static_cast<double>(q);
        plus_terms.push_back(logw + p.beta * (t + v) * (t + v) / (2.0 * ell) + p.h);
        minus_terms.push_back(logw + p.beta * (t - v) * (t - v) / (2.0 * ell) - p.h);
      }
    }
    const double lp = log_sum(plus_terms);
    const double lm = log_sum(minus_terms);
    mean = std::tanh(0.5 * (lp - lm));
  }

  std::vector<double> means(n);
  for (std::size_t i = 0; i < n; ++i) means[i] = mean_by_qw[qws[i]];
  return means;
}

}  // namespace icw
