#pragma once

#include <cstdint>
#include <vector>

#include "icw/landau.hpp"
#include "icw/model.hpp"
#include "icw/weights.hpp"

namespace icw {

// A discrete probability law on the reals, atoms sorted ascending.
struct DiscreteLaw {
  std::vector<double> values;
  std::vector<double> mass;
};

// Exact joint law of (S, T) = (sum sigma_i, sum w_i sigma_i) under the Gibbs
// measure. When the weights carry an integer scale q, qt = q*T indexes the
// exact lattice; otherwise qt holds a rounding key and t carries the value.
struct JointAtom {
  std::int64_t s;
  std::int64_t qt;
  double t;
  double log_mass;
};

struct JointDistribution {
  std::size_t n = 0;
  std::int64_t q = 0;  // 0 when no integer lattice exists
  std::vector<JointAtom> atoms;  // sorted by (s, qt)

  DiscreteLaw spin_marginal() const;      // law of S
  DiscreteLaw weighted_marginal() const;  // law of T
  double mean_magnetization() const;      // E[S] / n
  double log_mgf_weighted(double a) const;  // log E[exp(a T)]
  // sum of |exp(log_mass)| (should be 1 within 1e-10)
  double total_mass() const;
};

// Brute-force oracle over all 2^n configurations; n <= 24.
JointDistribution enumerate_joint(const WeightSequence& ws, const ModelParams& p);

// Exact transfer computation on the (S, qT) lattice: per-site factors
// exp(+-h) convolved at offsets (+-1, +-q w_i) in log space, then the
// quadratic coupling beta T^2 / (2 ell_n) is added and the table normalized
// with log-sum-exp. Requires an integer scale; identical to enumerate_joint
// wherever both run.
JointDistribution dp_joint(const WeightSequence& ws, const ModelParams& p);

// Exact Kolmogorov distance sup_z |F(z) - Phi(z)| of a discrete law against
// the standard normal; the supremum is attained at the atoms (left and right
// limits both checked).
double kolmogorov_distance(const DiscreteLaw& law);

struct MarginalMoments {
  double mean;
  double variance;
  double third_central;
  double fourth_central;
  double d_k;  // Kolmogorov distance to the standard normal
};

// Standardized marginals X_n = sqrt(n)(m_n - M_n)/sqrt(chi_n) and
// X~_n = sqrt(n)(m~_n - M~_n)/sqrt(chi~_n).
struct MarginalSummary {
  MarginalMoments spin;
  MarginalMoments weighted;
};

MarginalSummary standardize(const JointDistribution& jd, const Observables& obs);

// Exact per-site Gibbs expectations E[sigma_i]: enumeration for small n,
// leave-one-out transfer computation (one run per distinct weight)
// otherwise. Throws a representation error when neither route applies.
std::vector<double> spin_expectations(const WeightSequence& ws,
                                      const ModelParams& p);

}  // namespace icw
