#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace icw {

// Limiting weight distribution W: a finite list of positive atoms with
// probabilities summing to one. The empirical law of a replicated weight
// sequence is of this form, so the limit model and the finite-n model share
// one representation.
struct WeightLaw {
  struct Atom {
    double value;
    double prob;
  };
  std::vector<Atom> atoms;

  // Validates positivity and normalization (1e-12 tolerance on the sum).
  static WeightLaw validated(std::vector<Atom> atoms);

  // E[W^k] for k in {1,2,3}.
  double moment(int k) const;

  // sum_j p_j f(v_j)
  template <class F>
  double average(F&& f) const {
    double acc = 0.0;
    for (const auto& a : atoms) acc += a.prob * f(a.value);
    return acc;
  }
};

// beta_c = E[W] / E[W^2]
double critical_beta(const WeightLaw& law);

// A deterministic vertex weight sequence (w_i), all strictly positive.
// When the weights are rational with a common denominator q, the sequence
// carries q so that q*w_i lives on an integer lattice and the exact transfer
// computation applies; otherwise only enumeration / Monte Carlo routes work.
class WeightSequence {
 public:
  static WeightSequence from_values(std::vector<double> values);

  // k copies of the base multiset. Replication keeps every empirical moment
  // bit-for-bit constant, so the finite-n family realizes a fixed limit law.
  WeightSequence replicate(std::size_t k) const;

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  // (1/n) sum_i w_i^k, k in {1,2,3}
  double moment(int k) const;

  // ell_n = sum_i w_i
  double total() const { return total_; }

  std::optional<std::int64_t> integer_scale() const { return integer_scale_; }

  // Empirical law: distinct values with multiplicity/n probabilities.
  WeightLaw empirical_law() const;

  static constexpr std::size_t kMaxSites = 1u << 20;

 private:
  WeightSequence() = default;
  std::vector<double> values_;
  double moments_[3] = {0, 0, 0};
  double total_ = 0;
  std::optional<std::int64_t> integer_scale_;
};

}  // namespace icw
