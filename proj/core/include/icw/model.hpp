#pragma once

#include <cstdint>
#include <vector>

#include "icw/weights.hpp"

namespace icw {

// Inverse temperature and external field.
struct ModelParams {
  ModelParams(double beta_, double h_);
  double beta;
  double h;
};

// Spin configuration, entries exactly -1 or +1.
using Configuration = std::vector<int>;

void validate_configuration(const Configuration& cfg);

// S = sum_i sigma_i
std::int64_t spin_sum(const Configuration& cfg);

// T = sum_i w_i sigma_i
double weighted_spin_sum(const WeightSequence& ws, const Configuration& cfg);

// H(sigma) = -(beta / 2 ell_n) T^2 - h S
double hamiltonian(const WeightSequence& ws, const ModelParams& p,
                   const Configuration& cfg);

// Unnormalized log Gibbs weight as a function of the sufficient statistics:
// beta T^2 / (2 ell_n) + h S. The measure depends on sigma only through
// (S, T), which is what makes the exact transfer computation possible.
double log_gibbs_weight(const WeightSequence& ws, const ModelParams& p,
                        std::int64_t s, double t);

// (beta, h) with h != 0, or h == 0 with 0 < beta < beta_c.
bool in_uniqueness_regime(const WeightLaw& law, const ModelParams& p);

}  // namespace icw
