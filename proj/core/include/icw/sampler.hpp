#pragma once

#include <cstdint>
#include <vector>

#include "icw/model.hpp"
#include "icw/quadrature.hpp"
#include "icw/rng.hpp"
#include "icw/weights.hpp"

namespace icw {

enum class SampleMethod { auxiliary_field, glauber_chain };

struct SampleBatch {
  std::vector<Configuration> configurations;
  std::uint64_t seed = 0;
  SampleMethod method = SampleMethod::auxiliary_field;
};

// i.i.d. exact Gibbs samples via the auxiliary-field decomposition: draw the
// field z from its tabulated density, then spins independently with
// P(sigma_i = +1) = logistic(2 (sqrt(beta/E[W]) w_i z / sqrt(n) + h)).
SampleBatch sample_exact(const WeightSequence& ws, const ModelParams& p,
                         const HsDensity& density, std::size_t count,
                         std::uint64_t seed);
SampleBatch sample_exact(const WeightSequence& ws, const ModelParams& p,
                         std::size_t count, std::uint64_t seed);

// E[sigma'_i | F_n] = tanh(beta w_i m~_n^i / E[W_n] + h) with the
// leave-one-out weighted mean m~_n^i = (1/n) sum_{j != i} w_j sigma_j.
double glauber_conditional_mean(const WeightSequence& ws, const ModelParams& p,
                                const Configuration& cfg, std::size_t i);

// One heat-bath step: with the spins of cfg, the drawn site and the
// resampled spin sigma'_I form the exchangeable pair of the regression
// equation.
struct PairSample {
  Configuration cfg;  // sigma (before resampling)
  std::size_t site;   // I, uniform on [n]
  int resampled_spin; // sigma'_I
};

PairSample glauber_step(const WeightSequence& ws, const ModelParams& p,
                        Configuration& cfg, Xoshiro256pp& rng);

// Single-site heat-bath chain with O(1) updates of the running sums.
class GlauberChain {
 public:
  GlauberChain(const WeightSequence& ws, const ModelParams& p,
               Configuration initial, std::uint64_t seed);

  // returns (site, resampled spin); the configuration is updated in place
  std::pair<std::size_t, int> step();

  const Configuration& configuration() const { return cfg_; }
  std::int64_t spin_sum() const { return s_; }
  double weighted_spin_sum() const { return t_; }

 private:
  const WeightSequence& ws_;
  ModelParams p_;
  Configuration cfg_;
  std::int64_t s_;
  double t_;
  Xoshiro256pp rng_;
};

}  // namespace icw
