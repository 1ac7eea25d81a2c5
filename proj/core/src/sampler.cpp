#include "icw/sampler.hpp"

#include <cmath>
#include <string>

#include "icw/errors.hpp"

namespace icw {

SampleBatch sample_exact(const WeightSequence& ws, const ModelParams& p,
                         const HsDensity& density, std::size_t count,
                         std::uint64_t seed) {
  const std::size_t n = ws.size();
  const double scale = std::sqrt(p.beta / ws.moment(1));
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Xoshiro256pp rng(seed);
  SampleBatch batch;
  batch.seed = seed;
  batch.method = SampleMethod::auxiliary_field;
  batch.configurations.reserve(count);
  Configuration cfg(n);
  for (std::size_t c = 0; c < count; ++c) {
    const double z = density.sample(rng.uniform());
    for (std::size_t i = 0; i < n; ++i) {
      const double theta = scale * ws[i] * z * inv_sqrt_n + p.h;
      // P(+1) = e^theta / (2 cosh theta) = 1 / (1 + e^{-2 theta})
      const double p_plus = 1.0 / (1.0 + std::exp(-2.0 * theta));
      cfg[i] = rng.uniform() < p_plus ? 1 : -1;
    }
    batch.configurations.push_back(cfg);
  }
  return batch;
}

SampleBatch sample_exact(const WeightSequence& ws, const ModelParams& p,
                         std::size_t count, std::uint64_t seed) {
  return sample_exact(ws, p, HsDensity::build(ws, p), count, seed);
}

double glauber_conditional_mean(const WeightSequence& ws, const ModelParams& p,
                                const Configuration& cfg, std::size_t i) {
  if (cfg.size() != ws.size())
    fail(ErrorKind::dimension, "configuration / weight size mismatch");
  if (i >= ws.size())
    fail(ErrorKind::validation, "site index " + std::to_string(i) + " out of range");
  const double n = static_cast<double>(ws.size());
  const double t = weighted_spin_sum(ws, cfg);
  const double loo_mean = (t - ws[i] * cfg[i]) / n;  // m~_n^i
  return std::tanh(p.beta * ws[i] / ws.moment(1) * loo_mean + p.h);
}

PairSample glauber_step(const WeightSequence& ws, const ModelParams& p,
                        Configuration& cfg, Xoshiro256pp& rng) {
  const std::size_t site = static_cast<std::size_t>(rng.below(ws.size()));
  const double mean = glauber_conditional_mean(ws, p, cfg, site);
  const int resampled = rng.uniform() < 0.5 * (1.0 + mean) ? 1 : -1;
  PairSample pair{cfg, site, resampled};
  cfg[site] = resampled;
  return pair;
}

GlauberChain::GlauberChain(const WeightSequence& ws, const ModelParams& p,
                           Configuration initial, std::uint64_t seed)
    : ws_(ws), p_(p), cfg_(std::move(initial)), rng_(seed) {
  validate_configuration(cfg_);
  if (cfg_.size() != ws_.size())
    fail(ErrorKind::dimension, "configuration / weight size mismatch");
  s_ = icw::spin_sum(cfg_);
  t_ = icw::weighted_spin_sum(ws_, cfg_);
}

std::pair<std::size_t, int> GlauberChain::step() {
  const std::size_t n = ws_.size();
  const std::size_t site = static_cast<std::size_t>(rng_.below(n));
  const double loo_mean = (t_ - ws_[site] * cfg_[site]) / static_cast<double>(n);
  const double mean =
      std::tanh(p_.beta * ws_[site] / ws_.moment(1) * loo_mean + p_.h);
  const int resampled = rng_.uniform() < 0.5 * (1.0 + mean) ? 1 : -1;
  if (resampled != cfg_[site]) {
    s_ += 2 * resampled;
    t_ += 2.0 * resampled * ws_[site];
    cfg_[site] = resampled;
  }
  return {site, resampled};
}

}  // namespace icw
