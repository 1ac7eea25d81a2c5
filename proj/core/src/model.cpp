#include "icw/model.hpp"

#include <cmath>
#include <string>

#include "icw/errors.hpp"

namespace icw {

ModelParams::ModelParams(double beta_, double h_) : beta(beta_), h(h_) {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    fail(ErrorKind::validation,
         "inverse temperature must be finite and >= 0, got " + std::to_string(beta_));
  if (!std::isfinite(h))
    fail(ErrorKind::validation, "external field must be finite");
}

void validate_configuration(const Configuration& cfg) {
  for (std::size_t i = 0; i < cfg.size(); ++i)
    if (cfg[i] != 1 && cfg[i] != -1)
      fail(ErrorKind::validation,
           "spin " + std::to_string(i) + " is " + std::to_string(cfg[i]) +
               ", expected -1 or +1");
}

std::int64_t spin_sum(const Configuration& cfg) {
  std::int64_t s = 0;
  for (int spin : cfg) s += spin;
  return s;
}

double weighted_spin_sum(const WeightSequence& ws, const Configuration& cfg) {
  double t = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i)
    t += cfg[i] > 0 ? ws[i] : -ws[i];
  return t;
}

double hamiltonian(const WeightSequence& ws, const ModelParams& p,
                   const Configuration& cfg) {
  if (cfg.size() != ws.size())
    fail(ErrorKind::dimension,
         "configuration has " + std::to_string(cfg.size()) + " spins, weights have " +
             std::to_string(ws.size()));
  const double t = weighted_spin_sum(ws, cfg);
  const double s = static_cast<double>(spin_sum(cfg));
  return -p.beta / (2.0 * ws.total()) * t * t - p.h * s;
}

double log_gibbs_weight(const WeightSequence& ws, const ModelParams& p,
                        std::int64_t s, double t) {
  return p.beta * t * t / (2.0 * ws.total()) +
         p.h * static_cast<double>(s);
}

bool in_uniqueness_regime(const WeightLaw& law, const ModelParams& p) {
  if (p.h != 0.0) return true;
  return p.beta > 0.0 && p.beta < critical_beta(law);
}

}  // namespace icw
