#include "icw/weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "icw/errors.hpp"

namespace icw {

namespace {

// Smallest denominator d <= limit with |w*d - round(w*d)| tiny, found by
// walking the continued-fraction convergents of w. Returns 0 if none fits.
std::int64_t rational_denominator(double w, std::int64_t limit) {
  double frac = w;
  std::int64_t p_prev = 1, q_prev = 0;
  std::int64_t p = static_cast<std::int64_t>(std::floor(frac)), q = 1;
  frac -= std::floor(frac);
  for (int iter = 0; iter < 64; ++iter) {
    const double approx = static_cast<double>(p) / static_cast<double>(q);
    if (std::fabs(w - approx) <= 1e-13 * std::max(1.0, std::fabs(w))) return q;
    if (frac < 1e-15) break;
    frac = 1.0 / frac;
    const double a_f = std::floor(frac);
    if (a_f > 9e15) break;
    const std::int64_t a = static_cast<std::int64_t>(a_f);
    frac -= a_f;
    const std::int64_t p_next = a * p + p_prev;
    const std::int64_t q_next = a * q + q_prev;
    if (q_next > limit || q_next <= 0) break;
    p_prev = p;
    q_prev = q;
    p = p_next;
    q = q_next;
  }
  const double approx = static_cast<double>(p) / static_cast<double>(q);
  if (std::fabs(w - approx) <= 1e-13 * std::max(1.0, std::fabs(w))) return q;
  return 0;
}

std::optional<std::int64_t> detect_integer_scale(
    const std::vector<double>& values) {
  constexpr std::int64_t kLimit = 1'000'000;
  std::int64_t q = 1;
  for (double w : values) {
    const std::int64_t d = rational_denominator(w, kLimit);
    if (d == 0) return std::nullopt;
    q = std::lcm(q, d);
    if (q > kLimit) return std::nullopt;
  }
  // the invariant the rest of the code relies on: q*w_i is an integer
  for (double w : values) {
    const double scaled = static_cast<double>(q) * w;
    if (std::fabs(scaled - std::round(scaled)) > 1e-12) return std::nullopt;
  }
  return q;
}

}  // namespace

WeightLaw WeightLaw::validated(std::vector<Atom> atoms) {
  if (atoms.empty()) fail(ErrorKind::validation, "weight law has no atoms");
  double sum = 0.0;
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    const auto& a = atoms[j];
    if (!(a.value > 0.0) || !std::isfinite(a.value))
      fail(ErrorKind::validation,
           "weight law atom " + std::to_string(j) + " has non-positive value");
    if (!(a.prob > 0.0) || a.prob > 1.0 || !std::isfinite(a.prob))
      fail(ErrorKind::validation,
           "weight law atom " + std::to_string(j) + " has probability outside (0,1]");
    sum += a.prob;
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    fail(ErrorKind::validation, "weight law probabilities sum to " +
                                    std::to_string(sum) + " instead of 1");
  WeightLaw law;
  law.atoms = std::move(atoms);
  return law;
}

double WeightLaw::moment(int k) const {
  if (k < 1 || k > 3) fail(ErrorKind::validation, "weight moment order must be 1..3");
  double acc = 0.0;
  for (const auto& a : atoms) {
    double v = a.value;
    for (int j = 1; j < k; ++j) v *= a.value;
    acc += a.prob * v;
  }
  return acc;
}

double critical_beta(const WeightLaw& law) {
  return law.moment(1) / law.moment(2);
}

WeightSequence WeightSequence::from_values(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::validation, "weight sequence is empty");
  if (values.size() > kMaxSites)
    fail(ErrorKind::size, "weight sequence exceeds the configured maximum of " +
                              std::to_string(kMaxSites) + " sites");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      fail(ErrorKind::validation,
           "weight " + std::to_string(i) + " = " + std::to_string(values[i]) +
               " is not strictly positive");
  }
  WeightSequence ws;
  ws.values_ = std::move(values);
  const double n = static_cast<double>(ws.values_.size());
  double acc[3] = {0, 0, 0};
  for (double w : ws.values_) {
    acc[0] += w;
    acc[1] += w * w;
    acc[2] += w * w * w;
  }
  for (int k = 0; k < 3; ++k) ws.moments_[k] = acc[k] / n;
  ws.total_ = acc[0];
  ws.integer_scale_ = detect_integer_scale(ws.values_);
  return ws;
}

WeightSequence WeightSequence::replicate(std::size_t k) const {
  if (k < 1) fail(ErrorKind::validation, "replication factor must be >= 1");
  if (values_.size() > kMaxSites / k)
    fail(ErrorKind::size, "replicated sequence would exceed " +
                              std::to_string(kMaxSites) + " sites");
  // Built directly instead of via from_values: the empirical moments of a
  // replicated multiset equal the base moments by definition, so copying the
  // cached values keeps them exact bit-for-bit.
  WeightSequence ws;
  ws.values_.reserve(values_.size() * k);
  for (std::size_t rep = 0; rep < k; ++rep)
    ws.values_.insert(ws.values_.end(), values_.begin(), values_.end());
  for (int j = 0; j < 3; ++j) ws.moments_[j] = moments_[j];
  ws.total_ = static_cast<double>(k) * total_;
  ws.integer_scale_ = integer_scale_;
  return ws;
}

double WeightSequence::moment(int k) const {
  if (k < 1 || k > 3) fail(ErrorKind::validation, "weight moment order must be 1..3");
  return moments_[k - 1];
}

WeightLaw WeightSequence::empirical_law() const {
  std::map<double, std::size_t> counts;
  for (double w : values_) ++counts[w];
  std::vector<WeightLaw::Atom> atoms;
  atoms.reserve(counts.size());
  const double n = static_cast<double>(values_.size());
  for (const auto& [value, count] : counts)
    atoms.push_back({value, static_cast<double>(count) / n});
  return WeightLaw::validated(std::move(atoms));
}

}  // namespace icw
