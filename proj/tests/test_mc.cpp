#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cmath>
#include <map>

#include "doctest.h"
#include "icw/exact_dist.hpp"
#include "icw/landau.hpp"
#include "icw/sampler.hpp"

using namespace icw;

namespace {

WeightSequence mixed12() {
  return WeightSequence::from_values({1, 1, 2, 2}).replicate(3);
}

}  // namespace

TEST_CASE("batches are reproducible by seed") {
  const auto ws = mixed12();
  const ModelParams p(0.3, 0.1);
  const auto density = HsDensity::build(ws, p);
  const auto a = sample_exact(ws, p, density, 64, 42);
  const auto b = sample_exact(ws, p, density, 64, 42);
  const auto c = sample_exact(ws, p, density, 64, 43);
  CHECK(a.configurations == b.configurations);
  CHECK(a.configurations != c.configurations);
}

TEST_CASE("free spins have the right mean") {
  const auto ws = WeightSequence::from_values({1, 1, 2, 2});
  const double h = 0.3;
  const auto batch = sample_exact(ws, ModelParams(0.0, h), 250'000, 7);
  double acc = 0.0;
  for (const auto& cfg : batch.configurations)
    acc += static_cast<double>(spin_sum(cfg));
  const double mean = acc / (250'000.0 * 4.0);
  const double target = std::tanh(h);
  const double se = std::sqrt((1.0 - target * target) / (250'000.0 * 4.0));
  CHECK(std::fabs(mean - target) <= 4.0 * se);
}

TEST_CASE("sampled joint law close to the exact one") {
  const auto ws = mixed12();
  const ModelParams p(0.3, 0.1);
  const auto jd = enumerate_joint(ws, p);
  constexpr std::size_t kCount = 200'000;
  const auto batch = sample_exact(ws, p, kCount, 99);
  const std::int64_t q = *ws.integer_scale();
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> counts;
  for (const auto& cfg : batch.configurations)
    ++counts[{spin_sum(cfg), std::llround(q * weighted_spin_sum(ws, cfg))}];
  double tv = 0.0;
  for (const auto& a : jd.atoms) {
    const auto it = counts.find({a.s, a.qt});
    const double emp =
        it == counts.end() ? 0.0 : static_cast<double>(it->second) / kCount;
    tv += std::fabs(emp - std::exp(a.log_mass));
  }
  tv *= 0.5;
  CHECK(tv <= 0.02);
}

TEST_CASE("sign symmetry of sampled spin sums at h=0") {
  const auto ws = WeightSequence::from_values({1, 1, 2, 2}).replicate(2);
  const auto batch = sample_exact(ws, ModelParams(0.4, 0.0), 100'000, 3);
  std::size_t pos = 0, neg = 0;
  for (const auto& cfg : batch.configurations) {
    const auto s = spin_sum(cfg);
    if (s > 0) ++pos;
    if (s < 0) ++neg;
  }
  const double total = static_cast<double>(pos + neg);
  const double z = (pos - neg) / std::sqrt(total);
  CHECK(std::fabs(z) <= 4.0);
}

TEST_CASE("heat-bath conditional mean") {
  // zero leave-one-out mean and zero field
  const auto w3 = WeightSequence::from_values({1, 1, 1});
  CHECK(glauber_conditional_mean(w3, ModelParams(0.7, 0.0), {1, -1, 1}, 2) == 0.0);
  // beta = 0: always tanh(h)
  const auto ws = mixed12();
  Configuration cfg(12, 1);
  CHECK(glauber_conditional_mean(ws, ModelParams(0.0, 0.25), cfg, 5) ==
        doctest::Approx(std::tanh(0.25)).epsilon(1e-15));
  // hand-computed: w = [1,1,2], sigma = (+,-,+), site 0, beta=0.6, h=0.1
  // loo mean = (-1 + 2)/3, E[W] = 4/3, argument = 0.6*(1/3)/(4/3) + 0.1 = 0.25
  const auto w112 = WeightSequence::from_values({1, 1, 2});
  CHECK(glauber_conditional_mean(w112, ModelParams(0.6, 0.1), {1, -1, 1}, 0) ==
        doctest::Approx(0.24491866240370913).epsilon(1e-15));
}

TEST_CASE("heat-bath resampling frequencies match the conditional law") {
  const auto ws = WeightSequence::from_values({1.0, 2.0, 1.5});
  const ModelParams p(0.5, 0.2);
  const Configuration base = {1, -1, 1};
  Xoshiro256pp rng(1234);
  std::array<std::size_t, 3> hits{}, plus{};
  for (int iter = 0; iter < 150'000; ++iter) {
    Configuration cfg = base;
    const auto pair = glauber_step(ws, p, cfg, rng);
    CHECK(pair.cfg == base);  // the pair carries sigma, not sigma'
    ++hits[pair.site];
    if (pair.resampled_spin == 1) ++plus[pair.site];
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const double target = 0.5 * (1.0 + glauber_conditional_mean(ws, p, base, i));
    const double n_i = static_cast<double>(hits[i]);
    const double freq = plus[i] / n_i;
    const double se = std::sqrt(target * (1.0 - target) / n_i);
    CHECK(std::fabs(freq - target) <= 4.0 * se);
  }
}

TEST_CASE("single-site chain resamples the exact one-spin law") {
  const auto ws = WeightSequence::from_values({1.0});
  const ModelParams p(0.8, 0.4);
  GlauberChain chain(ws, p, {1}, 5);
  std::size_t plus = 0;
  constexpr int kSteps = 200'000;
  for (int i = 0; i < kSteps; ++i) {
    chain.step();
    if (chain.configuration()[0] == 1) ++plus;
  }
  const double target = std::exp(0.4) / (2.0 * std::cosh(0.4));
  const double freq = static_cast<double>(plus) / kSteps;
  // steps are iid draws for n=1 (the conditional ignores the current spin)
  const double se = std::sqrt(target * (1.0 - target) / kSteps);
  CHECK(std::fabs(freq - target) <= 4.0 * se);
}

TEST_CASE("chain started from equilibrium stays there") {
  const auto ws = mixed12();
  const ModelParams p(0.3, 0.1);
  const auto jd = enumerate_joint(ws, p);
  const auto spin = jd.spin_marginal();
  double mean_s = 0.0, second = 0.0;
  for (std::size_t i = 0; i < spin.values.size(); ++i) {
    mean_s += spin.mass[i] * spin.values[i];
    second += spin.mass[i] * spin.values[i] * spin.values[i];
  }
  const double sd_s = std::sqrt(second - mean_s * mean_s);

  constexpr std::size_t kChains = 20'000;
  const auto starts = sample_exact(ws, p, kChains, 17);
  double acc = 0.0;
  for (std::size_t k = 0; k < kChains; ++k) {
    GlauberChain chain(ws, p, starts.configurations[k],
                       0xabcdef12ull ^ static_cast<std::uint64_t>(k));
    for (int step = 0; step < 24; ++step) chain.step();
    acc += static_cast<double>(chain.spin_sum());
  }
  const double mean = acc / kChains;
  const double se = sd_s / std::sqrt(static_cast<double>(kChains));
  CHECK(std::fabs(mean - mean_s) <= 4.0 * se);
}

TEST_CASE("running sums of the chain stay consistent") {
  const auto ws = WeightSequence::from_values({0.5, 1.25, 2.0, 0.75});
  const ModelParams p(0.6, -0.2);
  GlauberChain chain(ws, p, {1, 1, -1, 1}, 11);
  for (int i = 0; i < 5000; ++i) chain.step();
  CHECK(chain.spin_sum() == spin_sum(chain.configuration()));
  CHECK(chain.weighted_spin_sum() ==
        doctest::Approx(weighted_spin_sum(ws, chain.configuration())).epsilon(1e-12));
}

TEST_CASE("exchangeable pair kills antisymmetric functionals") {
  const auto ws = mixed12();
  const ModelParams p(0.3, 0.1);
  const auto obs = compute_observables(ws, p);
  constexpr std::size_t kPairs = 120'000;
  const auto starts = sample_exact(ws, p, kPairs, 23);
  Xoshiro256pp rng(29);
  const double nd = 12.0;
  double acc = 0.0, acc_sq = 0.0;
  for (std::size_t k = 0; k < kPairs; ++k) {
    Configuration cfg = starts.configurations[k];
    const double x = std::sqrt(nd) *
                     (static_cast<double>(spin_sum(cfg)) / nd - obs.magnetization) /
                     std::sqrt(obs.susceptibility);
    const auto pair = glauber_step(ws, p, cfg, rng);
    const double x_prime =
        x - (pair.cfg[pair.site] - pair.resampled_spin) /
                (std::sqrt(nd) * std::sqrt(obs.susceptibility));
    // antisymmetric in (x, x')
    const double g = x * x * x_prime - x_prime * x_prime * x;
    acc += g;
    acc_sq += g * g;
  }
  const double mean = acc / kPairs;
  const double var = acc_sq / kPairs - mean * mean;
  const double se = std::sqrt(var / kPairs);
  CHECK(std::fabs(mean) <= 4.0 * se + 1e-12);
}

TEST_CASE("exact sampler and chain agree on the joint histogram") {
  const auto ws = mixed12();
  const ModelParams p(0.3, 0.1);
  const std::int64_t q = *ws.integer_scale();
  constexpr std::size_t kCount = 60'000;
  const auto direct = sample_exact(ws, p, kCount, 31);
  std::map<std::pair<std::int64_t, std::int64_t>, double> freq_a;
  for (const auto& cfg : direct.configurations)
    freq_a[{spin_sum(cfg), std::llround(q * weighted_spin_sum(ws, cfg))}] += 1.0;

  const auto starts = sample_exact(ws, p, kCount, 37);
  std::map<std::pair<std::int64_t, std::int64_t>, double> freq_b;
  for (std::size_t k = 0; k < kCount; ++k) {
    GlauberChain chain(ws, p, starts.configurations[k],
                       0x5150ull ^ static_cast<std::uint64_t>(k));
    for (int step = 0; step < 24; ++step) chain.step();
    freq_b[{chain.spin_sum(), std::llround(q * chain.weighted_spin_sum())}] += 1.0;
  }
  // two-sample chi-square over cells with enough mass
  double chi_sq = 0.0;
  std::size_t cells = 0;
  for (const auto& [key, na] : freq_a) {
    const auto it = freq_b.find(key);
    const double nb = it == freq_b.end() ? 0.0 : it->second;
    if (na + nb < 20.0) continue;
    const double d = na - nb;
    chi_sq += d * d / (na + nb);
    ++cells;
  }
  const double dof = static_cast<double>(cells - 1);
  CHECK(std::fabs(chi_sq - dof) <= 4.0 * std::sqrt(2.0 * dof));
}
