#include <benchmark/benchmark.h>

#include "icw/exact_dist.hpp"
#include "icw/landau.hpp"
#include "icw/quadrature.hpp"
#include "icw/sampler.hpp"
#include "icw/stein.hpp"

namespace {

icw::WeightSequence mixed(std::size_t n) {
  return icw::WeightSequence::from_values({1, 1, 2, 2}).replicate(n / 4);
}

void BM_TransferJoint(benchmark::State& state) {
  const auto ws = mixed(static_cast<std::size_t>(state.range(0)));
  const icw::ModelParams p(0.3, 0.1);
  for (auto _ : state) {
    auto jd = icw::dp_joint(ws, p);
    benchmark::DoNotOptimize(jd);
  }
}
BENCHMARK(BM_TransferJoint)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Cgf(benchmark::State& state) {
  const auto ws = mixed(64);
  const icw::ModelParams p(0.3, 0.1);
  for (auto _ : state) {
    auto res = icw::cgf(ws, p, 0.2);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_Cgf)->Unit(benchmark::kMillisecond);

void BM_HsDensityBuild(benchmark::State& state) {
  const auto ws = mixed(64);
  const icw::ModelParams p(0.3, 0.1);
  for (auto _ : state) {
    auto density = icw::HsDensity::build(ws, p);
    benchmark::DoNotOptimize(density);
  }
}
BENCHMARK(BM_HsDensityBuild)->Unit(benchmark::kMillisecond);

void BM_ExactSampler(benchmark::State& state) {
  const auto ws = mixed(64);
  const icw::ModelParams p(0.3, 0.1);
  const auto density = icw::HsDensity::build(ws, p);
  for (auto _ : state) {
    auto batch = icw::sample_exact(ws, p, density, 1000, 7);
    benchmark::DoNotOptimize(batch);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ExactSampler)->Unit(benchmark::kMillisecond);

void BM_GlauberSteps(benchmark::State& state) {
  const auto ws = mixed(256);
  const icw::ModelParams p(0.3, 0.1);
  icw::GlauberChain chain(ws, p, icw::Configuration(256, 1), 5);
  for (auto _ : state) {
    for (int i = 0; i < 1000; ++i) benchmark::DoNotOptimize(chain.step());
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_GlauberSteps);

void BM_SteinDiagnostics(benchmark::State& state) {
  const auto ws = mixed(256);
  const icw::ModelParams p(0.3, 0.1);
  const auto obs = icw::compute_observables(ws, p);
  const auto means = icw::spin_expectations(ws, p);
  icw::Configuration cfg(256);
  for (std::size_t i = 0; i < 256; ++i) cfg[i] = (i % 3 == 0) ? -1 : 1;
  for (auto _ : state) {
    auto d = icw::decomposition_terms(ws, p, obs, means, cfg);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_SteinDiagnostics);

}  // namespace

BENCHMARK_MAIN();
