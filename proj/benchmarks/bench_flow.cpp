#include <benchmark/benchmark.h>

#include <cmath>

#include "kflow/flow.hpp"
#include "kflow/support_geometry.hpp"

namespace {

kflow::SupportSamples test_curve(std::size_t grid) {
  return kflow::SupportSamples::sample(2, grid, [](double t) { return 2.0 + 0.1 * std::cos(t / 2) + 0.02 * std::cos(2 * t); });
}

void BM_RhoFromP(benchmark::State& state) {
  const auto p = test_curve(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kflow::rho_from_p(p));
}
BENCHMARK(BM_RhoFromP)->Arg(256)->Arg(1024)->Arg(4096);

void BM_FdStep(benchmark::State& state) {
  const auto grid = static_cast<std::size_t>(state.range(0));
  const auto s0 = kflow::initial_state(test_curve(grid), 2);
  const double dt = kflow::fd_stable_dt(2, grid, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kflow::fd_step(s0, dt, 0.0));
}
BENCHMARK(BM_FdStep)->Arg(256)->Arg(1024);

void BM_SpectralEvolve(benchmark::State& state) {
  const auto grid = static_cast<std::size_t>(state.range(0));
  const auto s0 = kflow::spectral_state_from(test_curve(grid), 2);
  kflow::SpectralOptions opts;
  opts.grid = grid;
  for (auto _ : state) benchmark::DoNotOptimize(kflow::spectral_evolve(s0, 1.0, opts));
}
BENCHMARK(BM_SpectralEvolve)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_LambdaSolve(benchmark::State& state) {
  const auto s0 = kflow::initial_state(test_curve(256), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kflow::lambda_solve(s0, 1.0, 0.0));
}
BENCHMARK(BM_LambdaSolve);

}  // namespace

BENCHMARK_MAIN();
