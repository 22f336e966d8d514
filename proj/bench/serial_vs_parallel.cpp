// Serial reference loops against the OpenMP kernels. Arg 0 is serial,
// arg 1 parallel; the outputs are identical, only the wall time differs.

#include <vector>

#include <benchmark/benchmark.h>

#include "dynsparse/dynamic_prior.hpp"
#include "dynsparse/group_lasso.hpp"
#include "dynsparse/smc.hpp"
#include "dynsparse/synthetic.hpp"

using namespace dynsparse;

namespace {

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "openmp" : "serial"); }

void BM_simulate_path(benchmark::State& state) {
  const ModelConfig c = ModelConfig::fixed_order(0.1, 0.01, 1.0, 0.5, 20, 1.0, 8);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_path(c, 20000, 1, mode(state)));
  label(state);
}

void BM_autocorrelation(benchmark::State& state) {
  const ModelConfig c = ModelConfig::fixed_order(0.1, 0.01, 1.0, 0.0, 5, 1.0);
  const SimulatedPath path = simulate_path(c, 100000, 2);
  std::vector<double> squared(path.beta.data(), path.beta.data() + path.beta.size());
  for (double& v : squared) v *= v;
  for (auto _ : state) benchmark::DoNotOptimize(autocorrelation(squared, 500, mode(state)));
  label(state);
}

void BM_smc_run(benchmark::State& state) {
  const SyntheticSeries s = piecewise_signal(3);
  const ModelConfig c = ModelConfig::time_varying(1.0, 0.01, 1.0, 0.8, 0.9, 1.0);
  SmcOptions opt;
  opt.n_particles = 2000;
  opt.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(smc_run(s.data, c, opt, 4));
  label(state);
}

void BM_sliding_window(benchmark::State& state) {
  const SyntheticSeries s = portfolio_series(5);
  const ModelConfig c = ModelConfig::fixed_order(1.0, 0.01, 2.0, 0.5, 6, 1.0, 5);
  GlassoOptions opt;
  opt.exec = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(run_sliding_window(s.data, c, opt));
  label(state);
}

}  // namespace

BENCHMARK(BM_simulate_path)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_autocorrelation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_smc_run)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sliding_window)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
