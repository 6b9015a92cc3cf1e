// Serial reference against the OpenMP fan-out over simulations.

#include <benchmark/benchmark.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "iiekf/monte_carlo.hpp"

using namespace iiekf::crane;

namespace {

ScenarioConfig bench_config(int id, int sims) {
  ScenarioConfig cfg = default_scenario(id);
  cfg.n_sims = sims;
  cfg.seed = 1;
  return cfg;
}

void BM_MonteCarloSerial(benchmark::State& state) {
  const ScenarioConfig cfg = bench_config(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(run_monte_carlo(cfg, Execution::Serial));
  state.SetItemsProcessed(state.iterations() * cfg.n_sims);
}

void BM_MonteCarloParallel(benchmark::State& state) {
  const ScenarioConfig cfg = bench_config(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(run_monte_carlo(cfg, Execution::Parallel));
  state.SetItemsProcessed(state.iterations() * cfg.n_sims);
#ifdef _OPENMP
  state.counters["threads"] = omp_get_max_threads();
#endif
}

void BM_SingleSimulation(benchmark::State& state) {
  const ScenarioConfig cfg = bench_config(static_cast<int>(state.range(0)), 1);
  const TruthTrajectory truth = simulate_truth(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(run_simulation(cfg, truth, 0));
}

}  // namespace

BENCHMARK(BM_MonteCarloSerial)->Args({1, 16})->Args({3, 16})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MonteCarloParallel)->Args({1, 16})->Args({3, 16})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SingleSimulation)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
