// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include "minsoftmax/montecarlo.hpp"
#include "minsoftmax/oracle.hpp"
#include "minsoftmax/scenarios.hpp"
#include "minsoftmax/solver_finite.hpp"

using namespace minsoftmax;

namespace {

const FiniteSystem& big_system() {
  static const FiniteSystem sys = random_finite_system(
      1, {.n_states = 400, .n_inputs = 10, .n_dist = 20, .horizon = 10});
  return sys;
}

template <auto Solve>
void BM_SolveBackward(benchmark::State& state) {
  const auto& sys = big_system();
  const Penalties pen(2.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(Solve(sys, pen, SolveOptions{}));
}

template <auto Roll>
void BM_Rollout(benchmark::State& state) {
  const auto sc = irrigation_scenario();
  const auto res = solve_backward(*sc.finite, Penalties(30, 100));
  RolloutSpec spec;
  spec.n_rollouts = 5000;
  spec.seed = 3;
  spec.initial_state = kIrrigationInitialState;
  for (auto _ : state) benchmark::DoNotOptimize(Roll(*sc.finite, res, spec, StateMap{}));
}

template <auto Search>
void BM_SimplexSearch(benchmark::State& state) {
  const std::vector<double> r{0.1, 0.2, 0.3, 0.4}, j{1.0, -2.0, 3.0, 0.5};
  const Penalties pen(1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(Search(r, j, pen, 0.01));
}

}  // namespace

BENCHMARK(BM_SolveBackward<solve_backward_serial>)->Name("solve_backward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveBackward<solve_backward>)->Name("solve_backward/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rollout<rollout_serial>)->Name("rollout/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rollout<rollout>)->Name("rollout/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimplexSearch<oracle::simplex_search_serial>)->Name("simplex_search/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimplexSearch<oracle::simplex_search>)->Name("simplex_search/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
