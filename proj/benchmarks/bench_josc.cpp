#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "josc/rounding.hpp"
#include "josc/scenario.hpp"
#include "josc/selection.hpp"
#include "josc/solvers.hpp"

using namespace josc;

namespace {

Matrix equal_split_reference(const Scenario& s) {
  Matrix f(s.num_vehicles(), s.num_rsus());
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j) f(i, j) = s.rsus[j].capacity_hz / s.num_vehicles();
  return f;
}

}  // namespace

static void BM_josc_end_to_end(benchmark::State& state) {
  const Scenario s = generate(1);
  JoscOptions opts;
  opts.record_traces = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(josc::josc(s, opts));
  }
}
BENCHMARK(BM_josc_end_to_end)->Unit(benchmark::kMillisecond);

static void BM_relaxation_solve(benchmark::State& state) {
  const Scenario s = generate(1);
  const Matrix ref = equal_split_reference(s);
  const CandidateSets cands = candidate_sets(s, ref);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_rnlp(s, ref, cands));
  }
}
BENCHMARK(BM_relaxation_solve)->Unit(benchmark::kMillisecond);

static void BM_allocate_nearest(benchmark::State& state) {
  const Scenario s = generate(1);
  const Solution r = ra(s);  // reuse its placement, re-solve the shares
  AllocateOptions opts;
  opts.record_trace = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(allocate(s, r.selection, opts));
  }
}
BENCHMARK(BM_allocate_nearest)->Unit(benchmark::kMillisecond);

static void BM_matching(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937 eng(7);
  std::uniform_real_distribution<double> u(-1.0, 3.0);
  Matrix profit(n, n);
  for (double& v : profit.data) v = u(eng);
  std::vector<int> rc;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hungarian_max_profit(profit, rc));
  }
}
BENCHMARK(BM_matching)->Arg(20)->Arg(60)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
