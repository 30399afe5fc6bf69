#include <benchmark/benchmark.h>

#include <random>

#include "scot/align.hpp"
#include "scot/sinkhorn.hpp"

namespace {

scot::Matrix gaussian(scot::Index rows, scot::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  scot::Matrix m(rows, cols);
  for (scot::Index i = 0; i < rows; ++i)
    for (scot::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

scot::Matrix cost_for(scot::Index n) {
  std::mt19937_64 rng(42);
  return scot::cost_matrix(gaussian(n, 32, rng), gaussian(n, 32, rng)).cost;
}

// Fixed iteration count so the two domains do the same amount of work.
void run(benchmark::State& state, bool log_domain) {
  const scot::Index n = state.range(0);
  const scot::Matrix cost = cost_for(n);
  scot::SinkhornConfig cfg;
  cfg.tol = 0.0;
  cfg.log_domain = log_domain;
  for (auto _ : state) {
    const scot::Coupling c = scot::sinkhorn_solve(cost, cfg);
    benchmark::DoNotOptimize(c.plan.data());
  }
  state.SetComplexityN(n);
}

void BM_SinkhornScaling(benchmark::State& state) { run(state, false); }
void BM_SinkhornLogDomain(benchmark::State& state) { run(state, true); }

void BM_CostMatrix(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const scot::Index n = state.range(0);
  const scot::Matrix zs = gaussian(n, 32, rng);
  const scot::Matrix zt = gaussian(n, 32, rng);
  for (auto _ : state) benchmark::DoNotOptimize(scot::cost_matrix(zs, zt).cost.data());
}

}  // namespace

BENCHMARK(BM_SinkhornScaling)->RangeMultiplier(2)->Range(16, 256)->Complexity();
BENCHMARK(BM_SinkhornLogDomain)->RangeMultiplier(2)->Range(16, 256)->Complexity();
BENCHMARK(BM_CostMatrix)->Arg(20)->Arg(100)->Arg(400);
