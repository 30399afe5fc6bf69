#include <benchmark/benchmark.h>

#include <random>

#include "scot/align.hpp"
#include "scot/cycle.hpp"
#include "scot/encoder.hpp"

namespace {

struct Inputs {
  scot::Matrix z;
  scot::Matrix zt;
  scot::Matrix mobility;
};

Inputs make_inputs(scot::Index n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Inputs in{scot::Matrix(n, 32), scot::Matrix(n, 32), scot::Matrix(n, n)};
  for (scot::Index i = 0; i < n; ++i) {
    for (scot::Index j = 0; j < 32; ++j) {
      in.z(i, j) = nd(rng);
      in.zt(i, j) = nd(rng);
    }
    for (scot::Index j = 0; j < n; ++j) in.mobility(i, j) = ud(rng);
    in.mobility.row(i) /= in.mobility.row(i).sum();
  }
  return in;
}

void BM_IntraLoss(benchmark::State& state) {
  const Inputs in = make_inputs(state.range(0));
  for (auto _ : state) {
    const scot::IntraLoss l = scot::intra_loss(in.z, in.mobility);
    benchmark::DoNotOptimize(l.grad.data());
  }
}

void BM_AlignStep(benchmark::State& state) {
  const Inputs in = make_inputs(state.range(0));
  const scot::AlignConfig cfg;
  for (auto _ : state) {
    const scot::AlignResult r = scot::align_step(in.z, in.zt, cfg);
    benchmark::DoNotOptimize(r.grad_zs.data());
  }
}

void BM_CycleLoss(benchmark::State& state) {
  const Inputs in = make_inputs(state.range(0));
  std::mt19937_64 rng(5);
  const scot::CycleParams p = scot::init_cycle(32, rng);
  for (auto _ : state) {
    const scot::CycleResult r = scot::cycle_loss(in.z, in.zt, p);
    benchmark::DoNotOptimize(r.grad_zs.data());
  }
}

}  // namespace

BENCHMARK(BM_IntraLoss)->Arg(20)->Arg(100)->Arg(400);
BENCHMARK(BM_AlignStep)->Arg(20)->Arg(100)->Arg(400);
BENCHMARK(BM_CycleLoss)->Arg(20)->Arg(100)->Arg(400);
