#include "evoel/discretization.hpp"
#include "evoel/evolution.hpp"
#include "evoel/model_zoo.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace evoel;

namespace {

ModelSpec cosserat(Index n) {
  ModelSpec s;
  s.name = "cosserat";
  s.grid = Grid(n, 1.0 / static_cast<double>(n + 1));
  return s;
}

void BM_AssembleA(benchmark::State& state) {
  const ModelSpec s = cosserat(state.range(0));
  const auto& info = model_info("cosserat");
  for (auto _ : state) benchmark::DoNotOptimize(assemble_A(info.layout, info.couplings, s.grid));
}
BENCHMARK(BM_AssembleA)->Arg(8)->Arg(16);

void BM_StepperSetup(benchmark::State& state) {
  const Model m = build(cosserat(state.range(0)));
  for (auto _ : state) {
    Stepper st(m.problem, 1e-3, Scheme::midpoint);
    benchmark::DoNotOptimize(st.dt());
  }
}
BENCHMARK(BM_StepperSetup)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_MidpointStep(benchmark::State& state) {
  const Model m = build(cosserat(state.range(0)));
  Stepper st(m.problem, 1e-3, Scheme::midpoint);
  Vector u = Vector::Zero(m.problem.size()), v = u;
  const Vector f = Vector::Ones(m.problem.size());
  for (auto _ : state) {
    st.step(u, v, f);
    benchmark::DoNotOptimize(u.data());
  }
}
BENCHMARK(BM_MidpointStep)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_HemitropicBlockInverse(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  Matrix a(18, 18);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
  const Matrix full = a * a.transpose() / 18.0 + 0.5 * Matrix::Identity(18, 18);
  HemitropicBlocks b{full.topLeftCorner(9, 9), full.bottomLeftCorner(9, 9), full.bottomRightCorner(9, 9)};
  const BlockOperator s = hemitropic_stiffness(b);
  for (auto _ : state) benchmark::DoNotOptimize(block_inverse_2x2(s));
}
BENCHMARK(BM_HemitropicBlockInverse);

}  // namespace

BENCHMARK_MAIN();
