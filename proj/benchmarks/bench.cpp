#include <benchmark/benchmark.h>

#include "qbmor/qbmor.hpp"

namespace qbmor {
namespace {

InterpolationPlan r3_plan() {
  InterpolationPlan p;
  p.method = Method::igmm_r3;
  p.points = {0.1, 10.0};
  p.P = 1;
  p.Q = 1;
  p.L = 2;
  return p;
}

// factorization + chain of 4 solves at a fresh shift
void BM_ShiftedChain(benchmark::State& state) {
  const QBSystem sys = build_rc(state.range(0) / 2);
  const CVector b = Matrix(sys.B).col(0).cast<Complex>();
  double s = 1.0;
  for (auto _ : state) {
    ShiftedSolver solver(sys);
    benchmark::DoNotOptimize(solver.xj_chain(s, 3, b));
    s += 1.0;
  }
}
BENCHMARK(BM_ShiftedChain)->Arg(500)->Arg(2500)->Unit(benchmark::kMillisecond);

// solves against a cached factorization
void BM_CachedSolve(benchmark::State& state) {
  const QBSystem sys = build_rc(state.range(0) / 2);
  ShiftedSolver solver(sys);
  const CVector b = Matrix(sys.B).col(0).cast<Complex>();
  solver.xj_apply(1.0, 0, b);
  for (auto _ : state) benchmark::DoNotOptimize(solver.xj_apply(1.0, 0, b));
}
BENCHMARK(BM_CachedSolve)->Arg(500)->Arg(2500)->Unit(benchmark::kMicrosecond);

void BM_BasisIgmmR3(benchmark::State& state) {
  const QBSystem sys = build_rc(state.range(0) / 2);
  const auto plan = r3_plan();
  for (auto _ : state) {
    ShiftedSolver solver(sys);
    benchmark::DoNotOptimize(build_basis(solver, plan));
  }
}
BENCHMARK(BM_BasisIgmmR3)->Arg(500)->Arg(2500)->Unit(benchmark::kMillisecond);

void BM_Project(benchmark::State& state) {
  const QBSystem sys = build_burgers({.n = state.range(0)});
  ShiftedSolver solver(sys);
  const ProjectionBasis basis = build_basis(solver, r3_plan());
  for (auto _ : state) benchmark::DoNotOptimize(project(sys, basis.V, basis.W));
  state.counters["r"] = static_cast<double>(basis.order());
}
BENCHMARK(BM_Project)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SimulateFull(benchmark::State& state) {
  const QBSystem sys = build_burgers({.n = state.range(0)});
  SimOptions o;
  o.t_end = 1.0;
  const auto u = make_input(standard_input("exp-decay"), 1);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(sys, u, o));
}
BENCHMARK(BM_SimulateFull)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SimulateReduced(benchmark::State& state) {
  const QBSystem sys = build_burgers({.n = 1000});
  const ReducedModel red = reduce(sys, r3_plan());
  SimOptions o;
  o.t_end = 1.0;
  const auto u = make_input(standard_input("exp-decay"), 1);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(red.system, u, o));
  state.counters["r"] = static_cast<double>(red.basis.order());
}
BENCHMARK(BM_SimulateReduced)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace qbmor

BENCHMARK_MAIN();
