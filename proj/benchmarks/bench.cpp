#include <benchmark/benchmark.h>

#include <cmath>

#include "support.hpp"

using namespace dupin;
using namespace dupin::test;

static void BM_FdJet(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const ImmersionSample s = torus(2.0, 1.0, box({n, n}, {0.2, 0.3}, {1.6, 1.7}));
  for (auto _ : st) benchmark::DoNotOptimize(fd_jet(s.pos, 0, 2, 8));
  st.SetItemsProcessed(st.iterations() * n * n);
}
BENCHMARK(BM_FdJet)->Arg(21)->Arg(41)->Arg(81);

static void BM_SolveLinear(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const Triple t = torus_triple(2.0, 1.0, box({n, n}, {0.2, 0.3}, {1.6, 1.7}));
  const BSolve B = solve_B(t, {1.0, 0.5});
  for (auto _ : st) benchmark::DoNotOptimize(solve_linear(t, B.B, {1.0, {0.1, -0.2}, {0.3}}));
  st.SetItemsProcessed(st.iterations() * n * n);
}
BENCHMARK(BM_SolveLinear)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);

static void BM_NRibaucourTransform(benchmark::State& st) {
  const int ny = static_cast<int>(st.range(0));
  const ImmersionSample h = circle(1.0, box({21}, {0}, {2}), 4);
  const ParallelNormalSubbundle n = attach_subbundle(h, {1});
  const RibaucourSolution w = canonicalize(
      solve_linear(*h.triple, solve_B(*h.triple, {1.0}).B, {1.0, {0.0}, {3.0, 0.0, 0.5}}), *h.triple, {1});
  const Grid y = box({ny}, {-1}, {1});
  for (auto _ : st) benchmark::DoNotOptimize(n_ribaucour_transform(h, n, w, y));
  st.SetItemsProcessed(st.iterations() * 21 * ny);
}
BENCHMARK(BM_NRibaucourTransform)->Arg(21)->Arg(81)->Unit(benchmark::kMillisecond);

static void BM_Diagnose(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const ImmersionSample s = torus(2.0, 1.0, box({n, n}, {0.2, 0.3}, {1.6, 1.7}));
  for (auto _ : st) benchmark::DoNotOptimize(diagnose(s));
  st.SetItemsProcessed(st.iterations() * n * n);
}
BENCHMARK(BM_Diagnose)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
