#include <benchmark/benchmark.h>

#include "hslab/bubbles.hpp"
#include "hslab/geometry.hpp"
#include "hslab/green_mass.hpp"
#include "hslab/pohozaev.hpp"
#include "hslab/radial_solver.hpp"

using namespace hslab;

static void BM_BubbleConstants(benchmark::State& st) {
  const ProblemParams p(static_cast<int>(st.range(0)), 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(bubble_constants(p));
}
BENCHMARK(BM_BubbleConstants)->Arg(3)->Arg(5)->Arg(7);

static void BM_SphereRule(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(SphereRule::for_degree(n, 8).size());
}
BENCHMARK(BM_SphereRule)->Arg(4)->Arg(6);

static void BM_CurvatureIdentities(benchmark::State& st) {
  const auto m = ManifoldModel::perturbed_sphere(4, 1.0, 0.8, 0.3);
  for (auto _ : st) benchmark::DoNotOptimize(curvature_identities(m));
}
BENCHMARK(BM_CurvatureIdentities);

static void BM_Minimize(benchmark::State& st) {
  const RadialProblem pr{{4, 1.0}, ManifoldModel::sphere(4, 1.0, 0.5), RadialPotential(1.5),
                         GridOptions{1e-6, 1.0 / static_cast<double>(st.range(0)), 4}};
  for (auto _ : st) benchmark::DoNotOptimize(minimize(pr).lambda);
}
BENCHMARK(BM_Minimize)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_BlowupLadder(benchmark::State& st) {
  const RadialProblem pr{{4, 1.0}, ManifoldModel::sphere(4, 1.0, 0.5), RadialPotential(1.5), {}};
  for (auto _ : st) benchmark::DoNotOptimize(blowup_ladder(pr, {1e-1, 1e-2, 1e-3}).size());
}
BENCHMARK(BM_BlowupLadder)->Unit(benchmark::kMillisecond);

static void BM_PohozaevFlatBubble(benchmark::State& st) {
  auto in = flat_bubble_ladder({5, 1.0}, 1.0, 1.0, {1e-3}).front();
  in.radial = st.range(0) != 0;
  for (auto _ : st) benchmark::DoNotOptimize(pohozaev_terms(in).B.value);
}
BENCHMARK(BM_PohozaevFlatBubble)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

static void BM_SolveGreen(benchmark::State& st) {
  const auto m = ManifoldModel::sphere(static_cast<int>(st.range(0)), 1.0, 0.5);
  for (auto _ : st) benchmark::DoNotOptimize(solve_green(m, RadialPotential(0.8)).regular_coefficient());
}
BENCHMARK(BM_SolveGreen)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_Mass(benchmark::State& st) {
  const auto m = ManifoldModel::sphere(3, 1.0, 0.5);
  for (auto _ : st) benchmark::DoNotOptimize(mass(m, 0.6).mass);
}
BENCHMARK(BM_Mass)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
