#include <benchmark/benchmark.h>

#include "stacked/elliptic.hpp"
#include "stacked/hecke.hpp"

using namespace stacked;

static void BM_Zeta(benchmark::State& state) {
  const Lattice lat(cplx(0.5, 0.8660254037844386));
  cplx z(0.31, 0.17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(zeta(z, lat));
    z += cplx(1e-9, 0.0);
  }
}
BENCHMARK(BM_Zeta);

static void BM_ZetaDerivatives(benchmark::State& state) {
  const Lattice lat(cplx(0.1, 1.3));
  const int jmax = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(zeta_derivatives(cplx(0.2, 0.4), lat, jmax));
}
BENCHMARK(BM_ZetaDerivatives)->Arg(4)->Arg(12);

static void BM_HeckeSolve(benchmark::State& state) {
  const Lattice lat(cplx(0.5, 0.8660254037844386));
  for (auto _ : state) benchmark::DoNotOptimize(solve_G_equals_C(lat, cplx(0.0, 0.0)));
}
BENCHMARK(BM_HeckeSolve)->Unit(benchmark::kMillisecond);
