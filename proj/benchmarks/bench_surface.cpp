#include <benchmark/benchmark.h>

#include "stacked/configuration.hpp"
#include "stacked/immersion.hpp"
#include "stacked/surface_solver.hpp"

using namespace stacked;

namespace {

Configuration rpd() {
  CatalogParams p;
  p.K = 2;
  return catalog("rPD", p);
}

GluingState central_rpd(double t) { return GluingState::central(rpd(), t); }

}  // namespace

static void BM_FixOmega(benchmark::State& state) {
  const auto st = central_rpd(0.01);
  for (auto _ : state) benchmark::DoNotOptimize(fix_omega(st));
}
BENCHMARK(BM_FixOmega)->Unit(benchmark::kMillisecond);

static void BM_Residuals(benchmark::State& state) {
  const auto st = central_rpd(0.01);
  for (auto _ : state) benchmark::DoNotOptimize(residuals(st));
}
BENCHMARK(BM_Residuals)->Unit(benchmark::kMillisecond);

static void BM_BuildMesh(benchmark::State& state) {
  static const auto st = newton_continuation(rpd(), 0.02).state;
  const OpenedSurface surf(st);
  const auto series = fix_omega(surf);
  MeshOptions mo;
  mo.grid_res = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_mesh(surf, series, mo));
}
BENCHMARK(BM_BuildMesh)->Arg(48)->Arg(64)->Unit(benchmark::kMillisecond);
