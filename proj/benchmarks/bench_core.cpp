#include <benchmark/benchmark.h>

#include "smolcircle/local_time.hpp"
#include "smolcircle/massflow.hpp"
#include "smolcircle/particle_system.hpp"

using namespace smolcircle;

static void BM_BridgeLocalTimeQuadrature(benchmark::State& state) {
  double d0 = 0.01, d1 = -0.005;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bridge_local_time_mean(d0, d1, 4e-4));
  }
}
BENCHMARK(BM_BridgeLocalTimeQuadrature);

static void BM_BridgeLocalTimeTable(benchmark::State& state) {
  const auto& table = LocalTimeTable::instance();
  double d0 = 0.01, d1 = -0.005;
  for (auto _ : state) {
    benchmark::DoNotOptimize(table.value(d0, d1, 4e-4));
  }
}
BENCHMARK(BM_BridgeLocalTimeTable);

static void BM_ParticleStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DerivedCoefficients coeffs(KernelSpec::constant(4.0),
                                   DiffusivitySpec::constant(1.0));
  StepParams params;
  params.dt = 2.5e-3;
  auto sys = sample_initial(n, InitialProfile::monodisperse_uniform(), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(sys, coeffs, params));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ParticleStep)->Arg(1000)->Arg(4000)->Arg(8000);

static void BM_HeatStep(benchmark::State& state) {
  FieldState f(256, MassGrid::integer(64));
  for (std::size_t j = 0; j < 256; ++j) {
    for (std::size_t b = 0; b < 64; ++b) f.at(j, b) = 1.0 / (1.0 + b);
  }
  const auto d = DiffusivitySpec::power_law(0.5);
  for (auto _ : state) {
    heat_step(f, d, 1e-3);
    benchmark::DoNotOptimize(f.values.data());
  }
}
BENCHMARK(BM_HeatStep);

static void BM_CoagRate(benchmark::State& state) {
  const DerivedCoefficients coeffs(KernelSpec::power_sum(1.0, 0.5),
                                   DiffusivitySpec::power_law(1.0));
  const auto grid = MassGrid::integer(64);
  const CoagOperator op(coeffs, grid);
  std::vector<double> v(64), rate(64);
  for (std::size_t b = 0; b < 64; ++b) v[b] = 1.0 / (1.0 + b * b);
  for (auto _ : state) {
    op.apply(v, rate);
    benchmark::DoNotOptimize(rate.data());
  }
}
BENCHMARK(BM_CoagRate);

BENCHMARK_MAIN();
