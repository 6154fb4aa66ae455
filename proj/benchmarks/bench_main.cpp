#include <benchmark/benchmark.h>

#include <cmath>

#include "conic/classical.hpp"
#include "conic/microlocal.hpp"
#include "conic/propagator.hpp"
#include "conic/quantum.hpp"

using namespace conic;

namespace {

WaveFunction packet(const PolarGrid& g) {
  WaveFunction u(Space::Curved, g);
  for (int i = 0; i < g.nr; ++i)
    for (int j = 0; j < g.ntheta; ++j) {
      const double x = g.r(i) - 0.5 * (g.r(0) + g.r_max());
      u.at(i, j) = std::exp(-x * x + cplx(0.0, 4.0 * g.r(i))) * (1.0 + 0.2 * std::cos(g.theta(j)));
    }
  return u;
}

void BM_IntegrateFlow(benchmark::State& st) {
  const Model m = make_builtin_model("composite");
  for (auto _ : st) {
    const Trajectory tr = integrate_flow(m.metric, m.potential, {8.0, 1.0, -0.9, 0.3}, -static_cast<double>(st.range(0)),
                                         {1e-10});
    benchmark::DoNotOptimize(tr.samples.back().z.r);
  }
}
BENCHMARK(BM_IntegrateFlow)->Arg(100)->Arg(10000);

void BM_ScatteringData(benchmark::State& st) {
  const Model m = make_builtin_model("bump");
  for (auto _ : st) {
    const ScatteringData sd = extract_scattering_data(m.metric, m.potential, {8.0, 1.0, -0.9, 0.3});
    benchmark::DoNotOptimize(sd.r_minus);
  }
}
BENCHMARK(BM_ScatteringData)->Unit(benchmark::kMillisecond);

void BM_HamiltonianApply(benchmark::State& st) {
  const Model m = make_builtin_model("composite");
  const PolarGrid g{2.0, 0.02, static_cast<int>(st.range(0)), 64};
  const CurvedPropagator P(m.metric, m.potential, g, Scheme::Spectral, 0.05);
  const WaveFunction u = packet(g);
  std::vector<cplx> out;
  for (auto _ : st) {
    P.apply(u.data, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(g.size()));
}
BENCHMARK(BM_HamiltonianApply)->Arg(512)->Arg(2048);

void BM_SpectralEvolve(benchmark::State& st) {
  const Model m = make_builtin_model("bump");
  const PolarGrid g{2.0, 0.02, 1024, 32};
  const CurvedPropagator P(m.metric, m.potential, g, Scheme::Spectral, 0.05);
  const WaveFunction u = packet(g);
  EvolutionConfig ec;
  ec.t_total = 0.1;
  ec.dt = 0.1;
  for (auto _ : st) benchmark::DoNotOptimize(P.evolve(u, ec).data.data());
}
BENCHMARK(BM_SpectralEvolve)->Unit(benchmark::kMillisecond);

void BM_WeylSandwich(benchmark::State& st) {
  const Model m = make_builtin_model("flat");
  const PolarGrid g = PolarGrid::covering(4.0, 12.0, 1.0 / 64.0, 64);
  const WaveFunction u = packet(g);
  SymbolCutoff a;
  a.center = {8.0, 1.0, 0.5, 0.0};
  const PositionWindow psi;
  for (auto _ : st)
    benchmark::DoNotOptimize(sandwich(a, 1.0 / 32.0, u, Quantization::Standard, psi, m.metric).data.data());
}
BENCHMARK(BM_WeylSandwich)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
