#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "chainhydro/microsim.hpp"
#include "chainhydro/observables.hpp"
#include "chainhydro/pdesolver.hpp"
#include "chainhydro/thermo.hpp"

using namespace chainhydro;

namespace {

const ThermoModel& model() {
  static const ThermoModel m(Potential::mollified_kappa(), 1.0);
  return m;
}

ChainState gibbs_state(std::size_t n, double tau, Rng& rng) {
  ChainState s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto site = model().sample_site(0.0, tau, rng);
    s.r[i] = site.r;
    s.p[i] = site.p;
  }
  return s;
}

} // namespace

static void BM_IntegratorStep(benchmark::State& state) {
  SimConfig cfg;
  cfg.N = static_cast<std::size_t>(state.range(0));
  cfg.schedule = TensionSchedule::constant(0.5);
  Rng rng(1);
  ChainState s = gibbs_state(cfg.N, 0.5, rng);
  Integrator integ(cfg);
  const double dt = stable_dt(cfg);
  for (auto _ : state) {
    integ.step(s, dt, rng);
    benchmark::DoNotOptimize(s.r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IntegratorStep)->Arg(128)->Arg(512)->Arg(2048);

static void BM_ThermoQueries(benchmark::State& state) {
  const ThermoModel& m = model();
  double ell = -1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.tau_of_ell(ell));
    benchmark::DoNotOptimize(m.free_energy_F(ell));
    ell = ell > 2.0 ? -1.0 : ell + 1e-3;
  }
}
BENCHMARK(BM_ThermoQueries);

static void BM_ThermoConstruction(benchmark::State& state) {
  for (auto _ : state) {
    ThermoModel m(Potential::mollified_kappa(), 1.0);
    benchmark::DoNotOptimize(m.gibbs_G(0.0));
  }
}
BENCHMARK(BM_ThermoConstruction)->Unit(benchmark::kMillisecond)->Iterations(1);

static void BM_SampleSite(benchmark::State& state) {
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(model().sample_site(0.0, 0.5, rng));
}
BENCHMARK(BM_SampleSite);

static void BM_HatField(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<Frame> frames(26);
  for (auto& f : frames) {
    const ChainState s = gibbs_state(n, 0.5, rng);
    f.r = s.r;
    f.p = s.p;
  }
  const std::size_t l = block_width(n, noise_strength(n, 0.25));
  for (auto _ : state) benchmark::DoNotOptimize(hat_field(frames, l));
}
BENCHMARK(BM_HatField)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);

static void BM_OneBlockResidual(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  const ChainState s = gibbs_state(n, 0.5, rng);
  const std::size_t l = block_width(n, noise_strength(n, 0.25));
  for (auto _ : state) benchmark::DoNotOptimize(one_block_residual(s, l, model()));
}
BENCHMARK(BM_OneBlockResidual)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);

static void BM_MacroStep(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  MacroField f(m, 1e-2);
  for (std::size_t c = 0; c < m; ++c) f.r[c] = model().ell_of_tau(0.0);
  const auto sched = TensionSchedule::smooth_ramp(0.0, 0.6, 0.2);
  const double dt = macro_stable_dt(f, model());
  for (auto _ : state) {
    f = macro_step(f, dt, sched, model());
    benchmark::DoNotOptimize(f.r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MacroStep)->Arg(512)->Arg(2048);
BENCHMARK_MAIN();
