#include <benchmark/benchmark.h>

#include "tasep/dynamics.hpp"
#include "tasep/master.hpp"
#include "tasep/meanfield.hpp"
#include "tasep/ssa.hpp"

using namespace tasep;

static void BM_MeanFieldField(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  const auto p = LatticeParams::homogeneous(n, 0.5, 0.5);
  const auto sys = SystemSpec::meanfield(m);
  const auto lay = state_layout(sys, n);
  const auto x = uniform_start(sys, n);
  std::vector<double> out(x.size());
  for (auto _ : state) {
    vector_field_g_into(p, lay, x.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_MeanFieldField)->Args({30, 1})->Args({30, 2})->Args({30, 3})->Args({30, 5});

static void BM_FullSystemRhs(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto p = LatticeParams::homogeneous(n, 0.5, 0.5);
  const auto sys = SystemSpec::full();
  const auto x = uniform_start(sys, n);
  std::vector<double> dx;
  for (auto _ : state) {
    system_rhs(sys, p, x, dx);
    benchmark::DoNotOptimize(dx.data());
  }
}
BENCHMARK(BM_FullSystemRhs)->Arg(6)->Arg(10);

static void BM_BuildGenerator(benchmark::State& state) {
  const auto p = LatticeParams::homogeneous(static_cast<int>(state.range(0)), 0.5, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(build_generator(p));
}
BENCHMARK(BM_BuildGenerator)->Arg(10)->Arg(16)->Unit(benchmark::kMicrosecond);

static void BM_StationaryMaster(benchmark::State& state) {
  const auto g = build_generator(LatticeParams::homogeneous(static_cast<int>(state.range(0)), 0.5, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(stationary_master(g));
}
BENCHMARK(BM_StationaryMaster)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_SteadyState(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto sys = SystemSpec::meanfield(static_cast<int>(state.range(1)));
  const auto p = LatticeParams::homogeneous(n, 0.3, 0.7);
  const auto x0 = uniform_start(sys, n);
  for (auto _ : state) benchmark::DoNotOptimize(steady_state(sys, p, x0));
}
BENCHMARK(BM_SteadyState)->Args({8, 2})->Args({8, 3})->Args({16, 2})->Unit(benchmark::kMillisecond);

static void BM_Ssa(benchmark::State& state) {
  SsaConfig cfg{LatticeParams::homogeneous(static_cast<int>(state.range(0)), 1, 1)};
  cfg.n_samples = 1;
  cfg.t_measure = 1000.0;
  cfg.threads = 1;
  std::uint64_t events = 0;
  for (auto _ : state) events += simulate(cfg).events;
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Ssa)->Arg(30)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
