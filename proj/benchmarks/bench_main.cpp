#include <benchmark/benchmark.h>

#include <random>

#include "mfplan/bass.hpp"
#include "mfplan/drift.hpp"
#include "mfplan/random.hpp"
#include "mfplan/simulate.hpp"

using namespace mfp;

namespace {

Coupling bridge(std::size_t n) {
  const GridSpec g(-6, 6, n);
  return sinkhorn_solve(build_reference(parse_measure_spec("gaussian:0,0.5", g), g),
                        parse_measure_spec("mixture:(gaussian:-1,0.5;1)(gaussian:1.5,0.7;1)", g));
}

void BM_Sinkhorn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bridge(n));
}
BENCHMARK(BM_Sinkhorn)->Arg(121)->Arg(301)->Arg(601)->Unit(benchmark::kMillisecond);

void BM_DriftEvaluate(benchmark::State& state) {
  const DriftField f(bridge(301));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> t(0.0, 0.99), x(-3.0, 3.0);
  std::vector<std::pair<double, double>> pts(4096);
  for (auto& p : pts) p = {t(rng), x(rng)};
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [tt, xx] = pts[i++ & 4095];
    benchmark::DoNotOptimize(f.evaluate(tt, xx));
  }
}
BENCHMARK(BM_DriftEvaluate);

void BM_StepDrift(benchmark::State& state) {
  const DriftField f(bridge(301));
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (std::size_t p = 0; p < x.size(); ++p) x[p] = standard_normal(1, Stream::brownian, p, 0);
  for (auto _ : state) {
    const StepDrift d(f, 0.5, x);
    double s = 0.0;
    for (double v : x) s += d(v);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StepDrift)->Arg(1000)->Arg(100000);

void BM_StandardNormal(benchmark::State& state) {
  std::uint64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(standard_normal(1, Stream::brownian, k++, 3));
}
BENCHMARK(BM_StandardNormal);

void BM_SimulateEquilibrium(benchmark::State& state) {
  const DriftField f(bridge(301));
  SimulationOptions o;
  o.n_paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_equilibrium(f, TimeGrid(200), o));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 200);
}
BENCHMARK(BM_SimulateEquilibrium)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_BassSimulate(benchmark::State& state) {
  const GridSpec g(-6, 6, 601);
  const BassModel m(parse_measure_spec("uniform:0,1", g));
  const auto mu0 = parse_measure_spec("gaussian:0,1", g);
  SimulationOptions o;
  o.n_paths = 10000;
  for (auto _ : state) benchmark::DoNotOptimize(bass_simulate(m, mu0, TimeGrid(500), o));
}
BENCHMARK(BM_BassSimulate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
