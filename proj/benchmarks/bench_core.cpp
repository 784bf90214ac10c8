#include <benchmark/benchmark.h>

#include "cran/harness.hpp"
#include "cran/oracle.hpp"

using namespace cran;

namespace {

SlotProblem default_slot(CacheMode mode, double lambda) {
  static const ExperimentConfig config = ExperimentConfig::desk();
  static const Scenario scenario = make_scenario(config.scenario, config.seed);
  return make_slot_problem(config, scenario, 0, mode, 6.0, lambda);
}

void BM_ConicRandomSdp(benchmark::State& state) {
  Rng rng = make_stream(1, "bench-sdp");
  SdpDims dims;
  dims.psd_sizes = {static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
  dims.nonneg = 4;
  dims.rows = 10;
  const KnownSdp known = random_sdp_with_known_optimum(dims, rng);
  for (auto _ : state) benchmark::DoNotOptimize(solve(known.problem));
}
BENCHMARK(BM_ConicRandomSdp)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

// One linearized SDP of the default slot with the initial tangents.
void BM_LinearizedSdp(benchmark::State& state) {
  const LiftedScenario s = default_slot(CacheMode::coded, 0.6).lift();
  const CutPool pool = initial_cut_pool(s, RelaxationSettings{}.initial_tangents);
  for (auto _ : state) benchmark::DoNotOptimize(solve_linearized(s, pool));
}
BENCHMARK(BM_LinearizedSdp)->Unit(benchmark::kMillisecond);

void BM_OuterApproximation(benchmark::State& state) {
  const LiftedScenario s = default_slot(CacheMode::coded, 0.6).lift();
  for (auto _ : state) benchmark::DoNotOptimize(mm_optimize(s));
}
BENCHMARK(BM_OuterApproximation)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_GaussianRandomization(benchmark::State& state) {
  const SlotProblem p = default_slot(CacheMode::coded, 0.6);
  const RelaxedSolution r = mm_optimize(p.lift());
  RoundingSettings settings;
  settings.trials = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Rng rng = make_stream(1, "bench-rounding");
    benchmark::DoNotOptimize(gaussian_randomize(r.W, p, settings, rng));
  }
}
BENCHMARK(BM_GaussianRandomization)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
