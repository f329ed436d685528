#include <benchmark/benchmark.h>

#include "ricefield/rice.hpp"

static void BM_ReinforcedPoissonRejection(benchmark::State& state) {
    ricefield::Rng rng(1);
    const ricefield::ReinforcedPoisson d{static_cast<double>(state.range(0))};
    for (auto _ : state) benchmark::DoNotOptimize(ricefield::sample_reinforced_poisson(d, rng));
}
BENCHMARK(BM_ReinforcedPoissonRejection)->Arg(1)->Arg(10)->Arg(100)->Arg(1000);

static void BM_ReinforcedPoissonInversion(benchmark::State& state) {
    ricefield::Rng rng(1);
    const ricefield::ReinforcedPoisson d{static_cast<double>(state.range(0))};
    for (auto _ : state)
        benchmark::DoNotOptimize(ricefield::sample_reinforced_poisson_inversion(d, rng));
}
BENCHMARK(BM_ReinforcedPoissonInversion)->Arg(1)->Arg(10)->Arg(100);

static void BM_SampleAugmented(benchmark::State& state) {
    ricefield::Rng rng(1);
    const ricefield::RiceParams p{200.0, 2500.0};
    for (auto _ : state) benchmark::DoNotOptimize(ricefield::sample_augmented(p, rng));
}
BENCHMARK(BM_SampleAugmented);
