#include <benchmark/benchmark.h>

#include "ricefield/chain.hpp"
#include "ricefield/data_io.hpp"

namespace {

ricefield::Dataset bench_dataset() {
    auto spec = ricefield::standard_crossing_phantom(false);
    return ricefield::simulate_phantom(spec, ricefield::standard_scheme({500.0, 1500.0, 3500.0}),
                                       42);
}

} // namespace

static void BM_ChainCycleTensor2(benchmark::State& state) {
    const ricefield::Dataset data = bench_dataset();
    ricefield::ChainConfig cfg;
    cfg.model = ricefield::ModelSpec::tensor2();
    cfg.cycles = 1;
    cfg.burnin = 0;
    cfg.block_radius = 2;
    cfg.workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(ricefield::run_chain(data, cfg));
}
BENCHMARK(BM_ChainCycleTensor2)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_BlockPartition(benchmark::State& state) {
    const ricefield::Dataset data = bench_dataset();
    const ricefield::VoxelGraph graph = data.graph();
    std::uint64_t cycle = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            ricefield::partition_blocks(graph, static_cast<int>(state.range(0)), cycle++));
}
BENCHMARK(BM_BlockPartition)->Arg(2)->Arg(7);

BENCHMARK_MAIN();
