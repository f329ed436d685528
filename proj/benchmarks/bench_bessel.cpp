#include <benchmark/benchmark.h>

#include "ricefield/bessel.hpp"

static void BM_LogBesselI0Small(benchmark::State& state) {
    double z = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ricefield::log_bessel_i0(z));
        z = z < 19.0 ? z + 0.37 : 0.1;
    }
}
BENCHMARK(BM_LogBesselI0Small);

static void BM_LogBesselI0Large(benchmark::State& state) {
    double z = 25.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ricefield::log_bessel_i0(z));
        z = z < 1e6 ? z * 1.7 : 25.0;
    }
}
BENCHMARK(BM_LogBesselI0Large);
