#include <benchmark/benchmark.h>

#include "ricefield/glm.hpp"

namespace {

struct Fixture {
    Eigen::MatrixXd z;
    ricefield::AugmentedCounts counts;
    Eigen::VectorXd start;

    explicit Fixture(int m, int p) : z(m, p), counts(m), start(Eigen::VectorXd::Zero(p)) {
        ricefield::Rng rng(7);
        for (int i = 0; i < m; ++i) {
            z(i, 0) = 1.0;
            for (int j = 1; j < p; ++j) z(i, j) = 0.3 * rng.normal();
            counts(i) = static_cast<double>(rng.poisson(20.0));
        }
        start(0) = 1.0;
    }
};

} // namespace

static void BM_FisherScoring(benchmark::State& state) {
    const Fixture f(96, static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(ricefield::fisher_scoring(f.start, f.counts, 1.0, f.z));
}
BENCHMARK(BM_FisherScoring)->Arg(7)->Arg(16);

static void BM_FisherInformation(benchmark::State& state) {
    const Fixture f(96, static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(ricefield::fisher_information(f.start, 1.0, f.z));
}
BENCHMARK(BM_FisherInformation)->Arg(7)->Arg(16);
