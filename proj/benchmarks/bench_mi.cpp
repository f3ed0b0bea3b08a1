#include <benchmark/benchmark.h>

#include "subsel/analysis.hpp"
#include "subsel/rng.hpp"

namespace {

void bm_mi_estimate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    subsel::Rng rng(9);
    std::vector<double> x(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = static_cast<int>(rng.below(2));
        x[i] = y[i] * 0.5 + rng.normal();
    }
    for (auto _ : state) benchmark::DoNotOptimize(subsel::mi_discrete_continuous(x, y));
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_mi_estimate)->Arg(1000)->Arg(5000)->Arg(20000);

}  // namespace

BENCHMARK_MAIN();
