#include <benchmark/benchmark.h>

#include "subsel/rng.hpp"
#include "subsel/subset.hpp"

namespace {

std::vector<double> bench_logits(int n) {
    subsel::Rng rng(7);
    std::vector<double> l(n);
    for (double& v : l) v = rng.uniform() * 4.0 - 2.0;
    return l;
}

void bm_step_distribution(benchmark::State& state) {
    const auto logits = bench_logits(static_cast<int>(state.range(0)));
    const std::vector<int> blocked{0, 3};
    for (auto _ : state) benchmark::DoNotOptimize(subsel::step_distribution(logits, blocked));
}
BENCHMARK(bm_step_distribution)->Arg(20)->Arg(100);

void bm_sample_subset(benchmark::State& state) {
    const auto logits = bench_logits(static_cast<int>(state.range(0)));
    subsel::Rng rng(11);
    const int k = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(subsel::sample_subset(logits, k, rng));
}
BENCHMARK(bm_sample_subset)->Args({20, 5})->Args({100, 10});

void bm_log_prob(benchmark::State& state) {
    const auto logits = bench_logits(100);
    subsel::Rng rng(13);
    const auto trace = subsel::sample_subset(logits, 10, rng);
    for (auto _ : state) benchmark::DoNotOptimize(subsel::log_prob(logits, trace.indices));
}
BENCHMARK(bm_log_prob);

void bm_enumerate(benchmark::State& state) {
    const auto logits = bench_logits(6);
    for (auto _ : state) benchmark::DoNotOptimize(subsel::enumerate_subset_probs(logits, 3));
}
BENCHMARK(bm_enumerate);

}  // namespace
