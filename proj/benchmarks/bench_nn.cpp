#include <benchmark/benchmark.h>

#include "subsel/nn.hpp"
#include "subsel/rng.hpp"

namespace {

void bm_scorer_forward(benchmark::State& state) {
    subsel::Rng rng(3);
    subsel::FeedForwardScorer scorer({}, rng);  // 23 -> 250 -> 250 -> 1
    subsel::Vec x(23);
    for (double& v : x) v = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(scorer.forward(x));
}
BENCHMARK(bm_scorer_forward);

void bm_scorer_backward(benchmark::State& state) {
    subsel::Rng rng(4);
    subsel::FeedForwardScorer scorer({}, rng);
    subsel::Vec x(23);
    for (double& v : x) v = rng.uniform();
    subsel::Vec grad(scorer.layout().total());
    for (auto _ : state) {
        subsel::FeedForwardScorer::Tape tape;
        benchmark::DoNotOptimize(scorer.forward(x, false, nullptr, tape));
        scorer.backward(tape, 1.0, grad);
        benchmark::DoNotOptimize(grad.data());
    }
}
BENCHMARK(bm_scorer_backward);

void bm_attention(benchmark::State& state) {
    subsel::ParamLayout layout;
    const auto block = subsel::AttentionBlock::add_to(layout, "attn", 32);
    subsel::Vec params(layout.total());
    subsel::Rng rng(5);
    block.init(params, rng);
    std::vector<subsel::Vec> items(static_cast<std::size_t>(state.range(0)), subsel::Vec(32));
    for (auto& item : items)
        for (double& v : item) v = rng.uniform();
    std::vector<subsel::Vec> out;
    for (auto _ : state) {
        block.forward(params, items, nullptr, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(bm_attention)->Arg(20)->Arg(100);

void bm_adam_step(benchmark::State& state) {
    const std::size_t n = 69501;
    subsel::Vec params(n, 0.1), grads(n, 0.01);
    subsel::AdamState opt(n, {});
    for (auto _ : state) {
        opt.step(params, grads);
        benchmark::DoNotOptimize(params.data());
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_adam_step);

}  // namespace
