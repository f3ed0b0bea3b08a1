#include <benchmark/benchmark.h>

#include "subsel/metrics.hpp"
#include "subsel/rng.hpp"
#include "subsel/text.hpp"

namespace {

std::string sample_text(std::size_t words, std::uint64_t seed) {
    subsel::Rng rng(seed);
    const char* vocab[] = {"the", "zoom", "battery", "life", "is", "great", "screen",
                           "but", "grip", "feels", "cheap", "overall", "solid", "pick"};
    std::string text;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) text.push_back(' ');
        text += vocab[rng.below(14)];
        if (rng.below(12) == 0) text.push_back('.');
    }
    return text;
}

void bm_tokenize(benchmark::State& state) {
    const std::string text = sample_text(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(subsel::tokenize(text));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_tokenize)->Arg(32)->Arg(128)->Arg(1024);

void bm_rouge_n(benchmark::State& state) {
    const auto hyp = subsel::tokenize(sample_text(static_cast<std::size_t>(state.range(0)), 2));
    const auto ref = subsel::tokenize(sample_text(static_cast<std::size_t>(state.range(0)), 3));
    for (auto _ : state) benchmark::DoNotOptimize(subsel::rouge_n(hyp, ref, 2));
}
BENCHMARK(bm_rouge_n)->Arg(30)->Arg(120)->Arg(500);

void bm_rouge_l(benchmark::State& state) {
    const auto hyp = subsel::tokenize(sample_text(static_cast<std::size_t>(state.range(0)), 4));
    const auto ref = subsel::tokenize(sample_text(static_cast<std::size_t>(state.range(0)), 5));
    for (auto _ : state) benchmark::DoNotOptimize(subsel::rouge_l(hyp, ref));
}
BENCHMARK(bm_rouge_l)->Arg(30)->Arg(120);

void bm_aspect_tag(benchmark::State& state) {
    const auto lex = subsel::AspectLexicon::from_phrases(
        {"battery life", "zoom", "screen", "grip", "build quality"});
    const auto seq = subsel::tokenize(sample_text(static_cast<std::size_t>(state.range(0)), 6));
    for (auto _ : state) benchmark::DoNotOptimize(lex.tag(seq));
}
BENCHMARK(bm_aspect_tag)->Arg(120);

}  // namespace
