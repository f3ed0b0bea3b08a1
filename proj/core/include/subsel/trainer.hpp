#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subsel/corpus.hpp"
#include "subsel/features.hpp"
#include "subsel/metrics.hpp"
#include "subsel/nn.hpp"
#include "subsel/reward.hpp"
#include "subsel/rng.hpp"
#include "subsel/subset.hpp"

namespace subsel {

enum class SelectorKind { posterior, random_subsets, r1_topk };

SelectorKind selector_from_string(const std::string& name);
std::string selector_to_string(SelectorKind kind);

struct TrainConfig {
    int k = 10;
    int n_max = 100;
    int posterior_samples = 3;  // traces per step for the expectation estimate
    int baseline_samples = 3;   // random subsets per step for the baseline
    double kld_scale = 0.0;     // off by default
    double lr_posterior = 1e-3;
    double lr_reward = 1e-2;
    long warmup_steps = 5000;
    int epochs = 5;
    double holdout_fraction = 0.1;
    std::uint64_t seed = 1;
    int scorer_hidden = 250;
    double scorer_dropout = 0.0;
    bool scorer_norm_after_first = false;  // move layer norm between the hidden layers
    int kld_exact_max_n = 8;  // exact KLD logging below this N, MC estimate above

    void validate() const;
};

struct StepReport {
    int epoch = 0;
    std::string product_id;
    double mean_reward = 0.0;
    double baseline = 0.0;
    double posterior_grad_norm = 0.0;
    double reward_grad = 0.0;
    double kld = 0.0;  // populated when kld_scale > 0
    // sampled traces, serialized into the audit log as index lists with
    // their log probabilities
    std::vector<std::vector<int>> trace_indices;
    std::vector<double> trace_logps;
};

struct TrainResult {
    FeedForwardScorer posterior;
    UnigramMixtureReward reward;
    std::vector<StepReport> log;
    std::vector<double> holdout_reward;  // one entry per epoch
    int best_epoch = 0;                  // 1-based; 0 when there is no holdout
};

/// Reward of one selected subset: log-likelihood of the product's full
/// summary (verdict + pros + cons) given the selected reviews.
double subset_reward(const RewardModel& reward, const ProductRecord& product,
                     std::span<const int> indices);

TokenSeq summary_tokens(const ProductRecord& product);

/// Uniform K-subset without replacement, in draw order.
std::vector<int> random_subset(int n, int k, Rng& rng);

/// Mean reward over `samples` uniform random K-subsets.
double baseline_reward(const ProductRecord& product, const RewardModel& reward, int k,
                       int samples, Rng& rng);

// The score-function estimate at the logits level, independent of the
// network producing them: dlogits is the averaged
// (reward - baseline - kld_scale * (log q - log p)) * d(log q)/d(logits).
struct ReinforceOutcome {
    Vec dlogits;
    std::vector<SelectionTrace> traces;
    std::vector<double> rewards;
    double mean_reward = 0.0;
    double baseline = 0.0;
    double kld = 0.0;
};

ReinforceOutcome reinforce_dlogits(std::span<const double> logits, const ProductRecord& product,
                                   const RewardModel& reward, const TrainConfig& cfg, Rng& rng);

/// Posterior parameter gradient (ascent direction) for one product.
struct ReinforceGrad {
    Vec grad;
    ReinforceOutcome outcome;
};
ReinforceGrad reinforce_grad(const FeedForwardScorer& scorer, const FeatureMatrix& features,
                             const ProductRecord& product, const RewardModel& reward,
                             const TrainConfig& cfg, Rng& rng);

Vec posterior_logits(const FeedForwardScorer& scorer, const FeatureMatrix& features);

/// Deterministic top-K by the ROUGE-1 recall of each review against the
/// summary sections (the sum of the two recall feature columns).
std::vector<int> r1_topk_indices(const FeatureMatrix& features, int k);

/// Alternating updates: the reward parameters ascend their analytic gradient
/// averaged over the sampled traces, then the posterior ascends the
/// score-function gradient. Deterministic given cfg.seed.
TrainResult train(const std::vector<ProductRecord>& corpus, const AspectLexicon& lex,
                  const TrainConfig& cfg, SelectorKind selector = SelectorKind::posterior);

}  // namespace subsel
