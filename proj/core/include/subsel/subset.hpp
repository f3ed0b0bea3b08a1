#pragma once

#include <map>
#include <span>
#include <vector>

#include "subsel/rng.hpp"

namespace subsel {

// Ordered K-subset of review indices with per-step log probabilities under
// the sequential blocked-softmax distribution.
struct SelectionTrace {
    std::vector<int> indices;
    std::vector<double> step_logps;
    double total_logp = 0.0;
};

/// Softmax over logits with blocked entries assigned probability exactly 0
/// (their logit is treated as -inf). Throws if every index is blocked.
std::vector<double> step_distribution(std::span<const double> logits,
                                      std::span<const int> blocked);

/// K sequential draws; each step blocks all earlier picks.
SelectionTrace sample_subset(std::span<const double> logits, int k, Rng& rng);

/// Log probability of an ordered index tuple; throws on duplicates.
double log_prob(std::span<const double> logits, std::span<const int> indices);

/// Greedy argmax selection with blocking; ties break to the lower index.
/// For shared per-step logits this is the exact distribution mode.
std::vector<int> mode_subset(std::span<const double> logits, int k);

enum class KldEstimator { exact, monte_carlo };

/// KL(q || uniform-without-replacement) over ordered K-tuples. The exact
/// estimator enumerates and is limited to N <= 8; the Monte Carlo estimator
/// is unbiased, averaging log q - log p over `samples` traces drawn from q.
double kld_to_uniform(std::span<const double> logits, int k, KldEstimator estimator,
                      Rng* rng = nullptr, int samples = 128);

/// Log probability of an ordered K-tuple under the uniform
/// without-replacement prior: step k has probability 1/(N-k+1).
double uniform_log_prob(int n, int k);

/// Exhaustive map from every ordered K-tuple to its probability.
/// Test oracle; refuses instances with more than 10^5 tuples.
std::map<std::vector<int>, double> enumerate_subset_probs(std::span<const double> logits, int k);

}  // namespace subsel
