#include "subsel/subset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace subsel {
namespace {

void check_k(std::size_t n, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("subset size k must satisfy 1 <= k <= n");
}

// Softmax over unblocked entries into `probs`; blocked entries get exact 0.
void step_distribution_into(std::span<const double> logits, const std::vector<char>& blocked_mask,
                            std::vector<double>& probs) {
    const std::size_t n = logits.size();
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (!blocked_mask[i]) max_logit = std::max(max_logit, logits[i]);
    if (max_logit == -std::numeric_limits<double>::infinity())
        throw std::invalid_argument("step_distribution: all indices blocked");
    probs.assign(n, 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (blocked_mask[i]) continue;
        probs[i] = std::exp(logits[i] - max_logit);
        z += probs[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!blocked_mask[i]) probs[i] /= z;
}

}  // namespace

std::vector<double> step_distribution(std::span<const double> logits,
                                      std::span<const int> blocked) {
    std::vector<char> mask(logits.size(), 0);
    for (int b : blocked) {
        if (b < 0 || static_cast<std::size_t>(b) >= logits.size())
            throw std::out_of_range("step_distribution: blocked index out of range");
        mask[b] = 1;
    }
    std::vector<double> probs;
    step_distribution_into(logits, mask, probs);
    return probs;
}

SelectionTrace sample_subset(std::span<const double> logits, int k, Rng& rng) {
    check_k(logits.size(), k);
    const std::size_t n = logits.size();
    SelectionTrace trace;
    trace.indices.reserve(k);
    trace.step_logps.reserve(k);
    std::vector<char> mask(n, 0);
    std::vector<double> probs;
    for (int step = 0; step < k; ++step) {
        step_distribution_into(logits, mask, probs);
        const double u = rng.uniform();
        double cum = 0.0;
        int pick = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask[i]) continue;
            cum += probs[i];
            pick = static_cast<int>(i);  // last unblocked wins if rounding leaves cum < u
            if (u < cum) break;
        }
        mask[pick] = 1;
        trace.indices.push_back(pick);
        trace.step_logps.push_back(std::log(probs[pick]));
        trace.total_logp += trace.step_logps.back();
    }
    return trace;
}

double log_prob(std::span<const double> logits, std::span<const int> indices) {
    std::vector<char> mask(logits.size(), 0);
    std::vector<double> probs;
    double total = 0.0;
    for (int idx : indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= logits.size())
            throw std::out_of_range("log_prob: index out of range");
        if (mask[idx]) throw std::invalid_argument("log_prob: duplicate index");
        step_distribution_into(logits, mask, probs);
        total += std::log(probs[idx]);
        mask[idx] = 1;
    }
    return total;
}

std::vector<int> mode_subset(std::span<const double> logits, int k) {
    check_k(logits.size(), k);
    std::vector<char> mask(logits.size(), 0);
    std::vector<int> picks;
    picks.reserve(k);
    for (int step = 0; step < k; ++step) {
        int best = -1;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            if (mask[i]) continue;
            if (best < 0 || logits[i] > logits[best]) best = static_cast<int>(i);
        }
        mask[best] = 1;
        picks.push_back(best);
    }
    return picks;
}

double uniform_log_prob(int n, int k) {
    double lp = 0.0;
    for (int step = 0; step < k; ++step) lp -= std::log(static_cast<double>(n - step));
    return lp;
}

double kld_to_uniform(std::span<const double> logits, int k, KldEstimator estimator, Rng* rng,
                      int samples) {
    check_k(logits.size(), k);
    const int n = static_cast<int>(logits.size());
    if (estimator == KldEstimator::exact) {
        if (n > 8)
            throw std::invalid_argument("kld_to_uniform: exact estimator limited to N <= 8");
        double kld = 0.0;
        const double prior_lp = uniform_log_prob(n, k);
        for (const auto& [tuple, prob] : enumerate_subset_probs(logits, k)) {
            if (prob <= 0.0) continue;
            kld += prob * (std::log(prob) - prior_lp);
        }
        return kld;
    }
    if (rng == nullptr)
        throw std::invalid_argument("kld_to_uniform: Monte Carlo estimator needs an rng");
    if (samples < 1) throw std::invalid_argument("kld_to_uniform: samples must be >= 1");
    const double prior_lp = uniform_log_prob(n, k);
    double acc = 0.0;
    for (int s = 0; s < samples; ++s)
        acc += sample_subset(logits, k, *rng).total_logp - prior_lp;
    return acc / samples;
}

std::map<std::vector<int>, double> enumerate_subset_probs(std::span<const double> logits, int k) {
    check_k(logits.size(), k);
    const std::size_t n = logits.size();
    double tuples = 1.0;
    for (int step = 0; step < k; ++step) tuples *= static_cast<double>(n - step);
    if (tuples > 1e5)
        throw std::invalid_argument("enumerate_subset_probs: instance too large");

    std::map<std::vector<int>, double> out;
    std::vector<char> mask(n, 0);
    std::vector<int> prefix;
    std::vector<double> probs;
    auto dfs = [&](auto&& self, double prob) -> void {
        if (static_cast<int>(prefix.size()) == k) {
            out.emplace(prefix, prob);
            return;
        }
        step_distribution_into(logits, mask, probs);
        std::vector<double> step = probs;  // keep a copy; recursion reuses the buffer
        for (std::size_t i = 0; i < n; ++i) {
            if (mask[i]) continue;
            mask[i] = 1;
            prefix.push_back(static_cast<int>(i));
            self(self, prob * step[i]);
            prefix.pop_back();
            mask[i] = 0;
        }
    };
    dfs(dfs, 1.0);
    return out;
}

}  // namespace subsel
