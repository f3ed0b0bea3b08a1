#include "subsel/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace subsel {

SelectorKind selector_from_string(const std::string& name) {
    if (name == "posterior") return SelectorKind::posterior;
    if (name == "random") return SelectorKind::random_subsets;
    if (name == "r1-topk") return SelectorKind::r1_topk;
    throw std::invalid_argument("unknown selector: " + name);
}

std::string selector_to_string(SelectorKind kind) {
    switch (kind) {
        case SelectorKind::posterior: return "posterior";
        case SelectorKind::random_subsets: return "random";
        case SelectorKind::r1_topk: return "r1-topk";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (k < 1 || n_max < 1 || k > n_max)
        throw std::invalid_argument("TrainConfig: need 1 <= k <= n_max");
    if (posterior_samples < 1 || baseline_samples < 1)
        throw std::invalid_argument("TrainConfig: sample counts must be >= 1");
    if (kld_scale < 0.0) throw std::invalid_argument("TrainConfig: kld_scale must be >= 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (holdout_fraction < 0.0 || holdout_fraction >= 1.0)
        throw std::invalid_argument("TrainConfig: holdout_fraction must be in [0, 1)");
}

TokenSeq summary_tokens(const ProductRecord& product) {
    TokenSeq s = product.summary.verdict_tokens;
    for (const auto& b : product.summary.pros_tokens) s.insert(s.end(), b.begin(), b.end());
    for (const auto& b : product.summary.cons_tokens) s.insert(s.end(), b.begin(), b.end());
    return s;
}

double subset_reward(const RewardModel& reward, const ProductRecord& product,
                     std::span<const int> indices) {
    std::vector<TokenSeq> selected;
    selected.reserve(indices.size());
    for (int i : indices) selected.push_back(product.reviews.at(i).tokens);
    return reward.log_likelihood(summary_tokens(product), selected);
}

std::vector<int> random_subset(int n, int k, Rng& rng) {
    if (k < 0 || k > n) throw std::invalid_argument("random_subset: need 0 <= k <= n");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

double baseline_reward(const ProductRecord& product, const RewardModel& reward, int k,
                       int samples, Rng& rng) {
    const int n = static_cast<int>(product.reviews.size());
    if (k > n) throw std::invalid_argument("baseline_reward: k exceeds review count");
    double acc = 0.0;
    for (int s = 0; s < samples; ++s)
        acc += subset_reward(reward, product, random_subset(n, k, rng));
    return acc / samples;
}

ReinforceOutcome reinforce_dlogits(std::span<const double> logits, const ProductRecord& product,
                                   const RewardModel& reward, const TrainConfig& cfg, Rng& rng) {
    const int n = static_cast<int>(logits.size());
    if (cfg.k > n) throw std::invalid_argument("reinforce: k exceeds review count");
    Rng trace_rng = rng.split(0);
    Rng base_rng = rng.split(1);

    ReinforceOutcome out;
    out.dlogits.assign(n, 0.0);
    out.baseline = baseline_reward(product, reward, cfg.k, cfg.baseline_samples, base_rng);

    const double prior_lp = uniform_log_prob(n, cfg.k);
    const int s_count = cfg.posterior_samples;
    std::vector<double> kld_terms;
    for (int s = 0; s < s_count; ++s) {
        SelectionTrace trace = sample_subset(logits, cfg.k, trace_rng);
        const double r = subset_reward(reward, product, trace.indices);
        out.mean_reward += r / s_count;
        double weight = r - out.baseline;
        if (cfg.kld_scale > 0.0) {
            kld_terms.push_back(trace.total_logp - prior_lp);
            weight -= cfg.kld_scale * kld_terms.back();
        }
        // d(log q)/d(logit_j) summed over steps: indicator minus the step
        // distribution, restricted to the unblocked entries
        std::vector<int> blocked;
        for (int step = 0; step < cfg.k; ++step) {
            const auto p = step_distribution(logits, blocked);
            const double scale = weight / s_count;
            for (int j = 0; j < n; ++j) out.dlogits[j] -= scale * p[j];
            out.dlogits[trace.indices[step]] += scale;
            blocked.push_back(trace.indices[step]);
        }
        out.rewards.push_back(r);
        out.traces.push_back(std::move(trace));
    }
    if (cfg.kld_scale > 0.0) {
        if (n <= cfg.kld_exact_max_n) {
            out.kld = kld_to_uniform(logits, cfg.k, KldEstimator::exact);
        } else {
            out.kld = std::accumulate(kld_terms.begin(), kld_terms.end(), 0.0) / kld_terms.size();
        }
    }
    return out;
}

Vec posterior_logits(const FeedForwardScorer& scorer, const FeatureMatrix& features) {
    Vec logits(features.rows.size());
    for (std::size_t i = 0; i < features.rows.size(); ++i)
        logits[i] = scorer.forward(features.rows[i]);
    return logits;
}

ReinforceGrad reinforce_grad(const FeedForwardScorer& scorer, const FeatureMatrix& features,
                             const ProductRecord& product, const RewardModel& reward,
                             const TrainConfig& cfg, Rng& rng) {
    const std::size_t n = features.rows.size();
    if (n != product.reviews.size())
        throw std::invalid_argument("reinforce_grad: features misaligned with reviews");
    std::vector<FeedForwardScorer::Tape> tapes(n);
    Vec logits(n);
    Rng drop_rng = rng.split(2);
    for (std::size_t i = 0; i < n; ++i)
        logits[i] = scorer.forward(features.rows[i], /*train=*/true, &drop_rng, tapes[i]);

    ReinforceGrad rg;
    rg.outcome = reinforce_dlogits(logits, product, reward, cfg, rng);
    rg.grad.assign(scorer.layout().total(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (rg.outcome.dlogits[i] != 0.0) scorer.backward(tapes[i], rg.outcome.dlogits[i], rg.grad);
    return rg;
}

std::vector<int> r1_topk_indices(const FeatureMatrix& features, int k) {
    // columns 1 and 3 are the ROUGE-1 recalls against pros-and-cons and verdict
    Vec scores(features.rows.size());
    for (std::size_t i = 0; i < features.rows.size(); ++i)
        scores[i] = features.rows[i][1] + features.rows[i][3];
    return mode_subset(scores, k);
}

namespace {

double l2_norm(const Vec& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

std::vector<int> selector_eval_subset(SelectorKind selector, const FeedForwardScorer& scorer,
                                      const FeatureMatrix& features, int k, Rng& rng) {
    switch (selector) {
        case SelectorKind::posterior:
            return mode_subset(posterior_logits(scorer, features), k);
        case SelectorKind::random_subsets:
            return random_subset(static_cast<int>(features.rows.size()), k, rng);
        case SelectorKind::r1_topk:
            return r1_topk_indices(features, k);
    }
    throw std::logic_error("unreachable");
}

}  // namespace

TrainResult train(const std::vector<ProductRecord>& corpus, const AspectLexicon& lex,
                  const TrainConfig& cfg, SelectorKind selector) {
    cfg.validate();
    if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
    std::vector<ProductRecord> capped;
    const std::vector<ProductRecord>* records = &corpus;
    for (const auto& rec : corpus) {
        if (static_cast<int>(rec.reviews.size()) < cfg.k)
            throw std::invalid_argument("train: product " + rec.id + " has fewer than k reviews");
        if (static_cast<int>(rec.reviews.size()) > cfg.n_max && capped.empty())
            capped.assign(corpus.begin(), corpus.end());
    }
    if (!capped.empty()) {  // keep the first n_max reviews, as at load time
        for (auto& rec : capped)
            if (static_cast<int>(rec.reviews.size()) > cfg.n_max)
                rec.reviews.resize(static_cast<std::size_t>(cfg.n_max));
        records = &capped;
    }
    const std::vector<ProductRecord>& corpus_capped = *records;

    const std::size_t n_holdout =
        cfg.holdout_fraction > 0.0
            ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                           corpus_capped.size() * cfg.holdout_fraction)))
            : 0;
    if (n_holdout >= corpus_capped.size())
        throw std::invalid_argument("train: holdout leaves no training products");
    const std::size_t n_train = corpus_capped.size() - n_holdout;

    std::vector<ProductRecord> train_set(corpus_capped.begin(), corpus_capped.begin() + n_train);
    std::vector<ProductRecord> holdout_set(corpus_capped.begin() + n_train, corpus_capped.end());

    const auto train_features = featurize_corpus(train_set, lex);
    const auto holdout_features = featurize_corpus(holdout_set, lex);

    Rng root(cfg.seed);
    Rng init_rng = root.split(0xface);
    ScorerConfig scfg;
    scfg.hidden = cfg.scorer_hidden;
    scfg.dropout = cfg.scorer_dropout;
    scfg.norm_after_first = cfg.scorer_norm_after_first;
    TrainResult result{FeedForwardScorer(scfg, init_rng),
                       UnigramMixtureReward::build_from_corpus(train_set), {}, {}, 0};

    AdamState posterior_opt(result.posterior.params().size(),
                            {cfg.lr_posterior, 0.9, 0.999, 1e-8, cfg.warmup_steps});
    AdamState reward_opt(result.reward.theta().size(),
                         {cfg.lr_reward, 0.9, 0.999, 1e-8, cfg.warmup_steps});

    Vec best_posterior = result.posterior.params();
    Vec best_theta = result.reward.theta();
    double best_holdout = -std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng epoch_rng = root.split(static_cast<std::uint64_t>(epoch));
        for (std::size_t pi = 0; pi < train_set.size(); ++pi) {
            Rng step_rng = epoch_rng.split(pi);
            const ProductRecord& product = train_set[pi];
            StepReport rep;
            rep.epoch = epoch;
            rep.product_id = product.id;

            if (selector == SelectorKind::posterior) {
                ReinforceGrad rg =
                    reinforce_grad(result.posterior, train_features[pi], product, result.reward,
                                   cfg, step_rng);
                // summarizer step from the same traces
                Vec theta_grad(result.reward.theta().size(), 0.0);
                for (const auto& trace : rg.outcome.traces) {
                    std::vector<TokenSeq> sel;
                    for (int i : trace.indices) sel.push_back(product.reviews[i].tokens);
                    const Vec g = result.reward.grad_theta(summary_tokens(product), sel);
                    for (std::size_t j = 0; j < g.size(); ++j)
                        theta_grad[j] += g[j] / rg.outcome.traces.size();
                }
                for (double& g : theta_grad) g = -g;  // ascend
                reward_opt.step(result.reward.theta(), theta_grad);

                Vec phi_grad = rg.grad;
                for (double& g : phi_grad) g = -g;  // ascend
                posterior_opt.step(result.posterior.params(), phi_grad);

                rep.mean_reward = rg.outcome.mean_reward;
                rep.baseline = rg.outcome.baseline;
                rep.posterior_grad_norm = l2_norm(rg.grad);
                rep.reward_grad = theta_grad.empty() ? 0.0 : -theta_grad[0];
                rep.kld = rg.outcome.kld;
                for (const auto& trace : rg.outcome.traces) {
                    rep.trace_indices.push_back(trace.indices);
                    rep.trace_logps.push_back(trace.total_logp);
                }
            } else {
                std::vector<int> subset =
                    selector == SelectorKind::random_subsets
                        ? random_subset(static_cast<int>(product.reviews.size()), cfg.k,
                                        step_rng)
                        : r1_topk_indices(train_features[pi], cfg.k);
                std::vector<TokenSeq> sel;
                for (int i : subset) sel.push_back(product.reviews[i].tokens);
                Vec theta_grad = result.reward.grad_theta(summary_tokens(product), sel);
                rep.mean_reward = result.reward.log_likelihood(summary_tokens(product), sel);
                rep.reward_grad = theta_grad[0];
                for (double& g : theta_grad) g = -g;
                reward_opt.step(result.reward.theta(), theta_grad);
            }
            result.log.push_back(std::move(rep));
        }

        if (n_holdout > 0) {
            Rng eval_rng = root.split(0xe0a1u).split(static_cast<std::uint64_t>(epoch));
            double mean = 0.0;
            for (std::size_t pi = 0; pi < holdout_set.size(); ++pi) {
                const auto subset = selector_eval_subset(selector, result.posterior,
                                                         holdout_features[pi], cfg.k, eval_rng);
                mean += subset_reward(result.reward, holdout_set[pi], subset);
            }
            mean /= holdout_set.size();
            result.holdout_reward.push_back(mean);
            if (mean > best_holdout) {
                best_holdout = mean;
                result.best_epoch = epoch;
                best_posterior = result.posterior.params();
                best_theta = result.reward.theta();
            }
        }
    }

    if (n_holdout > 0) {  // keep the best-epoch parameters
        result.posterior.params() = best_posterior;
        result.reward.theta() = best_theta;
    }
    return result;
}

}  // namespace subsel
