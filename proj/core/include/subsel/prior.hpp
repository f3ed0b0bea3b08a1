#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "subsel/features.hpp"
#include "subsel/nn.hpp"
#include "subsel/rng.hpp"
#include "subsel/trainer.hpp"
#include "subsel/vocab.hpp"

namespace subsel {

// Binary per-review tags: 1 marks reviews in the posterior's mode subset.
struct TaggedProduct {
    std::string product_id;
    std::vector<int> tags;
};

std::vector<TaggedProduct> distill_tags(const FeedForwardScorer& posterior,
                                        const std::vector<FeatureMatrix>& features, int k);

void save_tags(const std::vector<TaggedProduct>& tags, const std::filesystem::path& path);
std::vector<TaggedProduct> load_tags(const std::filesystem::path& path);

struct PriorArch {
    int embed_dim = 32;
    int head_hidden = 100;
    double dropout = 0.10;
};

// Summary-blind review scorer: salience-weighted token embedding average,
// contextualized across the product's reviews by self-attention, then a
// feed-forward head producing one relevance logit per review.
class PriorModel {
public:
    PriorModel(Vocabulary vocab, PriorArch arch, Rng& init_rng);

    const Vocabulary& vocab() const { return vocab_; }
    const PriorArch& arch() const { return arch_; }
    const ParamLayout& layout() const { return layout_; }
    Vec& params() { return params_; }
    const Vec& params() const { return params_; }

    Vec score_reviews(const std::vector<TokenSeq>& reviews) const;

    struct Tape {
        std::vector<EmbeddingBagBlock::Tape> emb;
        AttentionBlock::Tape attn;
        std::vector<MlpBlock::Tape> head;
        std::vector<Vec> reps;
        std::vector<Vec> ctx;
    };
    Vec score_encoded(const std::vector<std::vector<int>>& review_ids, bool train, Rng* rng,
                      Tape* tape) const;
    void backward(const Tape& tape, const Vec& dscores, Vec& grad) const;

    /// Mean per-review binary cross-entropy against 0/1 tags; accumulates the
    /// parameter gradient.
    double bce_loss(const std::vector<std::vector<int>>& review_ids, const std::vector<int>& tags,
                    bool train, Rng* rng, Vec& grad) const;

    std::vector<std::vector<int>> encode(const std::vector<TokenSeq>& reviews) const;

    void save(const std::filesystem::path& path) const;
    static PriorModel load(const std::filesystem::path& path);

private:
    Vocabulary vocab_;
    PriorArch arch_;
    ParamLayout layout_;
    Vec params_;
    EmbeddingBagBlock emb_;
    AttentionBlock attn_;
    MlpBlock head_;
};

struct PriorTrainConfig {
    PriorArch arch;
    int epochs = 5;
    double lr = 1e-5;  // production-scale default; desk-scale runs pass a larger rate
    long warmup_steps = 5000;
    double holdout_fraction = 0.1;
    std::uint64_t seed = 1;
};

/// Trains on distilled tags; keeps the epoch with the best held-out tag F1.
PriorModel train_prior(const std::vector<ProductRecord>& corpus,
                       const std::vector<TaggedProduct>& tags, const PriorTrainConfig& cfg);

/// K highest-scoring review indices, ties to the lower index.
std::vector<int> select_topk(const PriorModel& prior, const std::vector<TokenSeq>& reviews,
                             int k);
std::vector<int> select_topk(std::span<const double> scores, int k);

/// Mean F1 between top-K predictions and tags over products (K = tag count).
double tag_f1(const PriorModel& prior, const std::vector<ProductRecord>& corpus,
              const std::vector<TaggedProduct>& tags);

}  // namespace subsel
