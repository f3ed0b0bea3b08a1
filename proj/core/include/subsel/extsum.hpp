#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "subsel/corpus.hpp"
#include "subsel/nn.hpp"
#include "subsel/rng.hpp"
#include "subsel/vocab.hpp"

namespace subsel {

// One review sentence with its source location; [begin, end) are character
// offsets into the review text, so splitting is reversible.
struct SentenceRef {
    int review_index = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;
    TokenSeq tokens;
};

std::vector<SentenceRef> split_sentences(const std::string& text, int review_index = 0);

// All review sentences of a product, optionally capped (training uses 550).
struct SentencePool {
    std::vector<SentenceRef> sentences;
};
SentencePool build_pool(const ProductRecord& rec, std::size_t cap = 0);

inline constexpr std::size_t kTrainingSentenceCap = 550;

enum class SentenceClass : int { none = 0, verdict = 1, pro = 2, con = 3 };

struct SectionBudgets {
    int verdict = 0;
    int pros = 0;
    int cons = 0;
};
inline constexpr SectionBudgets kOracleBudgets{4, 8, 4};
inline constexpr SectionBudgets kExtractBudgets{3, 7, 4};

/// Greedy labels against the gold summary: per section, repeatedly add the
/// sentence with the largest ROUGE-1 + ROUGE-2 recall gain for that section,
/// stopping at the budget or when no sentence improves the score. A sentence
/// is labeled at most once.
std::vector<SentenceClass> oracle_labels(const ProductRecord& rec, const SentencePool& pool,
                                         SectionBudgets budgets = kOracleBudgets);

struct ExtractedSummary {
    std::vector<SentenceRef> verdict;
    std::vector<SentenceRef> pros;
    std::vector<SentenceRef> cons;
    bool short_pool = false;  // pool was smaller than the combined budget

    GoldSummary to_summary() const;
};

// 4-way sentence classifier sharing the prior's encoder shape.
struct ExtsumArch {
    int embed_dim = 32;
    int head_hidden = 100;
    double dropout = 0.10;
};

class ExtsumModel {
public:
    ExtsumModel(Vocabulary vocab, ExtsumArch arch, Rng& init_rng);

    const Vocabulary& vocab() const { return vocab_; }
    const ParamLayout& layout() const { return layout_; }
    Vec& params() { return params_; }
    const Vec& params() const { return params_; }

    // row-major n x 4 class logits for the pool's sentences
    std::vector<Vec> sentence_logits(const SentencePool& pool) const;

    struct Tape {
        std::vector<EmbeddingBagBlock::Tape> emb;
        AttentionBlock::Tape attn;
        std::vector<MlpBlock::Tape> head;
    };
    std::vector<Vec> logits_encoded(const std::vector<std::vector<int>>& sentence_ids, bool train,
                                    Rng* rng, Tape* tape) const;
    void backward(const Tape& tape, const std::vector<Vec>& dlogits, Vec& grad) const;

    /// Mean cross-entropy with the three positive classes weighted by
    /// `positive_weight`; accumulates the parameter gradient.
    double weighted_ce_loss(const std::vector<std::vector<int>>& sentence_ids,
                            const std::vector<SentenceClass>& labels, double positive_weight,
                            bool train, Rng* rng, Vec& grad) const;

    std::vector<std::vector<int>> encode(const SentencePool& pool) const;

    void save(const std::filesystem::path& path) const;
    static ExtsumModel load(const std::filesystem::path& path);

private:
    Vocabulary vocab_;
    ExtsumArch arch_;
    ParamLayout layout_;
    Vec params_;
    EmbeddingBagBlock emb_;
    AttentionBlock attn_;
    MlpBlock head_;
};

struct ExtsumTrainConfig {
    ExtsumArch arch;
    int epochs = 5;          // production-scale defaults; desk-scale runs override
    double lr = 1e-5;
    long warmup_steps = 5000;
    double positive_weight = 50.0;
    std::size_t sentence_cap = kTrainingSentenceCap;
    double holdout_fraction = 0.0;
    std::uint64_t seed = 1;
};

ExtsumModel train_extsum(const std::vector<ProductRecord>& corpus,
                         const std::vector<std::vector<SentenceClass>>& labels,
                         const ExtsumTrainConfig& cfg);

/// Sequential per-section extraction: top-budget sentences by class
/// probability, previously chosen sentences excluded from later sections.
ExtractedSummary extract_summary(const ExtsumModel& model, const ProductRecord& rec,
                                 SectionBudgets budgets = kExtractBudgets);

/// Uniform sentence sample without replacement, partitioned into
/// verdict/pros/cons budgets in draw order.
ExtractedSummary random_baseline(const ProductRecord& rec, Rng& rng,
                                 SectionBudgets budgets = kExtractBudgets);

// Label-file round trip (product id + per-sentence class codes).
void save_labels(const std::vector<std::string>& ids,
                 const std::vector<std::vector<SentenceClass>>& labels,
                 const std::filesystem::path& path);
std::pair<std::vector<std::string>, std::vector<std::vector<SentenceClass>>> load_labels(
    const std::filesystem::path& path);

}  // namespace subsel
