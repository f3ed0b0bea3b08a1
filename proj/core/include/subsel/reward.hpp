#pragma once

#include <filesystem>
#include <vector>

#include "subsel/nn.hpp"
#include "subsel/text.hpp"
#include "subsel/vocab.hpp"

namespace subsel {

// Log-likelihood of a summary given a selected review subset, with gradients
// for its own parameters. The trainer treats this as a black box.
class RewardModel {
public:
    virtual ~RewardModel() = default;
    virtual double log_likelihood(const TokenSeq& summary,
                                  const std::vector<TokenSeq>& selected) const = 0;
    virtual Vec grad_theta(const TokenSeq& summary,
                           const std::vector<TokenSeq>& selected) const = 0;
    virtual Vec& theta() = 0;
    virtual const Vec& theta() const = 0;
};

struct UnigramRewardConfig {
    double alpha_bg = 0.1;   // add-alpha smoothing for the background counts
    double alpha_sub = 0.1;  // smoothing for the selected-subset distribution
};

// Mixture of a corpus background unigram model and the selected subset's
// unigram distribution. Its single parameter is the pre-sigmoid mixing
// weight, so the summary likelihood rises when selected reviews cover the
// summary vocabulary; that ordering is what the policy gradient learns from.
class UnigramMixtureReward : public RewardModel {
public:
    static UnigramMixtureReward build(const std::vector<TokenSeq>& docs,
                                      UnigramRewardConfig cfg = {});
    static UnigramMixtureReward build_from_corpus(const std::vector<ProductRecord>& records,
                                                  UnigramRewardConfig cfg = {});

    double log_likelihood(const TokenSeq& summary,
                          const std::vector<TokenSeq>& selected) const override;
    Vec grad_theta(const TokenSeq& summary, const std::vector<TokenSeq>& selected) const override;
    Vec& theta() override { return theta_; }
    const Vec& theta() const override { return theta_; }

    double mixing_weight() const;  // sigmoid of the raw parameter
    double background_prob(const std::string& token) const;
    const Vocabulary& vocab() const { return vocab_; }

    void save(const std::filesystem::path& path) const;
    static UnigramMixtureReward load(const std::filesystem::path& path);

private:
    UnigramRewardConfig cfg_;
    Vocabulary vocab_;
    Vec bg_counts_;  // indexed by token id, unk slot included
    double bg_total_ = 0.0;
    Vec bg_prob_;
    Vec theta_{0.0};

    void rebuild_probs();
};

}  // namespace subsel
