#include "subsel/reward.hpp"

#include <cmath>
#include <stdexcept>

#include "subsel/checkpoint.hpp"

namespace subsel {

int Vocabulary::add(const std::string& token) {
    auto [it, inserted] = index_.try_emplace(token, static_cast<int>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? unk_id() : it->second;
}

std::vector<int> Vocabulary::encode(const TokenSeq& seq) const {
    std::vector<int> ids;
    ids.reserve(seq.size());
    for (const auto& t : seq) ids.push_back(lookup(t));
    return ids;
}

Vocabulary Vocabulary::from_corpus(const std::vector<ProductRecord>& records) {
    Vocabulary v;
    for (const auto& rec : records) {
        for (const auto& r : rec.reviews)
            for (const auto& t : r.tokens) v.add(t);
        for (const auto& t : rec.summary.verdict_tokens) v.add(t);
        for (const auto& b : rec.summary.pros_tokens)
            for (const auto& t : b) v.add(t);
        for (const auto& b : rec.summary.cons_tokens)
            for (const auto& t : b) v.add(t);
    }
    return v;
}

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

UnigramMixtureReward UnigramMixtureReward::build(const std::vector<TokenSeq>& docs,
                                                 UnigramRewardConfig cfg) {
    if (docs.empty()) throw std::invalid_argument("reward: empty corpus");
    UnigramMixtureReward m;
    m.cfg_ = cfg;
    for (const auto& doc : docs)
        for (const auto& t : doc) m.vocab_.add(t);
    if (m.vocab_.size() == 0) throw std::invalid_argument("reward: corpus has no tokens");
    m.bg_counts_.assign(m.vocab_.size_with_unk(), 0.0);
    for (const auto& doc : docs)
        for (const auto& t : doc) {
            m.bg_counts_[m.vocab_.lookup(t)] += 1.0;
            m.bg_total_ += 1.0;
        }
    m.rebuild_probs();
    return m;
}

UnigramMixtureReward UnigramMixtureReward::build_from_corpus(
    const std::vector<ProductRecord>& records, UnigramRewardConfig cfg) {
    std::vector<TokenSeq> docs;
    for (const auto& rec : records) {
        for (const auto& r : rec.reviews) docs.push_back(r.tokens);
        docs.push_back(rec.summary.verdict_tokens);
        for (const auto& b : rec.summary.pros_tokens) docs.push_back(b);
        for (const auto& b : rec.summary.cons_tokens) docs.push_back(b);
    }
    return build(docs, cfg);
}

void UnigramMixtureReward::rebuild_probs() {
    // p(w) = (count + a) / (total + a * (|V| + 1)), unk included
    const double denom = bg_total_ + cfg_.alpha_bg * static_cast<double>(vocab_.size() + 1);
    bg_prob_.resize(bg_counts_.size());
    for (std::size_t i = 0; i < bg_counts_.size(); ++i)
        bg_prob_[i] = (bg_counts_[i] + cfg_.alpha_bg) / denom;
}

double UnigramMixtureReward::mixing_weight() const { return sigmoid(theta_[0]); }

double UnigramMixtureReward::background_prob(const std::string& token) const {
    return bg_prob_[vocab_.lookup(token)];
}

namespace {

// subset unigram distribution with add-alpha smoothing over vocab + unk
struct SubsetDist {
    std::unordered_map<int, double> counts;
    double len = 0.0;
    double alpha, denom;

    SubsetDist(const Vocabulary& vocab, const std::vector<TokenSeq>& selected, double a)
        : alpha(a), denom(0.0) {
        for (const auto& r : selected)
            for (const auto& t : r) {
                counts[vocab.lookup(t)] += 1.0;
                len += 1.0;
            }
        denom = len + alpha * static_cast<double>(vocab.size() + 1);
    }
    double prob(int id) const {
        auto it = counts.find(id);
        return ((it == counts.end() ? 0.0 : it->second) + alpha) / denom;
    }
};

}  // namespace

double UnigramMixtureReward::log_likelihood(const TokenSeq& summary,
                                            const std::vector<TokenSeq>& selected) const {
    if (summary.empty()) throw std::invalid_argument("reward: empty summary");
    const SubsetDist sub(vocab_, selected, cfg_.alpha_sub);
    const double lam = mixing_weight();
    double ll = 0.0;
    for (const auto& t : summary) {
        const int id = vocab_.lookup(t);
        ll += std::log((1.0 - lam) * bg_prob_[id] + lam * sub.prob(id));
    }
    return ll;
}

Vec UnigramMixtureReward::grad_theta(const TokenSeq& summary,
                                     const std::vector<TokenSeq>& selected) const {
    if (summary.empty()) throw std::invalid_argument("reward: empty summary");
    const SubsetDist sub(vocab_, selected, cfg_.alpha_sub);
    const double lam = mixing_weight();
    double g = 0.0;
    for (const auto& t : summary) {
        const int id = vocab_.lookup(t);
        const double pb = bg_prob_[id], ps = sub.prob(id);
        const double mix = (1.0 - lam) * pb + lam * ps;
        g += (ps - pb) / mix;
    }
    return {g * lam * (1.0 - lam)};
}

void UnigramMixtureReward::save(const std::filesystem::path& path) const {
    ParamLayout layout;
    layout.add("lambda_raw", 1, 1);
    nlohmann::json extra;
    extra["alpha_bg"] = cfg_.alpha_bg;
    extra["alpha_sub"] = cfg_.alpha_sub;
    extra["tokens"] = vocab_.tokens();
    nlohmann::json counts = nlohmann::json::array();
    for (double c : bg_counts_) counts.push_back(c);
    extra["counts"] = std::move(counts);
    save_checkpoint(path, "reward", layout, theta_, extra);
}

UnigramMixtureReward UnigramMixtureReward::load(const std::filesystem::path& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.kind != "reward") throw std::runtime_error("not a reward checkpoint: " + path.string());
    UnigramMixtureReward m;
    m.cfg_.alpha_bg = ck.extra.at("alpha_bg").get<double>();
    m.cfg_.alpha_sub = ck.extra.at("alpha_sub").get<double>();
    for (const auto& t : ck.extra.at("tokens")) m.vocab_.add(t.get<std::string>());
    for (const auto& c : ck.extra.at("counts")) m.bg_counts_.push_back(c.get<double>());
    if (m.bg_counts_.size() != m.vocab_.size_with_unk())
        throw std::runtime_error("reward checkpoint: count table does not match vocabulary");
    for (double c : m.bg_counts_) m.bg_total_ += c;
    m.theta_ = ck.params;
    m.rebuild_probs();
    return m;
}

}  // namespace subsel
