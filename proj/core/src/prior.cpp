#include "subsel/prior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "subsel/checkpoint.hpp"

namespace subsel {

std::vector<TaggedProduct> distill_tags(const FeedForwardScorer& posterior,
                                        const std::vector<FeatureMatrix>& features, int k) {
    std::vector<TaggedProduct> out;
    out.reserve(features.size());
    for (const auto& m : features) {
        const auto mode = mode_subset(posterior_logits(posterior, m), k);
        TaggedProduct t;
        t.product_id = m.product_id;
        t.tags.assign(m.rows.size(), 0);
        for (int idx : mode) t.tags[idx] = 1;
        out.push_back(std::move(t));
    }
    return out;
}

void save_tags(const std::vector<TaggedProduct>& tags, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write tag file: " + path.string());
    for (const auto& t : tags) {
        out << t.product_id;
        for (int v : t.tags) out << ' ' << v;
        out << '\n';
    }
}

std::vector<TaggedProduct> load_tags(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tag file: " + path.string());
    std::vector<TaggedProduct> tags;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        TaggedProduct t;
        is >> t.product_id;
        int v;
        while (is >> v) t.tags.push_back(v);
        tags.push_back(std::move(t));
    }
    return tags;
}

PriorModel::PriorModel(Vocabulary vocab, PriorArch arch, Rng& init_rng)
    : vocab_(std::move(vocab)), arch_(arch) {
    const std::size_t d = static_cast<std::size_t>(arch_.embed_dim);
    emb_ = EmbeddingBagBlock::add_to(layout_, "emb", vocab_.size_with_unk(), d);
    attn_ = AttentionBlock::add_to(layout_, "ctx", d);
    head_ = MlpBlock::add_to(layout_, "head", d, static_cast<std::size_t>(arch_.head_hidden), 1,
                             arch_.dropout);
    params_.assign(layout_.total(), 0.0);
    emb_.init(params_, init_rng);
    attn_.init(params_, init_rng);
    head_.init(params_, init_rng);
}

std::vector<std::vector<int>> PriorModel::encode(const std::vector<TokenSeq>& reviews) const {
    std::vector<std::vector<int>> ids;
    ids.reserve(reviews.size());
    for (const auto& r : reviews) {
        auto e = vocab_.encode(r);
        if (e.empty()) e.push_back(vocab_.unk_id());  // degenerate empty review
        ids.push_back(std::move(e));
    }
    return ids;
}

Vec PriorModel::score_encoded(const std::vector<std::vector<int>>& review_ids, bool train,
                              Rng* rng, Tape* tape) const {
    const std::size_t n = review_ids.size();
    if (n == 0) throw std::invalid_argument("prior: empty review list");
    const std::size_t d = static_cast<std::size_t>(arch_.embed_dim);

    std::vector<Vec> reps(n, Vec(d));
    std::vector<EmbeddingBagBlock::Tape> emb_tapes(n);
    for (std::size_t i = 0; i < n; ++i)
        emb_.forward(params_, review_ids[i], tape ? &emb_tapes[i] : nullptr, reps[i]);

    std::vector<Vec> ctx;
    AttentionBlock::Tape attn_tape;
    attn_.forward(params_, reps, tape ? &attn_tape : nullptr, ctx);

    Vec scores(n);
    std::vector<MlpBlock::Tape> head_tapes(n);
    for (std::size_t i = 0; i < n; ++i) {
        double y[1];
        head_.forward(params_, ctx[i], train, rng, tape ? &head_tapes[i] : nullptr,
                      std::span<double>(y, 1));
        scores[i] = y[0];
    }
    if (tape) {
        tape->emb = std::move(emb_tapes);
        tape->attn = std::move(attn_tape);
        tape->head = std::move(head_tapes);
        tape->reps = std::move(reps);
        tape->ctx = std::move(ctx);
    }
    return scores;
}

Vec PriorModel::score_reviews(const std::vector<TokenSeq>& reviews) const {
    return score_encoded(encode(reviews), /*train=*/false, nullptr, nullptr);
}

void PriorModel::backward(const Tape& tape, const Vec& dscores, Vec& grad) const {
    const std::size_t n = tape.emb.size();
    std::vector<Vec> dctx(n, Vec(static_cast<std::size_t>(arch_.embed_dim), 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const double dy[1] = {dscores[i]};
        head_.backward(params_, tape.head[i], std::span<const double>(dy, 1), grad, dctx[i]);
    }
    std::vector<Vec> dreps;
    attn_.backward(params_, tape.attn, dctx, grad, dreps);
    for (std::size_t i = 0; i < n; ++i) emb_.backward(params_, tape.emb[i], dreps[i], grad);
}

double PriorModel::bce_loss(const std::vector<std::vector<int>>& review_ids,
                            const std::vector<int>& tags, bool train, Rng* rng,
                            Vec& grad) const {
    if (review_ids.size() != tags.size())
        throw std::invalid_argument("prior: tags misaligned with reviews");
    Tape tape;
    const Vec scores = score_encoded(review_ids, train, rng, &tape);
    const std::size_t n = scores.size();
    Vec dscores(n);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = 1.0 / (1.0 + std::exp(-scores[i]));
        const double t = static_cast<double>(tags[i]);
        loss -= t * std::log(std::max(p, 1e-300)) + (1.0 - t) * std::log(std::max(1.0 - p, 1e-300));
        dscores[i] = (p - t) / n;
    }
    backward(tape, dscores, grad);
    return loss / n;
}

void PriorModel::save(const std::filesystem::path& path) const {
    nlohmann::json extra;
    extra["embed_dim"] = arch_.embed_dim;
    extra["head_hidden"] = arch_.head_hidden;
    extra["dropout"] = arch_.dropout;
    extra["tokens"] = vocab_.tokens();
    save_checkpoint(path, "prior", layout_, params_, extra);
}

PriorModel PriorModel::load(const std::filesystem::path& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.kind != "prior") throw std::runtime_error("not a prior checkpoint: " + path.string());
    Vocabulary vocab;
    for (const auto& t : ck.extra.at("tokens")) vocab.add(t.get<std::string>());
    PriorArch arch;
    arch.embed_dim = ck.extra.at("embed_dim").get<int>();
    arch.head_hidden = ck.extra.at("head_hidden").get<int>();
    arch.dropout = ck.extra.at("dropout").get<double>();
    Rng dummy(0);
    PriorModel model(std::move(vocab), arch, dummy);
    if (model.params_.size() != ck.params.size())
        throw std::runtime_error("prior checkpoint: layout mismatch");
    model.params_ = std::move(ck.params);
    return model;
}

std::vector<int> select_topk(std::span<const double> scores, int k) {
    if (k > static_cast<int>(scores.size()))
        throw std::invalid_argument("select_topk: k exceeds item count");
    return mode_subset(scores, k);
}

std::vector<int> select_topk(const PriorModel& prior, const std::vector<TokenSeq>& reviews,
                             int k) {
    return select_topk(prior.score_reviews(reviews), k);
}

double tag_f1(const PriorModel& prior, const std::vector<ProductRecord>& corpus,
              const std::vector<TaggedProduct>& tags) {
    if (corpus.size() != tags.size()) throw std::invalid_argument("tag_f1: misaligned inputs");
    double acc = 0.0;
    for (std::size_t p = 0; p < corpus.size(); ++p) {
        const int k = static_cast<int>(
            std::count(tags[p].tags.begin(), tags[p].tags.end(), 1));
        if (k == 0) continue;
        std::vector<TokenSeq> reviews;
        for (const auto& r : corpus[p].reviews) reviews.push_back(r.tokens);
        const auto picked = select_topk(prior, reviews, k);
        int hit = 0;
        for (int idx : picked) hit += tags[p].tags[idx];
        // prediction and reference sets share size k, so P = R = F1
        acc += static_cast<double>(hit) / k;
    }
    return acc / corpus.size();
}

PriorModel train_prior(const std::vector<ProductRecord>& corpus,
                       const std::vector<TaggedProduct>& tags, const PriorTrainConfig& cfg) {
    if (corpus.empty() || corpus.size() != tags.size())
        throw std::invalid_argument("train_prior: corpus/tags misaligned");
    std::size_t ones = 0, total = 0;
    for (const auto& t : tags) {
        for (int v : t.tags) ones += static_cast<std::size_t>(v);
        total += t.tags.size();
    }
    if (ones == 0 || ones == total)
        throw std::invalid_argument("train_prior: degenerate tags (all zero or all one)");

    const std::size_t n_holdout =
        cfg.holdout_fraction > 0.0
            ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                           corpus.size() * cfg.holdout_fraction)))
            : 0;
    if (n_holdout >= corpus.size())
        throw std::invalid_argument("train_prior: holdout leaves no training products");
    const std::size_t n_train = corpus.size() - n_holdout;

    Rng root(cfg.seed);
    Rng init_rng = root.split(0xface);
    PriorModel model(Vocabulary::from_corpus(corpus), cfg.arch, init_rng);

    // pre-encode once
    std::vector<std::vector<std::vector<int>>> encoded;
    encoded.reserve(corpus.size());
    for (const auto& rec : corpus) {
        std::vector<TokenSeq> reviews;
        for (const auto& r : rec.reviews) reviews.push_back(r.tokens);
        encoded.push_back(model.encode(reviews));
    }

    AdamState opt(model.params().size(), {cfg.lr, 0.9, 0.999, 1e-8, cfg.warmup_steps});
    Vec best_params = model.params();
    double best_f1 = -std::numeric_limits<double>::infinity();

    std::vector<ProductRecord> holdout_corpus(corpus.begin() + n_train, corpus.end());
    std::vector<TaggedProduct> holdout_tags(tags.begin() + n_train, tags.end());

    Vec grad(model.params().size());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng epoch_rng = root.split(static_cast<std::uint64_t>(epoch));
        for (std::size_t p = 0; p < n_train; ++p) {
            Rng step_rng = epoch_rng.split(p);
            std::fill(grad.begin(), grad.end(), 0.0);
            model.bce_loss(encoded[p], tags[p].tags, /*train=*/true, &step_rng, grad);
            opt.step(model.params(), grad);
        }
        if (n_holdout > 0) {
            const double f1 = tag_f1(model, holdout_corpus, holdout_tags);
            if (f1 > best_f1) {
                best_f1 = f1;
                best_params = model.params();
            }
        }
    }
    if (n_holdout > 0) model.params() = best_params;
    return model;
}

}  // namespace subsel
