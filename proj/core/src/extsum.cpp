#include "subsel/extsum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "subsel/checkpoint.hpp"
#include "subsel/metrics.hpp"

namespace subsel {
namespace {

const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> abbr = {
        "mr", "mrs", "ms", "dr", "prof", "st", "no", "vs", "etc", "eg",
        "ie", "e.g", "i.e", "inc", "ltd", "co", "jr", "sr", "approx", "oz",
        "lbs", "ft", "dept", "fig"};
    return abbr;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// last word before position `i`, lowercased, punctuation-free
std::string preceding_word(const std::string& text, std::size_t i) {
    std::size_t e = i;
    while (e > 0 && is_terminator(text[e - 1])) --e;
    std::size_t b = e;
    while (b > 0 && !std::isspace(static_cast<unsigned char>(text[b - 1]))) --b;
    std::string w;
    for (std::size_t j = b; j < e; ++j) {
        char c = text[j];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        w.push_back(c);
    }
    return w;
}

}  // namespace

std::vector<SentenceRef> split_sentences(const std::string& text, int review_index) {
    std::vector<SentenceRef> out;
    std::size_t start = 0;
    auto emit = [&](std::size_t b, std::size_t e) {
        while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
        if (b >= e) return;
        SentenceRef s;
        s.review_index = review_index;
        s.begin = b;
        s.end = e;
        s.text = text.substr(b, e - b);
        s.tokens = tokenize(s.text);
        if (!s.tokens.empty()) out.push_back(std::move(s));
    };
    std::size_t i = 0;
    while (i < text.size()) {
        if (is_terminator(text[i])) {
            std::size_t j = i;
            while (j + 1 < text.size() && is_terminator(text[j + 1])) ++j;
            const bool at_end = j + 1 >= text.size();
            const bool before_space =
                !at_end && std::isspace(static_cast<unsigned char>(text[j + 1]));
            if ((at_end || before_space) &&
                !(text[i] == '.' && abbreviations().count(preceding_word(text, i)))) {
                emit(start, j + 1);
                start = j + 1;
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    emit(start, text.size());
    return out;
}

SentencePool build_pool(const ProductRecord& rec, std::size_t cap) {
    SentencePool pool;
    for (std::size_t r = 0; r < rec.reviews.size(); ++r) {
        auto sents = split_sentences(rec.reviews[r].text, static_cast<int>(r));
        for (auto& s : sents) {
            if (cap > 0 && pool.sentences.size() >= cap) return pool;
            pool.sentences.push_back(std::move(s));
        }
    }
    return pool;
}

namespace {

// Incremental clipped-recall bookkeeping for one summary section.
class SectionCoverage {
public:
    SectionCoverage(const std::vector<TokenSeq>& ref_segs) {
        count_ref(ref_segs, 1, ref1_, ref1_total_);
        count_ref(ref_segs, 2, ref2_, ref2_total_);
    }

    bool empty() const { return ref1_total_ == 0; }

    double gain(const TokenSeq& sent) const {
        return gain_n(sent, 1, ref1_, cur1_, ref1_total_) +
               gain_n(sent, 2, ref2_, cur2_, ref2_total_);
    }

    void add(const TokenSeq& sent) {
        add_n(sent, 1, cur1_);
        add_n(sent, 2, cur2_);
    }

private:
    using Counts = std::unordered_map<std::string, std::size_t>;

    static std::string key(const TokenSeq& s, std::size_t i, int n) {
        std::string k = s[i];
        for (int j = 1; j < n; ++j) {
            k.push_back(' ');
            k += s[i + j];
        }
        return k;
    }
    static void count_ref(const std::vector<TokenSeq>& segs, int n, Counts& out,
                          std::size_t& total) {
        total = 0;
        for (const auto& seg : segs) {
            if (seg.size() < static_cast<std::size_t>(n)) continue;
            for (std::size_t i = 0; i + n <= seg.size(); ++i) {
                ++out[key(seg, i, n)];
                ++total;
            }
        }
    }
    static void add_n(const TokenSeq& sent, int n, Counts& cur) {
        if (sent.size() < static_cast<std::size_t>(n)) return;
        for (std::size_t i = 0; i + n <= sent.size(); ++i) ++cur[key(sent, i, n)];
    }
    double gain_n(const TokenSeq& sent, int n, const Counts& ref, const Counts& cur,
                  std::size_t ref_total) const {
        if (ref_total == 0 || sent.size() < static_cast<std::size_t>(n)) return 0.0;
        Counts local;
        for (std::size_t i = 0; i + n <= sent.size(); ++i) ++local[key(sent, i, n)];
        std::size_t gained = 0;
        for (const auto& [g, c] : local) {
            auto r = ref.find(g);
            if (r == ref.end()) continue;
            auto cit = cur.find(g);
            const std::size_t have = cit == cur.end() ? 0 : cit->second;
            gained += std::min(have + c, r->second) - std::min(have, r->second);
        }
        return static_cast<double>(gained) / ref_total;
    }

    Counts ref1_, ref2_, cur1_, cur2_;
    std::size_t ref1_total_ = 0, ref2_total_ = 0;
};

}  // namespace

std::vector<SentenceClass> oracle_labels(const ProductRecord& rec, const SentencePool& pool,
                                         SectionBudgets budgets) {
    std::vector<SentenceClass> labels(pool.sentences.size(), SentenceClass::none);
    struct Section {
        SentenceClass cls;
        int budget;
        std::vector<TokenSeq> refs;
    };
    const Section sections[3] = {
        {SentenceClass::verdict, budgets.verdict, {rec.summary.verdict_tokens}},
        {SentenceClass::pro, budgets.pros, rec.summary.pros_tokens},
        {SentenceClass::con, budgets.cons, rec.summary.cons_tokens}};

    for (const auto& section : sections) {
        SectionCoverage cov(section.refs);
        if (cov.empty()) continue;
        for (int picked = 0; picked < section.budget; ++picked) {
            double best_gain = 0.0;
            int best = -1;
            for (std::size_t i = 0; i < pool.sentences.size(); ++i) {
                if (labels[i] != SentenceClass::none) continue;
                const double g = cov.gain(pool.sentences[i].tokens);
                if (g > best_gain) {
                    best_gain = g;
                    best = static_cast<int>(i);
                }
            }
            if (best < 0) break;  // no sentence adds positive recall
            labels[best] = section.cls;
            cov.add(pool.sentences[best].tokens);
        }
    }
    return labels;
}

GoldSummary ExtractedSummary::to_summary() const {
    auto join = [](const std::vector<SentenceRef>& sents) {
        std::string s;
        for (std::size_t i = 0; i < sents.size(); ++i) {
            if (i) s.push_back(' ');
            s += sents[i].text;
        }
        return s;
    };
    std::vector<std::string> pros_txt, cons_txt;
    for (const auto& s : pros) pros_txt.push_back(s.text);
    for (const auto& s : cons) cons_txt.push_back(s.text);
    return make_summary(join(verdict), pros_txt, cons_txt);
}

ExtsumModel::ExtsumModel(Vocabulary vocab, ExtsumArch arch, Rng& init_rng)
    : vocab_(std::move(vocab)), arch_(arch) {
    const std::size_t d = static_cast<std::size_t>(arch_.embed_dim);
    emb_ = EmbeddingBagBlock::add_to(layout_, "emb", vocab_.size_with_unk(), d);
    attn_ = AttentionBlock::add_to(layout_, "ctx", d);
    head_ = MlpBlock::add_to(layout_, "head", d, static_cast<std::size_t>(arch_.head_hidden), 4,
                             arch_.dropout);
    params_.assign(layout_.total(), 0.0);
    emb_.init(params_, init_rng);
    attn_.init(params_, init_rng);
    head_.init(params_, init_rng);
}

std::vector<std::vector<int>> ExtsumModel::encode(const SentencePool& pool) const {
    std::vector<std::vector<int>> ids;
    ids.reserve(pool.sentences.size());
    for (const auto& s : pool.sentences) {
        auto e = vocab_.encode(s.tokens);
        if (e.empty()) e.push_back(vocab_.unk_id());
        ids.push_back(std::move(e));
    }
    return ids;
}

std::vector<Vec> ExtsumModel::logits_encoded(const std::vector<std::vector<int>>& sentence_ids,
                                             bool train, Rng* rng, Tape* tape) const {
    const std::size_t n = sentence_ids.size();
    if (n == 0) throw std::invalid_argument("extsum: empty sentence pool");
    const std::size_t d = static_cast<std::size_t>(arch_.embed_dim);

    std::vector<Vec> reps(n, Vec(d));
    std::vector<EmbeddingBagBlock::Tape> emb_tapes(n);
    for (std::size_t i = 0; i < n; ++i)
        emb_.forward(params_, sentence_ids[i], tape ? &emb_tapes[i] : nullptr, reps[i]);

    std::vector<Vec> ctx;
    AttentionBlock::Tape attn_tape;
    attn_.forward(params_, reps, tape ? &attn_tape : nullptr, ctx);

    std::vector<Vec> logits(n, Vec(4));
    std::vector<MlpBlock::Tape> head_tapes(n);
    for (std::size_t i = 0; i < n; ++i)
        head_.forward(params_, ctx[i], train, rng, tape ? &head_tapes[i] : nullptr, logits[i]);
    if (tape) {
        tape->emb = std::move(emb_tapes);
        tape->attn = std::move(attn_tape);
        tape->head = std::move(head_tapes);
    }
    return logits;
}

std::vector<Vec> ExtsumModel::sentence_logits(const SentencePool& pool) const {
    return logits_encoded(encode(pool), /*train=*/false, nullptr, nullptr);
}

void ExtsumModel::backward(const Tape& tape, const std::vector<Vec>& dlogits, Vec& grad) const {
    const std::size_t n = tape.emb.size();
    std::vector<Vec> dctx(n, Vec(static_cast<std::size_t>(arch_.embed_dim), 0.0));
    for (std::size_t i = 0; i < n; ++i)
        head_.backward(params_, tape.head[i], dlogits[i], grad, dctx[i]);
    std::vector<Vec> dreps;
    attn_.backward(params_, tape.attn, dctx, grad, dreps);
    for (std::size_t i = 0; i < n; ++i) emb_.backward(params_, tape.emb[i], dreps[i], grad);
}

double ExtsumModel::weighted_ce_loss(const std::vector<std::vector<int>>& sentence_ids,
                                     const std::vector<SentenceClass>& labels,
                                     double positive_weight, bool train, Rng* rng,
                                     Vec& grad) const {
    if (sentence_ids.size() != labels.size())
        throw std::invalid_argument("extsum: labels misaligned with sentences");
    Tape tape;
    const std::vector<Vec> logits = logits_encoded(sentence_ids, train, rng, &tape);
    const std::size_t n = logits.size();
    std::vector<Vec> dlogits(n, Vec(4, 0.0));
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(labels[i]);
        const double w = (label == 0 ? 1.0 : positive_weight) / n;
        loss += softmax_cross_entropy(logits[i], label, w, dlogits[i]);
    }
    backward(tape, dlogits, grad);
    return loss;
}

void ExtsumModel::save(const std::filesystem::path& path) const {
    nlohmann::json extra;
    extra["embed_dim"] = arch_.embed_dim;
    extra["head_hidden"] = arch_.head_hidden;
    extra["dropout"] = arch_.dropout;
    extra["tokens"] = vocab_.tokens();
    save_checkpoint(path, "extsum", layout_, params_, extra);
}

ExtsumModel ExtsumModel::load(const std::filesystem::path& path) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.kind != "extsum")
        throw std::runtime_error("not an extsum checkpoint: " + path.string());
    Vocabulary vocab;
    for (const auto& t : ck.extra.at("tokens")) vocab.add(t.get<std::string>());
    ExtsumArch arch;
    arch.embed_dim = ck.extra.at("embed_dim").get<int>();
    arch.head_hidden = ck.extra.at("head_hidden").get<int>();
    arch.dropout = ck.extra.at("dropout").get<double>();
    Rng dummy(0);
    ExtsumModel model(std::move(vocab), arch, dummy);
    if (model.params_.size() != ck.params.size())
        throw std::runtime_error("extsum checkpoint: layout mismatch");
    model.params_ = std::move(ck.params);
    return model;
}

ExtsumModel train_extsum(const std::vector<ProductRecord>& corpus,
                         const std::vector<std::vector<SentenceClass>>& labels,
                         const ExtsumTrainConfig& cfg) {
    if (corpus.empty() || corpus.size() != labels.size())
        throw std::invalid_argument("train_extsum: corpus/labels misaligned");
    bool any_positive = false, any_negative = false;
    for (const auto& ls : labels)
        for (auto l : ls) (l == SentenceClass::none ? any_negative : any_positive) = true;
    if (!any_positive || !any_negative)
        throw std::invalid_argument("train_extsum: degenerate labels");

    Rng root(cfg.seed);
    Rng init_rng = root.split(0xface);
    ExtsumModel model(Vocabulary::from_corpus(corpus), cfg.arch, init_rng);

    std::vector<std::vector<std::vector<int>>> encoded;
    encoded.reserve(corpus.size());
    for (const auto& rec : corpus)
        encoded.push_back(model.encode(build_pool(rec, cfg.sentence_cap)));
    for (std::size_t p = 0; p < corpus.size(); ++p)
        if (encoded[p].size() != labels[p].size())
            throw std::invalid_argument("train_extsum: label count does not match pool size");

    AdamState opt(model.params().size(), {cfg.lr, 0.9, 0.999, 1e-8, cfg.warmup_steps});
    Vec grad(model.params().size());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng epoch_rng = root.split(static_cast<std::uint64_t>(epoch));
        for (std::size_t p = 0; p < corpus.size(); ++p) {
            Rng step_rng = epoch_rng.split(p);
            std::fill(grad.begin(), grad.end(), 0.0);
            model.weighted_ce_loss(encoded[p], labels[p], cfg.positive_weight, /*train=*/true,
                                   &step_rng, grad);
            opt.step(model.params(), grad);
        }
    }
    return model;
}

namespace {

std::vector<int> top_by_class(const std::vector<Vec>& probs, const std::vector<char>& taken,
                              int cls, int budget) {
    std::vector<int> order;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (!taken[i]) order.push_back(static_cast<int>(i));
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return probs[a][cls] > probs[b][cls]; });
    if (static_cast<int>(order.size()) > budget) order.resize(budget);
    return order;
}

}  // namespace

ExtractedSummary extract_summary(const ExtsumModel& model, const ProductRecord& rec,
                                 SectionBudgets budgets) {
    const SentencePool pool = build_pool(rec);
    if (pool.sentences.empty()) throw std::invalid_argument("extract_summary: empty pool");
    std::vector<Vec> probs = model.sentence_logits(pool);
    for (auto& row : probs) softmax_inplace(row);

    ExtractedSummary out;
    std::vector<char> taken(pool.sentences.size(), 0);
    const std::pair<int, std::vector<SentenceRef>*> plan[3] = {
        {budgets.verdict, &out.verdict}, {budgets.pros, &out.pros}, {budgets.cons, &out.cons}};
    int cls = 1;
    for (const auto& [budget, dest] : plan) {
        for (int idx : top_by_class(probs, taken, cls, budget)) {
            taken[idx] = 1;
            dest->push_back(pool.sentences[idx]);
        }
        ++cls;
    }
    out.short_pool = pool.sentences.size() <
                     static_cast<std::size_t>(budgets.verdict + budgets.pros + budgets.cons);
    return out;
}

ExtractedSummary random_baseline(const ProductRecord& rec, Rng& rng, SectionBudgets budgets) {
    const SentencePool pool = build_pool(rec);
    const std::size_t n = pool.sentences.size();
    const std::size_t want = static_cast<std::size_t>(budgets.verdict + budgets.pros + budgets.cons);

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    const std::size_t take = std::min(want, n);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(idx[i], idx[j]);
    }

    ExtractedSummary out;
    out.short_pool = n < want;
    std::size_t pos = 0;
    auto grab = [&](int budget, std::vector<SentenceRef>& dest) {
        for (int i = 0; i < budget && pos < take; ++i, ++pos)
            dest.push_back(pool.sentences[idx[pos]]);
    };
    grab(budgets.verdict, out.verdict);
    grab(budgets.pros, out.pros);
    grab(budgets.cons, out.cons);
    return out;
}

void save_labels(const std::vector<std::string>& ids,
                 const std::vector<std::vector<SentenceClass>>& labels,
                 const std::filesystem::path& path) {
    if (ids.size() != labels.size()) throw std::invalid_argument("save_labels: misaligned inputs");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write label file: " + path.string());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i];
        for (auto l : labels[i]) out << ' ' << static_cast<int>(l);
        out << '\n';
    }
}

std::pair<std::vector<std::string>, std::vector<std::vector<SentenceClass>>> load_labels(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label file: " + path.string());
    std::vector<std::string> ids;
    std::vector<std::vector<SentenceClass>> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string id;
        is >> id;
        std::vector<SentenceClass> ls;
        int v;
        while (is >> v) {
            if (v < 0 || v > 3) throw std::runtime_error("label file: bad class code");
            ls.push_back(static_cast<SentenceClass>(v));
        }
        ids.push_back(std::move(id));
        labels.push_back(std::move(ls));
    }
    return {std::move(ids), std::move(labels)};
}

}  // namespace subsel
