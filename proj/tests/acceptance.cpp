// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Each criterion pins its tolerances in code; nothing is deferred
// to later calibration. Run all criteria or a single one with --only N.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "oracles.hpp"
#include "subsel/analysis.hpp"
#include "subsel/corpus.hpp"
#include "subsel/extsum.hpp"
#include "subsel/features.hpp"
#include "subsel/metrics.hpp"
#include "subsel/nn.hpp"
#include "subsel/prior.hpp"
#include "subsel/reward.hpp"
#include "subsel/rng.hpp"
#include "subsel/subset.hpp"
#include "subsel/trainer.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace subsel;

namespace {

const fs::path kData = fs::path(SUBSEL_DATA_DIR);
const fs::path kFixture = kData / "fixture_corpus.jsonl";
const fs::path kLexicon = kData / "lexicon.txt";
const std::string kCli = SUBSEL_CLI_PATH;

bool check(std::ostream& os, bool ok, const std::string& what) {
    if (!ok) os << " [" << what << " FAILED]";
    return ok;
}

// ---- criterion 1: subset-distribution correctness ---------------------------

bool criterion_subset(std::ostream& os) {
    Rng rng(0xC1);
    bool ok = true;
    double worst_sum_err = 0.0, worst_chi = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));             // N <= 6
        const int k = 1 + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(std::min(3, n))));  // K <= 3
        std::vector<double> logits(n);
        for (double& v : logits) v = (rng.uniform() * 2.0 - 1.0) * 3.0;

        const auto probs = enumerate_subset_probs(logits, k);
        double total = 0.0;
        for (const auto& [tuple, p] : probs) total += p;
        worst_sum_err = std::max(worst_sum_err, std::abs(total - 1.0));
        ok &= check(os, std::abs(total - 1.0) <= 1e-9, "tuple probabilities sum to 1");

        // blocked indices carry exactly zero probability and are never drawn
        std::vector<int> blocked;
        for (int i = 0; i < n - 1; ++i)
            if (rng.uniform() < 0.4) blocked.push_back(i);
        const auto step = step_distribution(logits, blocked);
        for (int b : blocked) ok &= check(os, step[b] == 0.0, "blocked probability is zero");

        // empirical frequencies over 1e6 draws, chi-square within its 3-sigma band
        const int draws = 1000000;
        std::map<std::vector<int>, int> counts;
        for (int d = 0; d < draws; ++d) ++counts[sample_subset(logits, k, rng).indices];
        for (const auto& [tuple, cnt] : counts)
            ok &= check(os, probs.count(tuple) > 0, "sampled tuple is enumerable");
        std::vector<double> observed, expected;
        for (const auto& [tuple, p] : probs) {
            expected.push_back(p);
            const auto it = counts.find(tuple);
            observed.push_back(it == counts.end() ? 0.0 : it->second);
        }
        const double stat = oracle::chi_square(observed, expected, draws);
        const double dof = static_cast<double>(probs.size()) - 1.0;
        if (dof > 0) {
            // Wilson-Hilferty chi-square quantile at the 3-sigma level; the
            // naive mean + 3 sd band is far too tight for small dof
            const double t = 1.0 - 2.0 / (9.0 * dof) + 3.0 * std::sqrt(2.0 / (9.0 * dof));
            const double limit = dof * t * t * t;
            worst_chi = std::max(worst_chi, stat / limit);
            ok &= check(os, stat <= limit, "sampling frequencies within 3 sigma");
        }
    }
    os << " worst |sum-1| " << worst_sum_err << ", worst chi2/limit " << worst_chi;
    return ok;
}

// ---- criterion 2: REINFORCE unbiasedness ------------------------------------

// Fixed reward per unordered pair, centered near zero so the with- and
// without-baseline estimators have comparable variance. Review index i is
// recoverable from the review's first token "ri".
class PairTableReward : public RewardModel {
public:
    double log_likelihood(const TokenSeq&, const std::vector<TokenSeq>& selected) const override {
        int a = selected.at(0).at(0)[1] - '0';
        int b = selected.at(1).at(0)[1] - '0';
        if (a > b) std::swap(a, b);
        static const std::map<std::pair<int, int>, double> table{
            {{0, 1}, -0.320}, {{0, 2}, 0.713},  {{0, 3}, -0.396},
            {{1, 2}, 0.881},  {{1, 3}, -0.253}, {{2, 3}, 0.927}};
        return table.at({a, b});
    }
    Vec grad_theta(const TokenSeq&, const std::vector<TokenSeq>&) const override { return {}; }
    Vec& theta() override { return theta_; }
    const Vec& theta() const override { return theta_; }

private:
    Vec theta_;
};

bool criterion_reinforce(std::ostream& os) {
    ProductRecord product;
    product.id = "toy";
    for (int i = 0; i < 4; ++i)
        product.reviews.push_back(make_review("r" + std::to_string(i) + " filler text"));
    product.summary = make_summary("any verdict words here", {"a pro"}, {"a con"});
    const PairTableReward reward;

    // two-parameter scorer: logit_i = w1 * x_i + w2 * z_i; this instance is
    // conditioned so both exact gradient components dwarf the MC noise floor
    const Vec x{-0.595, -0.250, 1.325, -0.948};
    const Vec z{-0.138, -1.087, 1.420, -0.618};
    const double w1 = 0.3, w2 = -0.2;
    Vec logits(4);
    for (int i = 0; i < 4; ++i) logits[i] = w1 * x[i] + w2 * z[i];

    TrainConfig cfg;
    cfg.k = 2;
    cfg.posterior_samples = 1;
    cfg.baseline_samples = 3;

    const auto tuple_probs = enumerate_subset_probs(logits, cfg.k);
    double uniform_mean = 0.0;
    for (const auto& [tuple, p] : tuple_probs) {
        (void)p;
        uniform_mean += subset_reward(reward, product, tuple);
    }
    uniform_mean /= tuple_probs.size();

    auto dlogq = [&](const std::vector<int>& tuple) {
        Vec d(4, 0.0);
        std::vector<int> blocked;
        for (int idx : tuple) {
            const auto p = step_distribution(logits, blocked);
            for (int j = 0; j < 4; ++j) d[j] -= p[j];
            d[idx] += 1.0;
            blocked.push_back(idx);
        }
        return d;
    };
    auto project = [&](const Vec& d) {
        double dw = 0.0, db = 0.0;
        for (int i = 0; i < 4; ++i) {
            dw += d[i] * x[i];
            db += d[i] * z[i];
        }
        return std::make_pair(dw, db);
    };
    auto exact_grad = [&](double beta) {
        double dw = 0.0, db = 0.0;
        for (const auto& [tuple, p] : tuple_probs) {
            const double r = subset_reward(reward, product, tuple);
            const auto [gw, gb] = project(dlogq(tuple));
            dw += p * (r - beta) * gw;
            db += p * (r - beta) * gb;
        }
        return std::make_pair(dw, db);
    };

    const auto [ew, eb] = exact_grad(uniform_mean);
    const auto [pw, pb] = exact_grad(0.0);
    bool ok = true;
    ok &= check(os, std::abs(ew - pw) <= 1e-9 && std::abs(eb - pb) <= 1e-9,
                "exact gradients with/without baseline agree to 1e-9");

    for (bool with_baseline : {true, false}) {
        const int samples = 200000;
        Rng rng(with_baseline ? 0xAB1 : 0xAB2);
        double dw = 0.0, db = 0.0;
        for (int s = 0; s < samples; ++s) {
            Rng step = rng.split(s);
            auto out = reinforce_dlogits(logits, product, reward, cfg, step);
            if (!with_baseline) {
                const auto d = dlogq(out.traces[0].indices);
                for (int j = 0; j < 4; ++j) out.dlogits[j] += out.baseline * d[j];
            }
            const auto [gw, gb] = project(out.dlogits);
            dw += gw / samples;
            db += gb / samples;
        }
        const double rel_w = std::abs(dw - ew) / std::abs(ew);
        const double rel_b = std::abs(db - eb) / std::abs(eb);
        os << (with_baseline ? " with-baseline" : " without-baseline") << " rel err ("
           << rel_w << ", " << rel_b << ")";
        ok &= check(os, rel_w <= 0.02 && rel_b <= 0.02, "MC gradient within 2% of exact");
    }
    return ok;
}

// ---- criterion 3: gradient integrity ------------------------------------------

bool criterion_gradients(std::ostream& os) {
    bool ok = true;
    double worst = 0.0;

    {  // posterior scorer, both normalization placements
        Rng rng(0xD1);
        for (bool norm_first : {false, true}) {
            ScorerConfig cfg;
            cfg.input_dim = 23;
            cfg.hidden = 32;
            cfg.norm_after_first = norm_first;
            FeedForwardScorer scorer(cfg, rng);
            Vec x(23);
            for (double& v : x) v = rng.uniform() * 2.0 - 1.0;
            Vec grad(scorer.layout().total(), 0.0);
            FeedForwardScorer::Tape tape;
            scorer.forward(x, false, nullptr, tape);
            scorer.backward(tape, 1.0, grad);
            const double err = finite_diff_max_rel_err(
                scorer.params(), [&] { return scorer.forward(x); }, grad);
            worst = std::max(worst, err);
            ok &= check(os, err <= 1e-4, "posterior scorer gradient");
        }
    }
    {  // prior encoder + contextualizer + head through the BCE loss
        Rng rng(0xD2);
        Vocabulary vocab;
        for (int i = 0; i < 12; ++i) vocab.add("tok" + std::to_string(i));
        PriorArch arch;
        arch.embed_dim = 8;
        arch.head_hidden = 10;
        arch.dropout = 0.0;
        PriorModel model(vocab, arch, rng);
        const std::vector<std::vector<int>> ids{{0, 3, 5}, {1, 1, 7}, {2, 9, 11, 4}};
        const std::vector<int> tags{1, 0, 1};
        Vec grad(model.params().size(), 0.0);
        model.bce_loss(ids, tags, false, nullptr, grad);
        const double err = finite_diff_max_rel_err(
            model.params(),
            [&] {
                Vec scratch(model.params().size(), 0.0);
                return model.bce_loss(ids, tags, false, nullptr, scratch);
            },
            grad);
        worst = std::max(worst, err);
        ok &= check(os, err <= 1e-4, "prior model gradient");
    }
    {  // extsum classifier through the x50-weighted loss
        Rng rng(0xD3);
        Vocabulary vocab;
        for (int i = 0; i < 10; ++i) vocab.add("sent" + std::to_string(i));
        ExtsumArch arch;
        arch.embed_dim = 8;
        arch.head_hidden = 9;
        arch.dropout = 0.0;
        ExtsumModel model(vocab, arch, rng);
        const std::vector<std::vector<int>> ids{{0, 1}, {2, 3, 4}, {5}, {6, 7, 8, 9}};
        const std::vector<SentenceClass> labels{SentenceClass::verdict, SentenceClass::none,
                                                SentenceClass::pro, SentenceClass::con};
        Vec grad(model.params().size(), 0.0);
        model.weighted_ce_loss(ids, labels, 50.0, false, nullptr, grad);
        const double err = finite_diff_max_rel_err(
            model.params(),
            [&] {
                Vec scratch(model.params().size(), 0.0);
                return model.weighted_ce_loss(ids, labels, 50.0, false, nullptr, scratch);
            },
            grad);
        worst = std::max(worst, err);
        ok &= check(os, err <= 1e-4, "extsum classifier gradient");
    }
    {  // reward mixing parameter
        auto m = UnigramMixtureReward::build(
            {TokenSeq{"alpha", "beta", "gamma"}, TokenSeq{"beta", "delta"}});
        const TokenSeq summary{"alpha", "delta", "missing"};
        const std::vector<TokenSeq> sel{TokenSeq{"alpha", "alpha"}, TokenSeq{"epsilon"}};
        m.theta()[0] = 0.4;
        const Vec grad = m.grad_theta(summary, sel);
        const double err = finite_diff_max_rel_err(
            m.theta(), [&] { return m.log_likelihood(summary, sel); }, grad);
        worst = std::max(worst, err);
        ok &= check(os, err <= 1e-4, "reward mixing-weight gradient");
    }
    os << " worst rel err " << worst;
    return ok;
}

// ---- criterion 4: end-to-end learning signal ------------------------------------

bool criterion_learning(std::ostream& os) {
    const auto corpus = synthetic::make({.products = 100, .reviews_per_product = 20,
                                         .signal_per_product = 5, .review_words = 12,
                                         .seed = 404});
    TrainConfig cfg;
    cfg.k = 5;
    cfg.epochs = 20;
    cfg.lr_posterior = 5e-3;
    cfg.lr_reward = 5e-2;
    cfg.warmup_steps = 100;
    cfg.scorer_hidden = 250;
    cfg.holdout_fraction = 0.1;
    cfg.seed = 2024;

    const auto mats = featurize_corpus(corpus.records, corpus.lexicon);

    // an uninformative scorer scores every review identically, so the tie
    // rule picks the first K reviews; signal slots are uniformly scattered,
    // putting this reference at chance level K/N
    double untrained_precision = 0.0;
    {
        Rng init(515);
        ScorerConfig scfg;
        scfg.hidden = cfg.scorer_hidden;
        FeedForwardScorer untrained(scfg, init);
        const auto& w3 = untrained.layout().at("w3");
        const auto& b3 = untrained.layout().at("b3");
        for (std::size_t i = 0; i < w3.size(); ++i) untrained.params()[w3.offset + i] = 0.0;
        untrained.params()[b3.offset] = 0.0;
        for (std::size_t p = 0; p < corpus.records.size(); ++p) {
            const auto mode = mode_subset(posterior_logits(untrained, mats[p]), cfg.k);
            untrained_precision += synthetic::subset_precision(mode, corpus.signal_indices[p]);
        }
        untrained_precision /= corpus.records.size();
    }

    auto result = train(corpus.records, corpus.lexicon, cfg);
    double trained_precision = 0.0;
    for (std::size_t p = 0; p < corpus.records.size(); ++p) {
        const auto mode = mode_subset(posterior_logits(result.posterior, mats[p]), cfg.k);
        trained_precision += synthetic::subset_precision(mode, corpus.signal_indices[p]);
    }
    trained_precision /= corpus.records.size();

    bool ok = true;
    os << " posterior precision " << trained_precision << " (untrained " << untrained_precision
       << ", chance " << static_cast<double>(cfg.k) / 20.0 << ")";
    ok &= check(os, trained_precision >= 0.9, "trained posterior mode precision >= 0.9");
    ok &= check(os, untrained_precision <= 0.4, "untrained near chance");

    // distill tags on the training split, fit the blind prior, evaluate
    // top-K precision against the planted signal on the held-out products
    const std::size_t n_holdout = 10;
    const std::size_t n_train = corpus.records.size() - n_holdout;
    std::vector<FeatureMatrix> train_mats(mats.begin(), mats.begin() + n_train);
    std::vector<ProductRecord> train_recs(corpus.records.begin(),
                                          corpus.records.begin() + n_train);
    const auto tags = distill_tags(result.posterior, train_mats, cfg.k);

    PriorTrainConfig pcfg;
    pcfg.arch.embed_dim = 32;
    pcfg.arch.head_hidden = 100;
    pcfg.arch.dropout = 0.10;
    pcfg.epochs = 15;
    pcfg.lr = 5e-3;
    pcfg.warmup_steps = 100;
    pcfg.holdout_fraction = 0.1;
    pcfg.seed = 99;
    const auto prior = train_prior(train_recs, tags, pcfg);

    double prior_precision = 0.0;
    for (std::size_t p = n_train; p < corpus.records.size(); ++p) {
        std::vector<TokenSeq> reviews;
        for (const auto& r : corpus.records[p].reviews) reviews.push_back(r.tokens);
        const auto picked = select_topk(prior, reviews, cfg.k);
        prior_precision += synthetic::subset_precision(picked, corpus.signal_indices[p]);
    }
    prior_precision /= n_holdout;
    os << ", prior held-out precision " << prior_precision;
    ok &= check(os, prior_precision >= 0.8, "prior top-K precision >= 0.8");
    return ok;
}

// ---- criterion 5: filtering fidelity ----------------------------------------------

bool criterion_filtering(std::ostream& os) {
    const auto records = load_corpus(kFixture);
    FilterRules rules;
    const auto [kept, report] = apply_filters(records, rules);
    const auto naive = oracle::naive_filter(records, rules);

    bool ok = true;
    ok &= check(os, kept.size() == naive.kept.size(), "survivor count");
    std::size_t discrepancies = 0;
    for (std::size_t i = 0; i < std::min(kept.size(), naive.kept.size()); ++i) {
        if (kept[i].id != naive.kept[i].id) ++discrepancies;
        if (kept[i].reviews.size() != naive.kept[i].reviews.size()) {
            ++discrepancies;
            continue;
        }
        for (std::size_t r = 0; r < kept[i].reviews.size(); ++r)
            if (kept[i].reviews[r].text != naive.kept[i].reviews[r].text) ++discrepancies;
    }
    os << " " << discrepancies << " discrepancies over " << kept.size() << " survivors";
    ok &= check(os, discrepancies == 0, "naive re-implementation agrees");
    ok &= check(os, report.reconciles(), "report arithmetic reconciles");

    // the fixture exercises every rule: word bounds, review minimum, summary
    // minimum, and the review cap
    std::set<std::string> ids;
    for (const auto& rec : kept) ids.insert(rec.id);
    ok &= check(os, !ids.count("p03"), "few-review product dropped");
    ok &= check(os, !ids.count("p09"), "short-summary product dropped");
    ok &= check(os, !ids.count("p15"), "incomplete-summary product dropped");
    for (const auto& rec : kept)
        if (rec.id == "p12") ok &= check(os, rec.reviews.size() == 100, "cap at 100 reviews");
    return ok;
}

// ---- criterion 6: metric oracle equivalence -----------------------------------------

bool criterion_metrics(std::ostream& os) {
    Rng rng(0xF1);
    auto random_seq = [&](std::size_t max_len, int vocab) {
        TokenSeq s;
        const std::size_t len = rng.below(max_len + 1);
        for (std::size_t i = 0; i < len; ++i)
            s.push_back(std::string(1, static_cast<char>('a' + rng.below(vocab))));
        return s;
    };

    bool ok = true;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto hyp = random_seq(10, 4);
        const auto ref = random_seq(10, 4);
        const int n = 1 + static_cast<int>(rng.below(3));
        const auto s = rouge_n(hyp, ref, n);
        const double overlap = static_cast<double>(oracle::rouge_overlap(hyp, ref, n));
        const double hn = static_cast<double>(oracle::ngram_count(hyp, n));
        const double rn = static_cast<double>(oracle::ngram_count(ref, n));
        const double expect_p = hn > 0 ? overlap / hn : 0.0;
        const double expect_r = rn > 0 ? overlap / rn : 0.0;
        if (std::abs(s.precision - expect_p) > 1e-12 || std::abs(s.recall - expect_r) > 1e-12) {
            ok = check(os, false, "rouge_n oracle mismatch");
            break;
        }
    }
    for (int trial = 0; trial < 10000; ++trial) {
        const auto a = random_seq(12, 3);
        const auto b = random_seq(12, 3);
        if (lcs_length(a, b) != oracle::lcs_memo(a, b)) {
            ok = check(os, false, "rouge_l LCS oracle mismatch");
            break;
        }
    }
    os << " 10^4 sequences per metric, exact agreement";
    return ok;
}

// ---- criterion 7: extractive oracle dominance --------------------------------------

bool criterion_extractive(std::ostream& os) {
    const auto records = load_corpus(kFixture);
    const auto [kept, report] = apply_filters(records, {});
    (void)report;

    auto section_recall = [](const std::vector<TokenSeq>& picked,
                             const std::vector<TokenSeq>& refs) {
        if (refs.empty()) return 0.0;
        const Segments ps(picked.data(), picked.size());
        const Segments rs(refs.data(), refs.size());
        return rouge_n(ps, rs, 1).recall;
    };
    auto mean_section_recall = [&](const ProductRecord& rec,
                                   const std::vector<TokenSeq>& verdict,
                                   const std::vector<TokenSeq>& pros,
                                   const std::vector<TokenSeq>& cons) {
        const std::vector<TokenSeq> v{rec.summary.verdict_tokens};
        return (section_recall(verdict, v) + section_recall(pros, rec.summary.pros_tokens) +
                section_recall(cons, rec.summary.cons_tokens)) /
               3.0;
    };

    int oracle_wins = 0;
    Rng rng(0x71);
    for (const auto& rec : kept) {
        const auto pool = build_pool(rec, kTrainingSentenceCap);
        const auto labels = oracle_labels(rec, pool, kOracleBudgets);
        std::vector<TokenSeq> ov, op, oc;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == SentenceClass::verdict) ov.push_back(pool.sentences[i].tokens);
            if (labels[i] == SentenceClass::pro) op.push_back(pool.sentences[i].tokens);
            if (labels[i] == SentenceClass::con) oc.push_back(pool.sentences[i].tokens);
        }
        const auto rb = random_baseline(rec, rng);
        std::vector<TokenSeq> rv, rp, rc;
        for (const auto& s : rb.verdict) rv.push_back(s.tokens);
        for (const auto& s : rb.pros) rp.push_back(s.tokens);
        for (const auto& s : rb.cons) rc.push_back(s.tokens);

        if (mean_section_recall(rec, ov, op, oc) >= mean_section_recall(rec, rv, rp, rc))
            ++oracle_wins;
    }
    bool ok = true;
    os << " oracle wins " << oracle_wins << "/" << kept.size();
    ok &= check(os,
                static_cast<double>(oracle_wins) >= 0.95 * static_cast<double>(kept.size()),
                "oracle beats random on >= 95% of products");

    // greedy equals exhaustive best-first search on small pools
    auto brute_score = [](const std::vector<TokenSeq>& picked,
                          const std::vector<TokenSeq>& refs) {
        const Segments ps(picked.data(), picked.size());
        const Segments rs(refs.data(), refs.size());
        return rouge_n(ps, rs, 1).recall + rouge_n(ps, rs, 2).recall;
    };
    Rng gen(0x72);
    int match = 0;
    const int small_trials = 60;
    for (int trial = 0; trial < small_trials; ++trial) {
        ProductRecord rec;
        rec.id = "small";
        const char* vocab[] = {"zoom", "lens", "grip", "case", "noise", "blur", "strap", "cost"};
        std::string text;
        for (int s = 0; s < 6; ++s) {
            for (int w = 0; w < 4; ++w)
                text += std::string(vocab[gen.below(8)]) + (w == 3 ? "" : " ");
            text += ". ";
        }
        rec.reviews.push_back(make_review(text));
        auto pick = [&] {
            std::string t;
            for (int w = 0; w < 3; ++w) t += std::string(vocab[gen.below(8)]) + " ";
            return t;
        };
        rec.summary = make_summary(pick(), {pick()}, {pick()});
        const auto pool = build_pool(rec);
        if (pool.sentences.size() > 8) continue;
        const auto labels = oracle_labels(rec, pool, {2, 2, 2});

        // independent exhaustive best-first replay
        std::vector<SentenceClass> expect(pool.sentences.size(), SentenceClass::none);
        struct Sec {
            SentenceClass cls;
            std::vector<TokenSeq> refs;
        };
        const Sec secs[3] = {{SentenceClass::verdict, {rec.summary.verdict_tokens}},
                             {SentenceClass::pro, rec.summary.pros_tokens},
                             {SentenceClass::con, rec.summary.cons_tokens}};
        for (const auto& sec : secs) {
            std::vector<TokenSeq> picked;
            for (int step = 0; step < 2; ++step) {
                double best_gain = 0.0;
                int best = -1;
                const double before = brute_score(picked, sec.refs);
                for (std::size_t i = 0; i < pool.sentences.size(); ++i) {
                    if (expect[i] != SentenceClass::none) continue;
                    auto plus = picked;
                    plus.push_back(pool.sentences[i].tokens);
                    const double gain = brute_score(plus, sec.refs) - before;
                    if (gain > best_gain + 1e-15) {
                        best_gain = gain;
                        best = static_cast<int>(i);
                    }
                }
                if (best < 0) break;
                expect[best] = sec.cls;
                picked.push_back(pool.sentences[best].tokens);
            }
        }
        if (labels == expect) ++match;
    }
    os << ", greedy = best-first on " << match << "/" << small_trials << " small pools";
    ok &= check(os, match == small_trials, "greedy matches exhaustive best-first");
    return ok;
}

// ---- criterion 8: MI estimator calibration ---------------------------------------

bool criterion_mi(std::ostream& os) {
    bool ok = true;
    {
        Rng rng(0x81);
        const int n = 5000;
        std::vector<double> x(n);
        std::vector<int> y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = static_cast<int>(rng.below(2));
        }
        const double mi = mi_discrete_continuous(x, y);
        os << " independent " << mi;
        ok &= check(os, std::abs(mi) <= 0.02, "independent pairs within 0.02 of 0");
    }
    {
        Rng rng(0x82);
        const int n = 5000;
        std::vector<double> x(n);
        std::vector<int> y(n);
        for (int i = 0; i < n; ++i) {
            y[i] = i % 2;
            x[i] = y[i] + rng.normal() * 1e-3;
        }
        const double mi = mi_discrete_continuous(x, y);
        os << ", near-deterministic " << mi << " (ln2 " << std::log(2.0) << ")";
        ok &= check(os, std::abs(mi - std::log(2.0)) <= 0.05, "within 0.05 of ln 2");
    }
    {
        int firsts = 0;
        for (int trial = 0; trial < 20; ++trial) {
            Rng rng(1000 + trial);
            std::vector<FeatureMatrix> mats;
            std::vector<TaggedProduct> tags;
            for (int p = 0; p < 10; ++p) {
                FeatureMatrix m;
                m.product_id = "t" + std::to_string(p);
                TaggedProduct t;
                t.product_id = m.product_id;
                for (int r = 0; r < 60; ++r) {
                    const int label = static_cast<int>(rng.below(2));
                    FeatureVector row{};
                    row[0] = label + rng.normal() * 1e-3;
                    for (std::size_t j = 1; j < kFeatureCount; ++j) row[j] = rng.normal();
                    m.rows.push_back(row);
                    t.tags.push_back(label);
                }
                mats.push_back(std::move(m));
                tags.push_back(std::move(t));
            }
            const auto report = rank_features(mats, tags);
            if (report.rows[0].column == 0) ++firsts;
        }
        os << ", planted column first in " << firsts << "/20 trials";
        ok &= check(os, firsts == 20, "planted feature ranks first in every trial");
    }
    return ok;
}

// ---- criterion 9: CLI determinism ---------------------------------------------------

int run_cli(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int ret = std::system(cmd.c_str());
    return WIFEXITED(ret) ? WEXITSTATUS(ret) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool run_cli_pipeline(const fs::path& root) {
    const std::string base = root.string();
    if (run_cli("ingest --input " + kFixture.string() + " -o " + base + "/ing") != 0) return false;
    if (run_cli("featurize --corpus " + base + "/ing/corpus.jsonl --lexicon " +
                kLexicon.string() + " -o " + base + "/feat") != 0)
        return false;
    if (run_cli("train --corpus " + base + "/ing/corpus.jsonl --lexicon " + kLexicon.string() +
                " -o " + base + "/tr --k 5 --epochs 2 --warmup 5 --hidden 16 --seed 7") != 0)
        return false;
    if (run_cli("fit-prior --corpus " + base + "/ing/corpus.jsonl --lexicon " +
                kLexicon.string() + " --posterior " + base + "/tr/posterior.ckpt -o " + base +
                "/pr --k 5 --epochs 2 --lr 1e-3 --warmup 5 --embed-dim 8 --head-hidden 8 "
                "--seed 7") != 0)
        return false;
    if (run_cli("select --corpus " + base + "/ing/corpus.jsonl --model " + base +
                "/pr/prior.ckpt -o " + base + "/sel --k 5") != 0)
        return false;
    if (run_cli("extsum-oracle --corpus " + base + "/ing/corpus.jsonl -o " + base + "/orc") != 0)
        return false;
    if (run_cli("extsum-train --corpus " + base + "/ing/corpus.jsonl --labels " + base +
                "/orc/labels.txt -o " + base +
                "/ext --epochs 1 --lr 1e-3 --warmup 5 --embed-dim 8 --head-hidden 8 --seed 7") !=
        0)
        return false;
    if (run_cli("extsum-extract --corpus " + base + "/ing/corpus.jsonl --model " + base +
                "/ext/extsum.ckpt -o " + base + "/exo") != 0)
        return false;
    if (run_cli("random-baseline --corpus " + base + "/ing/corpus.jsonl -o " + base +
                "/rb --seed 7") != 0)
        return false;
    if (run_cli("mi-rank --features " + base + "/feat/features.txt --tags " + base +
                "/pr/tags.txt -o " + base + "/mi") != 0)
        return false;
    if (run_cli("eval --pred " + base + "/exo/summaries.jsonl --gold " + base +
                "/ing/corpus.jsonl -o " + base + "/ev") != 0)
        return false;
    return true;
}

bool criterion_determinism(std::ostream& os) {
    const fs::path a = fs::temp_directory_path() / "subsel_acc_det_a";
    const fs::path b = fs::temp_directory_path() / "subsel_acc_det_b";
    fs::remove_all(a);
    fs::remove_all(b);
    fs::create_directories(a);
    fs::create_directories(b);

    bool ok = true;
    ok &= check(os, run_cli_pipeline(a), "first pipeline run");
    ok &= check(os, run_cli_pipeline(b), "second pipeline run");
    if (!ok) return false;

    std::vector<std::pair<std::string, std::string>> ca, cb;
    auto collect = [](const fs::path& root, auto& into) {
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (!entry.is_regular_file()) continue;
            if (entry.path().filename() == "run_manifest.json") continue;  // carries wall-clock
            into.emplace_back(fs::relative(entry.path(), root).string(), slurp(entry.path()));
        }
        std::sort(into.begin(), into.end());
    };
    collect(a, ca);
    collect(b, cb);
    ok &= check(os, ca.size() == cb.size(), "artifact sets match");
    std::size_t mismatched = 0;
    for (std::size_t i = 0; i < std::min(ca.size(), cb.size()); ++i)
        if (ca[i] != cb[i]) ++mismatched;
    os << " " << ca.size() << " artifacts, " << mismatched << " byte mismatches";
    ok &= check(os, mismatched == 0, "byte-identical artifacts");
    return ok;
}

struct Criterion {
    int id;
    std::string name;
    std::function<bool(std::ostream&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    }

    const std::vector<Criterion> criteria{
        {1, "subset-distribution correctness", criterion_subset},
        {2, "REINFORCE unbiasedness", criterion_reinforce},
        {3, "gradient integrity", criterion_gradients},
        {4, "end-to-end learning signal", criterion_learning},
        {5, "filtering fidelity", criterion_filtering},
        {6, "metric oracle equivalence", criterion_metrics},
        {7, "extractive oracle dominance", criterion_extractive},
        {8, "MI estimator calibration", criterion_mi},
        {9, "pipeline determinism", criterion_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (only != 0 && c.id != only) continue;
        std::ostringstream detail;
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail << " [exception: " << e.what() << "]";
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.name << " ("
                  << detail.str();
        std::cout << " ) [" << secs << "s]" << std::endl;
        if (!ok) ++failures;
    }
    return failures;
}
