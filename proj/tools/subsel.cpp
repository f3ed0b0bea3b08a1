// subsel - review-subset selection experiments: ingest/stats/featurize,
// posterior training, prior distillation, extractive baselines, MI ranking,
// and ROUGE evaluation. Every command writes a run manifest next to its
// outputs and never mutates its inputs.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "subsel/analysis.hpp"
#include "subsel/checkpoint.hpp"
#include "subsel/corpus.hpp"
#include "subsel/extsum.hpp"
#include "subsel/features.hpp"
#include "subsel/manifest.hpp"
#include "subsel/prior.hpp"
#include "subsel/reward.hpp"
#include "subsel/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace subsel;

namespace {

fs::path resolve_input(const std::string& path) {
    fs::path p(path);
    if (fs::exists(p)) return p;
    if (const char* base = std::getenv("SUBSEL_DATA_DIR")) {
        fs::path alt = fs::path(base) / p;
        if (fs::exists(alt)) return alt;
    }
    return p;
}

struct ManifestScope {
    RunManifest manifest;
    fs::path out_dir;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    ManifestScope(const std::string& command, const fs::path& dir) : out_dir(dir) {
        manifest.command = command;
        fs::create_directories(dir);
    }
    void input(const fs::path& p) { manifest.inputs.push_back(p.string()); }
    void output(const fs::path& p) {
        manifest.outputs.emplace_back(p.string(), file_checksum(p));
    }
    void finish() {
        manifest.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_manifest(out_dir, manifest);
    }
};

std::vector<ProductRecord> load_input_corpus(const std::string& path, ManifestScope& scope) {
    const fs::path p = resolve_input(path);
    scope.input(p);
    return load_corpus(p);
}

AspectLexicon load_input_lexicon(const std::string& path, ManifestScope& scope) {
    const fs::path p = resolve_input(path);
    scope.input(p);
    return AspectLexicon::load(p);
}

void save_posterior(const fs::path& path, const FeedForwardScorer& scorer, int k) {
    json extra;
    extra["input_dim"] = scorer.config().input_dim;
    extra["hidden"] = scorer.config().hidden;
    extra["dropout"] = scorer.config().dropout;
    extra["norm_after_first"] = scorer.config().norm_after_first;
    extra["k"] = k;
    save_checkpoint(path, "posterior", scorer.layout(), scorer.params(), extra);
}

FeedForwardScorer load_posterior(const fs::path& path, int* k_out = nullptr) {
    Checkpoint ck = load_checkpoint(path);
    if (ck.kind != "posterior")
        throw std::runtime_error("not a posterior checkpoint: " + path.string());
    ScorerConfig cfg;
    cfg.input_dim = ck.extra.at("input_dim").get<int>();
    cfg.hidden = ck.extra.at("hidden").get<int>();
    cfg.dropout = ck.extra.at("dropout").get<double>();
    cfg.norm_after_first = ck.extra.at("norm_after_first").get<bool>();
    Rng dummy(0);
    FeedForwardScorer scorer(cfg, dummy);
    if (scorer.params().size() != ck.params.size())
        throw std::runtime_error("posterior checkpoint: layout mismatch");
    scorer.params() = ck.params;
    if (k_out) *k_out = ck.extra.value("k", 10);
    return scorer;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"review-subset selection experiment pipelines"};
    app.require_subcommand(1);

    std::string in_path, lex_path, out_dir, model_path, labels_path, tags_path;
    std::string pred_path, gold_path, features_path, posterior_path;
    std::string selector_name = "posterior";

    // ---- ingest -------------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "load, validate, filter, report");
    FilterRules rules;
    ingest->add_option("--input", in_path, "raw corpus (one product per line)")->required();
    ingest->add_option("-o,--out", out_dir, "output directory")->required();
    ingest->add_option("--min-review-words", rules.min_review_words)->capture_default_str();
    ingest->add_option("--max-review-words", rules.max_review_words)->capture_default_str();
    ingest->add_option("--min-reviews", rules.min_reviews_per_product)->capture_default_str();
    ingest->add_option("--min-summary-words", rules.min_summary_words)->capture_default_str();
    ingest->add_option("--n-max", rules.n_max)->capture_default_str();

    // ---- stats --------------------------------------------------------------
    auto* stats = app.add_subcommand("stats", "summary length and coverage table");
    stats->add_option("--corpus", in_path, "filtered corpus")->required();
    stats->add_option("-o,--out", out_dir, "optional output directory");

    // ---- featurize ----------------------------------------------------------
    auto* featurize = app.add_subcommand("featurize", "compute the 23 scorer features");
    featurize->add_option("--corpus", in_path)->required();
    featurize->add_option("--lexicon", lex_path)->required();
    featurize->add_option("-o,--out", out_dir)->required();

    // ---- train ----------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "joint selector/summarizer training");
    TrainConfig tcfg;
    train_cmd->add_option("--corpus", in_path)->required();
    train_cmd->add_option("--lexicon", lex_path)->required();
    train_cmd->add_option("-o,--out", out_dir)->required();
    train_cmd->add_option("--selector", selector_name, "posterior | random | r1-topk")
        ->capture_default_str();
    train_cmd->add_option("--k", tcfg.k)->capture_default_str();
    train_cmd->add_option("--n-max", tcfg.n_max)->capture_default_str();
    train_cmd->add_option("--posterior-samples,--samples", tcfg.posterior_samples)
        ->capture_default_str();
    train_cmd->add_option("--baseline-samples", tcfg.baseline_samples)->capture_default_str();
    train_cmd->add_option("--kld-scale", tcfg.kld_scale)->capture_default_str();
    train_cmd->add_option("--lr-posterior", tcfg.lr_posterior)->capture_default_str();
    train_cmd->add_option("--lr-reward", tcfg.lr_reward)->capture_default_str();
    train_cmd->add_option("--warmup-steps,--warmup", tcfg.warmup_steps)->capture_default_str();
    train_cmd->add_option("--epochs", tcfg.epochs)->capture_default_str();
    train_cmd->add_option("--holdout-fraction,--holdout", tcfg.holdout_fraction)
        ->capture_default_str();
    train_cmd->add_option("--seed", tcfg.seed)->capture_default_str();
    train_cmd->add_option("--scorer-hidden,--hidden", tcfg.scorer_hidden)->capture_default_str();
    train_cmd->add_option("--scorer-dropout", tcfg.scorer_dropout)->capture_default_str();
    train_cmd->add_flag("--scorer-norm-after-first", tcfg.scorer_norm_after_first,
                        "move layer normalization between the two hidden layers");

    // ---- fit-prior -------------------------------------------------------------
    auto* fit_prior = app.add_subcommand("fit-prior", "distill tags, train the blind selector");
    PriorTrainConfig pcfg;
    int prior_k = 10;
    fit_prior->add_option("--corpus", in_path)->required();
    fit_prior->add_option("--lexicon", lex_path)->required();
    fit_prior->add_option("--posterior", posterior_path)->required();
    fit_prior->add_option("-o,--out", out_dir)->required();
    fit_prior->add_option("--k", prior_k)->capture_default_str();
    fit_prior->add_option("--embed-dim", pcfg.arch.embed_dim)->capture_default_str();
    fit_prior->add_option("--head-hidden", pcfg.arch.head_hidden)->capture_default_str();
    fit_prior->add_option("--dropout", pcfg.arch.dropout)->capture_default_str();
    fit_prior->add_option("--epochs", pcfg.epochs)->capture_default_str();
    fit_prior->add_option("--lr", pcfg.lr)->capture_default_str();
    fit_prior->add_option("--warmup", pcfg.warmup_steps)->capture_default_str();
    fit_prior->add_option("--holdout", pcfg.holdout_fraction)->capture_default_str();
    fit_prior->add_option("--seed", pcfg.seed)->capture_default_str();

    // ---- select -----------------------------------------------------------------
    auto* select = app.add_subcommand("select", "emit chosen review indices per product");
    int select_k = 0;
    select->add_option("--corpus", in_path)->required();
    select->add_option("--model", model_path, "prior or posterior checkpoint")->required();
    select->add_option("-o,--out", out_dir)->required();
    select->add_option("--k", select_k, "subset size (default: checkpoint's k or 10)");
    select->add_option("--lexicon", lex_path, "needed for posterior checkpoints");

    // ---- extractive baselines ------------------------------------------------------
    auto* oracle_cmd = app.add_subcommand("extsum-oracle", "greedy oracle sentence labels");
    std::size_t sentence_cap = kTrainingSentenceCap;
    SectionBudgets oracle_budgets = kOracleBudgets;
    oracle_cmd->add_option("--corpus", in_path)->required();
    oracle_cmd->add_option("-o,--out", out_dir)->required();
    oracle_cmd->add_option("--cap", sentence_cap, "training sentence cap")->capture_default_str();
    oracle_cmd->add_option("--budget-verdict", oracle_budgets.verdict)->capture_default_str();
    oracle_cmd->add_option("--budget-pros", oracle_budgets.pros)->capture_default_str();
    oracle_cmd->add_option("--budget-cons", oracle_budgets.cons)->capture_default_str();

    auto* extsum_train_cmd = app.add_subcommand("extsum-train", "train the sentence classifier");
    ExtsumTrainConfig ecfg;
    extsum_train_cmd->add_option("--corpus", in_path)->required();
    extsum_train_cmd->add_option("--labels", labels_path)->required();
    extsum_train_cmd->add_option("-o,--out", out_dir)->required();
    extsum_train_cmd->add_option("--epochs", ecfg.epochs)->capture_default_str();
    extsum_train_cmd->add_option("--lr", ecfg.lr)->capture_default_str();
    extsum_train_cmd->add_option("--warmup", ecfg.warmup_steps)->capture_default_str();
    extsum_train_cmd->add_option("--pos-weight", ecfg.positive_weight)->capture_default_str();
    extsum_train_cmd->add_option("--embed-dim", ecfg.arch.embed_dim)->capture_default_str();
    extsum_train_cmd->add_option("--head-hidden", ecfg.arch.head_hidden)->capture_default_str();
    extsum_train_cmd->add_option("--dropout", ecfg.arch.dropout)->capture_default_str();
    extsum_train_cmd->add_option("--cap", ecfg.sentence_cap)->capture_default_str();
    extsum_train_cmd->add_option("--seed", ecfg.seed)->capture_default_str();

    auto* extract = app.add_subcommand("extsum-extract", "sequential top-k extraction");
    SectionBudgets extract_budgets = kExtractBudgets;
    extract->add_option("--corpus", in_path)->required();
    extract->add_option("--model", model_path)->required();
    extract->add_option("-o,--out", out_dir)->required();
    extract->add_option("--budget-verdict", extract_budgets.verdict)->capture_default_str();
    extract->add_option("--budget-pros", extract_budgets.pros)->capture_default_str();
    extract->add_option("--budget-cons", extract_budgets.cons)->capture_default_str();

    auto* random_cmd = app.add_subcommand("random-baseline", "random sentence extraction");
    std::uint64_t random_seed = 1;
    SectionBudgets random_budgets = kExtractBudgets;
    random_cmd->add_option("--corpus", in_path)->required();
    random_cmd->add_option("-o,--out", out_dir)->required();
    random_cmd->add_option("--seed", random_seed)->capture_default_str();
    random_cmd->add_option("--budget-verdict", random_budgets.verdict)->capture_default_str();
    random_cmd->add_option("--budget-pros", random_budgets.pros)->capture_default_str();
    random_cmd->add_option("--budget-cons", random_budgets.cons)->capture_default_str();

    // ---- analysis ----------------------------------------------------------------
    auto* mi_rank = app.add_subcommand("mi-rank", "mutual-information feature ranking");
    int mi_k = 3;
    mi_rank->add_option("--features", features_path)->required();
    mi_rank->add_option("--tags", tags_path)->required();
    mi_rank->add_option("-o,--out", out_dir)->required();
    mi_rank->add_option("--k", mi_k, "neighbor parameter")->capture_default_str();

    auto* eval_cmd = app.add_subcommand("eval", "section-wise ROUGE F1 of predictions");
    eval_cmd->add_option("--pred", pred_path)->required();
    eval_cmd->add_option("--gold", gold_path)->required();
    eval_cmd->add_option("-o,--out", out_dir, "optional output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*ingest) {
            ManifestScope scope("ingest", out_dir);
            auto records = load_input_corpus(in_path, scope);
            auto [kept, report] = apply_filters(records, rules);
            const fs::path corpus_out = fs::path(out_dir) / "corpus.jsonl";
            const fs::path report_out = fs::path(out_dir) / "filter_report.txt";
            save_corpus(kept, corpus_out);
            std::ofstream(report_out) << report.to_text();
            scope.manifest.config = {{"rules",
                                      {{"min_review_words", rules.min_review_words},
                                       {"max_review_words", rules.max_review_words},
                                       {"min_reviews_per_product", rules.min_reviews_per_product},
                                       {"min_summary_words", rules.min_summary_words},
                                       {"n_max", rules.n_max}}}};
            scope.output(corpus_out);
            scope.output(report_out);
            scope.finish();
            std::cout << report.to_text();
        } else if (*stats) {
            const fs::path p = resolve_input(in_path);
            const auto table = corpus_stats(load_corpus(p));
            const std::string text = format_stats(table);
            std::cout << text;
            if (!out_dir.empty()) {
                ManifestScope scope("stats", out_dir);
                scope.input(p);
                const fs::path stats_out = fs::path(out_dir) / "stats.txt";
                std::ofstream(stats_out) << text;
                scope.output(stats_out);
                scope.finish();
            }
        } else if (*featurize) {
            ManifestScope scope("featurize", out_dir);
            const auto records = load_input_corpus(in_path, scope);
            const auto lex = load_input_lexicon(lex_path, scope);
            const auto mats = featurize_corpus(records, lex);
            const fs::path features_out = fs::path(out_dir) / "features.txt";
            save_features(mats, features_out);
            scope.output(features_out);
            scope.finish();
        } else if (*train_cmd) {
            ManifestScope scope("train", out_dir);
            const auto records = load_input_corpus(in_path, scope);
            const auto lex = load_input_lexicon(lex_path, scope);
            const auto selector = selector_from_string(selector_name);
            auto result = train(records, lex, tcfg, selector);

            const fs::path posterior_out = fs::path(out_dir) / "posterior.ckpt";
            const fs::path reward_out = fs::path(out_dir) / "reward.ckpt";
            const fs::path log_out = fs::path(out_dir) / "train_log.jsonl";
            save_posterior(posterior_out, result.posterior, tcfg.k);
            result.reward.save(reward_out);
            {
                std::ofstream log(log_out);
                for (const auto& rep : result.log) {
                    json line{{"epoch", rep.epoch},
                              {"product", rep.product_id},
                              {"reward", rep.mean_reward},
                              {"baseline", rep.baseline},
                              {"posterior_grad_norm", rep.posterior_grad_norm},
                              {"reward_grad", rep.reward_grad}};
                    if (tcfg.kld_scale > 0.0) line["kld"] = rep.kld;
                    if (!rep.trace_indices.empty()) {
                        line["traces"] = rep.trace_indices;
                        line["trace_logps"] = rep.trace_logps;
                    }
                    log << line.dump() << '\n';
                }
                for (std::size_t e = 0; e < result.holdout_reward.size(); ++e)
                    log << json{{"epoch", e + 1}, {"holdout_reward", result.holdout_reward[e]}}
                               .dump()
                        << '\n';
                if (result.best_epoch > 0)
                    log << json{{"best_epoch", result.best_epoch}}.dump() << '\n';
            }
            scope.manifest.seed = tcfg.seed;
            scope.manifest.config = {{"selector", selector_name},
                                     {"k", tcfg.k},
                                     {"n_max", tcfg.n_max},
                                     {"samples", tcfg.posterior_samples},
                                     {"baseline_samples", tcfg.baseline_samples},
                                     {"kld_scale", tcfg.kld_scale},
                                     {"lr_posterior", tcfg.lr_posterior},
                                     {"lr_reward", tcfg.lr_reward},
                                     {"warmup", tcfg.warmup_steps},
                                     {"epochs", tcfg.epochs},
                                     {"holdout", tcfg.holdout_fraction},
                                     {"hidden", tcfg.scorer_hidden}};
            scope.output(posterior_out);
            scope.output(reward_out);
            scope.output(log_out);
            scope.finish();
        } else if (*fit_prior) {
            ManifestScope scope("fit-prior", out_dir);
            const auto records = load_input_corpus(in_path, scope);
            const auto lex = load_input_lexicon(lex_path, scope);
            const fs::path ckpt = resolve_input(posterior_path);
            scope.input(ckpt);
            const auto posterior = load_posterior(ckpt);
            const auto mats = featurize_corpus(records, lex);
            const auto tags = distill_tags(posterior, mats, prior_k);
            auto prior = train_prior(records, tags, pcfg);

            const fs::path tags_out = fs::path(out_dir) / "tags.txt";
            const fs::path prior_out = fs::path(out_dir) / "prior.ckpt";
            save_tags(tags, tags_out);
            prior.save(prior_out);
            scope.manifest.seed = pcfg.seed;
            scope.manifest.config = {{"k", prior_k},
                                     {"embed_dim", pcfg.arch.embed_dim},
                                     {"head_hidden", pcfg.arch.head_hidden},
                                     {"dropout", pcfg.arch.dropout},
                                     {"epochs", pcfg.epochs},
                                     {"lr", pcfg.lr},
                                     {"warmup", pcfg.warmup_steps},
                                     {"holdout", pcfg.holdout_fraction}};
            scope.output(tags_out);
            scope.output(prior_out);
            scope.finish();
        } else if (*select) {
            ManifestScope scope("select", out_dir);
            const auto records = load_input_corpus(in_path, scope);
            const fs::path ckpt = resolve_input(model_path);
            scope.input(ckpt);
            const Checkpoint probe = load_checkpoint(ckpt);

            std::vector<std::pair<std::string, std::vector<int>>> selections;
            if (probe.kind == "prior") {
                const auto prior = PriorModel::load(ckpt);
                const int k = select_k > 0 ? select_k : 10;
                for (const auto& rec : records) {
                    std::vector<TokenSeq> reviews;
                    for (const auto& r : rec.reviews) reviews.push_back(r.tokens);
                    selections.emplace_back(rec.id, select_topk(prior, reviews, k));
                }
            } else if (probe.kind == "posterior") {
                if (lex_path.empty())
                    throw std::runtime_error("select: posterior checkpoints need --lexicon");
                const auto lex = load_input_lexicon(lex_path, scope);
                int ckpt_k = 10;
                const auto posterior = load_posterior(ckpt, &ckpt_k);
                const int k = select_k > 0 ? select_k : ckpt_k;
                for (const auto& rec : records) {
                    FeatureMatrix m;
                    m.product_id = rec.id;
                    for (std::size_t i = 0; i < rec.reviews.size(); ++i)
                        m.rows.push_back(compute_features(i, rec, lex));
                    selections.emplace_back(rec.id,
                                            mode_subset(posterior_logits(posterior, m), k));
                }
            } else {
                throw std::runtime_error("select: unsupported checkpoint kind " + probe.kind);
            }

            const fs::path sel_out = fs::path(out_dir) / "selections.jsonl";
            {
                std::ofstream out(sel_out);
                for (const auto& [id, indices] : selections)
                    out << json{{"id", id}, {"indices", indices}}.dump() << '\n';
            }
            scope.manifest.config = {{"k", select_k}, {"model_kind", probe.kind}};
            scope.output(sel_out);
            scope.finish();
        } else if (*oracle_cmd) {
            ManifestScope scope("extsum-oracle", out_dir);
            const auto records = load_input_corpus(in_path, scope);
            std::vector<std::string> ids;
            std::vector<std::vector<SentenceClass>> labels;
            for (const auto& rec : records) {
                const auto pool = build_pool(rec, sentence_cap);
                ids.push_back(rec.id);
                labels.push_back(oracle_labels(rec, pool, oracle_budgets));
            }
            const fs::path labels_out = fs::path(out_dir) / "labels.txt";
            save_labels(ids, labels, labels_out);
            scope.manifest.config = {{"cap", sentence_cap},
                                     {"budgets",
                                      {oracle_budgets.verdict, oracle_budgets.pros,
                                       oracle_budgets.cons}}};
            scope.output(labels_out);
            scope.finish();
        } else if (*extsum_train_cmd) {
            ManifestScope scope("extsum-train", out_dir);
            const auto records = load_input_corpus(in_path, scope);
            const fs::path lpath = resolve_input(labels_path);
            scope.input(lpath);
            const auto [ids, labels] = load_labels(lpath);
            if (ids.size() != records.size())
                throw std::runtime_error("extsum-train: label file does not match corpus");
            auto model = train_extsum(records, labels, ecfg);
            const fs::path model_out = fs::path(out_dir) / "extsum.ckpt";
            model.save(model_out);
            scope.manifest.seed = ecfg.seed;
            scope.manifest.config = {{"epochs", ecfg.epochs},
                                     {"lr", ecfg.lr},
                                     {"pos_weight", ecfg.positive_weight},
                                     {"cap", ecfg.sentence_cap}};
            scope.output(model_out);
            scope.finish();
        } else if (*extract) {
            ManifestScope scope("extsum-extract", out_dir);
            const auto records = load_input_corpus(in_path, scope);
            const fs::path mpath = resolve_input(model_path);
            scope.input(mpath);
            const auto model = ExtsumModel::load(mpath);
            std::vector<SummaryRecord> out;
            for (const auto& rec : records)
                out.push_back({rec.id, extract_summary(model, rec, extract_budgets).to_summary()});
            const fs::path sum_out = fs::path(out_dir) / "summaries.jsonl";
            save_summaries(out, sum_out);
            scope.manifest.config = {{"budgets",
                                      {extract_budgets.verdict, extract_budgets.pros,
                                       extract_budgets.cons}}};
            scope.output(sum_out);
            scope.finish();
        } else if (*random_cmd) {
            ManifestScope scope("random-baseline", out_dir);
            const auto records = load_input_corpus(in_path, scope);
            Rng root(random_seed);
            std::vector<SummaryRecord> out;
            for (std::size_t i = 0; i < records.size(); ++i) {
                Rng rng = root.split(i);
                out.push_back(
                    {records[i].id, random_baseline(records[i], rng, random_budgets).to_summary()});
            }
            const fs::path sum_out = fs::path(out_dir) / "summaries.jsonl";
            save_summaries(out, sum_out);
            scope.manifest.seed = random_seed;
            scope.manifest.config = {{"budgets",
                                      {random_budgets.verdict, random_budgets.pros,
                                       random_budgets.cons}}};
            scope.output(sum_out);
            scope.finish();
        } else if (*mi_rank) {
            ManifestScope scope("mi-rank", out_dir);
            const fs::path fpath = resolve_input(features_path);
            const fs::path tpath = resolve_input(tags_path);
            scope.input(fpath);
            scope.input(tpath);
            const auto mats = load_features(fpath);
            const auto tags = load_tags(tpath);
            const auto report = rank_features(mats, tags, mi_k);
            const std::string text = format_mi_report(report);
            const fs::path report_out = fs::path(out_dir) / "mi_report.txt";
            std::ofstream(report_out) << text;
            scope.manifest.config = {{"k", mi_k}};
            scope.output(report_out);
            scope.finish();
            std::cout << text;
        } else if (*eval_cmd) {
            const fs::path ppath = resolve_input(pred_path);
            const fs::path gpath = resolve_input(gold_path);
            const auto table = eval_summaries(load_summaries(ppath), load_corpus(gpath));
            const std::string text = format_eval(table);
            std::cout << text;
            if (!out_dir.empty()) {
                ManifestScope scope("eval", out_dir);
                scope.input(ppath);
                scope.input(gpath);
                const fs::path eval_out = fs::path(out_dir) / "eval.txt";
                std::ofstream(eval_out) << text;
                scope.output(eval_out);
                scope.finish();
            }
        }
    } catch (const CorpusError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
