#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "subsel/text.hpp"

namespace subsel {

// Raised for malformed input data; carries the 1-based line number when known.
class CorpusError : public std::runtime_error {
public:
    CorpusError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct Review {
    std::string text;
    TokenSeq tokens;  // cached; word_count == tokens.size()
    std::size_t word_count = 0;
};

struct GoldSummary {
    std::string verdict;
    std::vector<std::string> pros;
    std::vector<std::string> cons;

    // Cached tokenizations; bullets stay separate segments so n-grams never
    // cross bullet boundaries.
    TokenSeq verdict_tokens;
    std::vector<TokenSeq> pros_tokens;
    std::vector<TokenSeq> cons_tokens;

    // verdict and pros-and-cons are treated as separate reference sequences
    std::vector<TokenSeq> pc_segments() const;
    std::size_t total_words() const;
    bool complete() const;
};

struct ProductRecord {
    std::string id;
    std::vector<Review> reviews;
    GoldSummary summary;

    std::vector<TokenSeq> review_segments() const;
};

struct FilterRules {
    int min_review_words = 10;
    int max_review_words = 120;
    int min_reviews_per_product = 10;
    int min_summary_words = 5;
    int n_max = 100;

    void validate() const;
};

struct FilterReport {
    std::size_t products_in = 0;
    std::size_t products_kept = 0;
    std::size_t products_dropped_few_reviews = 0;
    std::size_t products_dropped_bad_summary = 0;
    std::size_t products_truncated = 0;

    std::size_t reviews_in = 0;
    std::size_t reviews_kept = 0;
    std::size_t reviews_dropped_length = 0;
    std::size_t reviews_dropped_with_product = 0;
    std::size_t reviews_truncated = 0;

    std::size_t dropped_products() const {
        return products_dropped_few_reviews + products_dropped_bad_summary;
    }
    std::size_t dropped_summaries() const { return products_dropped_bad_summary; }

    // dropped + kept = input totals, per category
    bool reconciles() const;
    std::string to_text() const;
};

Review make_review(std::string text);
GoldSummary make_summary(std::string verdict, std::vector<std::string> pros,
                         std::vector<std::string> cons);

// One JSON object per line:
// {"id": ..., "reviews": [{"text": ...}], "summary": {"verdict": ..., "pros": [...], "cons": [...]}}
// Unknown fields (ratings, meta) are accepted and ignored.
std::vector<ProductRecord> load_corpus(const std::filesystem::path& path);
ProductRecord parse_product_line(const std::string& line, std::size_t line_no);
void save_corpus(const std::vector<ProductRecord>& records, const std::filesystem::path& path);
std::string product_to_json_line(const ProductRecord& rec);

std::pair<std::vector<ProductRecord>, FilterReport> apply_filters(
    const std::vector<ProductRecord>& records, const FilterRules& rules = {});

struct SectionStats {
    double mean_words = 0.0;
    double rouge1 = 0.0;  // mean coverage of the section by the reviews, x100
    double rouge2 = 0.0;
};

struct StatsTable {
    std::size_t products = 0;
    SectionStats verdict, pros, cons;
};

/// Mean section lengths and mean ROUGE-1/2 coverage of each summary section
/// by the product's concatenated reviews. Throws on an empty corpus.
StatsTable corpus_stats(const std::vector<ProductRecord>& records);
std::string format_stats(const StatsTable& t);

}  // namespace subsel
