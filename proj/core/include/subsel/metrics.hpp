#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "subsel/text.hpp"

namespace subsel {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Segmented sequences never contribute n-grams across segment boundaries;
// a single TokenSeq is the one-segment case.
using Segments = std::span<const TokenSeq>;

/// Clipped n-gram overlap. precision = overlap / |hyp n-grams|,
/// recall = overlap / |ref n-grams|; zero when a denominator is zero.
RougeScore rouge_n(Segments hyp, Segments ref, int n);
RougeScore rouge_n(const TokenSeq& hyp, const TokenSeq& ref, int n);

/// Longest-common-subsequence score: p = L/|hyp|, r = L/|ref|.
RougeScore rouge_l(const TokenSeq& hyp, const TokenSeq& ref);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

// Curated aspect keyword phrases (unigrams and multiword), lowercase.
class AspectLexicon {
public:
    AspectLexicon() = default;
    static AspectLexicon from_phrases(const std::vector<std::string>& phrases);
    // One phrase per line, UTF-8, '#' comments allowed.
    static AspectLexicon load(const std::filesystem::path& path);

    bool empty() const { return phrases_.empty(); }
    std::size_t size() const { return phrases_.size(); }
    bool has_unigram(const std::string& token) const { return unigrams_.count(token) > 0; }

    // Greedy longest-match left-to-right; returns matched phrases in order,
    // each joined with single spaces.
    std::vector<std::string> tag(const TokenSeq& seq) const;
    std::vector<std::string> tag(Segments segs) const;

private:
    std::vector<TokenSeq> phrases_;
    std::unordered_set<std::string> unigrams_;
    // first token -> phrase indices, longest first
    std::unordered_map<std::string, std::vector<std::size_t>> index_;
};

/// Aspect precision / recall over the multisets of tagged phrases, clipped.
std::pair<double, double> aspect_scores(Segments hyp, Segments ref, const AspectLexicon& lex);
std::pair<double, double> aspect_scores(const TokenSeq& hyp, const TokenSeq& ref,
                                        const AspectLexicon& lex);

/// Share of tokens that are unigram lexicon entries; 0 for an empty sequence.
double aspect_density(const TokenSeq& seq, const AspectLexicon& lex);
double aspect_density(Segments segs, const AspectLexicon& lex);

/// |a|/max - |b|/max. Throws if max_len <= 0.
double length_difference(std::size_t len_a, std::size_t len_b, std::size_t max_len);

}  // namespace subsel
