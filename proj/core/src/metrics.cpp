#include "subsel/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace subsel {
namespace {

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

// Tokens cannot contain whitespace, so a space-joined key is collision-free.
std::string gram_key(const TokenSeq& seq, std::size_t pos, int n) {
    std::string key = seq[pos];
    for (int j = 1; j < n; ++j) {
        key.push_back(' ');
        key += seq[pos + j];
    }
    return key;
}

std::size_t count_ngrams(Segments segs, int n, std::unordered_map<std::string, std::size_t>& counts) {
    std::size_t total = 0;
    for (const TokenSeq& seg : segs) {
        if (seg.size() < static_cast<std::size_t>(n)) continue;
        for (std::size_t i = 0; i + n <= seg.size(); ++i) {
            ++counts[gram_key(seg, i, n)];
            ++total;
        }
    }
    return total;
}

std::pair<double, double> clipped_pr(const std::vector<std::string>& hyp_items,
                                     const std::vector<std::string>& ref_items) {
    if (hyp_items.empty() || ref_items.empty())
        return {0.0, 0.0};
    std::unordered_map<std::string, std::size_t> ref_counts;
    for (const auto& it : ref_items) ++ref_counts[it];
    std::unordered_map<std::string, std::size_t> hyp_counts;
    for (const auto& it : hyp_items) ++hyp_counts[it];
    std::size_t overlap = 0;
    for (const auto& [item, ch] : hyp_counts) {
        auto r = ref_counts.find(item);
        if (r != ref_counts.end()) overlap += std::min(ch, r->second);
    }
    return {static_cast<double>(overlap) / hyp_items.size(),
            static_cast<double>(overlap) / ref_items.size()};
}

}  // namespace

RougeScore rouge_n(Segments hyp, Segments ref, int n) {
    if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
    std::unordered_map<std::string, std::size_t> hyp_counts, ref_counts;
    const std::size_t hyp_total = count_ngrams(hyp, n, hyp_counts);
    const std::size_t ref_total = count_ngrams(ref, n, ref_counts);
    std::size_t overlap = 0;
    for (const auto& [gram, ch] : hyp_counts) {
        auto r = ref_counts.find(gram);
        if (r != ref_counts.end()) overlap += std::min(ch, r->second);
    }
    RougeScore s;
    s.precision = hyp_total ? static_cast<double>(overlap) / hyp_total : 0.0;
    s.recall = ref_total ? static_cast<double>(overlap) / ref_total : 0.0;
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

RougeScore rouge_n(const TokenSeq& hyp, const TokenSeq& ref, int n) {
    return rouge_n(Segments(&hyp, 1), Segments(&ref, 1), n);
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RougeScore rouge_l(const TokenSeq& hyp, const TokenSeq& ref) {
    RougeScore s;
    if (hyp.empty() || ref.empty()) return s;
    const double l = static_cast<double>(lcs_length(hyp, ref));
    s.precision = l / hyp.size();
    s.recall = l / ref.size();
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

AspectLexicon AspectLexicon::from_phrases(const std::vector<std::string>& phrases) {
    AspectLexicon lex;
    std::unordered_set<std::string> seen;
    for (const auto& p : phrases) {
        TokenSeq toks = tokenize(p);
        if (toks.empty()) continue;
        std::string key = join_tokens(toks);
        if (!seen.insert(key).second) continue;
        if (toks.size() == 1) lex.unigrams_.insert(toks[0]);
        lex.index_[toks[0]].push_back(lex.phrases_.size());
        lex.phrases_.push_back(std::move(toks));
    }
    for (auto& [tok, ids] : lex.index_) {
        std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
            if (lex.phrases_[a].size() != lex.phrases_[b].size())
                return lex.phrases_[a].size() > lex.phrases_[b].size();
            return a < b;
        });
    }
    return lex;
}

AspectLexicon AspectLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open lexicon file: " + path.string());
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        phrases.push_back(line);
    }
    return from_phrases(phrases);
}

std::vector<std::string> AspectLexicon::tag(const TokenSeq& seq) const {
    std::vector<std::string> matches;
    std::size_t i = 0;
    while (i < seq.size()) {
        auto it = index_.find(seq[i]);
        std::size_t advance = 1;
        if (it != index_.end()) {
            for (std::size_t pid : it->second) {
                const TokenSeq& phrase = phrases_[pid];
                if (i + phrase.size() > seq.size()) continue;
                bool ok = true;
                for (std::size_t j = 1; j < phrase.size() && ok; ++j)
                    ok = seq[i + j] == phrase[j];
                if (ok) {
                    matches.push_back(join_tokens(phrase));
                    advance = phrase.size();
                    break;
                }
            }
        }
        i += advance;
    }
    return matches;
}

std::vector<std::string> AspectLexicon::tag(Segments segs) const {
    std::vector<std::string> all;
    for (const TokenSeq& seg : segs) {
        auto m = tag(seg);
        all.insert(all.end(), m.begin(), m.end());
    }
    return all;
}

std::pair<double, double> aspect_scores(Segments hyp, Segments ref, const AspectLexicon& lex) {
    if (lex.empty()) throw std::invalid_argument("aspect_scores: empty lexicon");
    return clipped_pr(lex.tag(hyp), lex.tag(ref));
}

std::pair<double, double> aspect_scores(const TokenSeq& hyp, const TokenSeq& ref,
                                        const AspectLexicon& lex) {
    return aspect_scores(Segments(&hyp, 1), Segments(&ref, 1), lex);
}

double aspect_density(const TokenSeq& seq, const AspectLexicon& lex) {
    return aspect_density(Segments(&seq, 1), lex);
}

double aspect_density(Segments segs, const AspectLexicon& lex) {
    std::size_t total = 0, hits = 0;
    for (const TokenSeq& seg : segs) {
        total += seg.size();
        for (const auto& tok : seg)
            if (lex.has_unigram(tok)) ++hits;
    }
    return total ? static_cast<double>(hits) / total : 0.0;
}

double length_difference(std::size_t len_a, std::size_t len_b, std::size_t max_len) {
    if (max_len == 0) throw std::invalid_argument("length_difference: max_len must be positive");
    return (static_cast<double>(len_a) - static_cast<double>(len_b)) / max_len;
}

}  // namespace subsel
