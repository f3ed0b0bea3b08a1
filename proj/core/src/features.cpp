#include "subsel/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace subsel {

const std::array<const char*, kFeatureCount>& feature_names() {
    static const std::array<const char*, kFeatureCount> names = {
        "R2-R(r,pc)",  "R1-R(r,pc)",  "R2-P(r,pc)",  "R1-R(r,v)",  "R2-R(r,v)",
        "R2-P(r,r-k)", "R2-P(r,v)",   "AR(r,pc)",    "R1-R(r,r-k)", "AP(r,pc)",
        "R2-R(r,r-k)", "R1-P(r,pc)",  "R1-P(r,v)",   "AP(r,r-k)",  "AR(r,r-k)",
        "LD(r,pc)",    "AP(r,v)",     "LD(r,v)",     "R1-P(r,r-k)", "AR(r,v)",
        "AD(r)",       "AD(v)",       "AD(pc)"};
    return names;
}

std::size_t product_max_len(const ProductRecord& rec) {
    std::size_t m = 1;
    for (const auto& r : rec.reviews) m = std::max(m, r.word_count);
    m = std::max(m, rec.summary.verdict_tokens.size());
    std::size_t pc = 0;
    for (const auto& b : rec.summary.pros_tokens) pc += b.size();
    for (const auto& b : rec.summary.cons_tokens) pc += b.size();
    return std::max(m, pc);
}

FeatureVector compute_features(std::size_t k, const ProductRecord& rec, const AspectLexicon& lex) {
    if (k >= rec.reviews.size())
        throw std::out_of_range("compute_features: review index out of range");

    const TokenSeq& hyp = rec.reviews[k].tokens;
    const Segments hyp_segs(&hyp, 1);

    const std::vector<TokenSeq> verdict{rec.summary.verdict_tokens};
    const std::vector<TokenSeq> pc = rec.summary.pc_segments();
    std::vector<TokenSeq> others;
    others.reserve(rec.reviews.size() - 1);
    for (std::size_t i = 0; i < rec.reviews.size(); ++i)
        if (i != k) others.push_back(rec.reviews[i].tokens);

    const RougeScore r1v = rouge_n(hyp_segs, verdict, 1);
    const RougeScore r2v = rouge_n(hyp_segs, verdict, 2);
    const RougeScore r1pc = rouge_n(hyp_segs, pc, 1);
    const RougeScore r2pc = rouge_n(hyp_segs, pc, 2);
    const RougeScore r1o = rouge_n(hyp_segs, others, 1);
    const RougeScore r2o = rouge_n(hyp_segs, others, 2);

    const auto [ap_v, ar_v] = aspect_scores(hyp_segs, verdict, lex);
    const auto [ap_pc, ar_pc] = aspect_scores(hyp_segs, pc, lex);
    const auto [ap_o, ar_o] = aspect_scores(hyp_segs, others, lex);

    const std::size_t max_len = product_max_len(rec);
    std::size_t pc_len = 0;
    for (const auto& seg : pc) pc_len += seg.size();

    FeatureVector f{};
    f[0] = r2pc.recall;
    f[1] = r1pc.recall;
    f[2] = r2pc.precision;
    f[3] = r1v.recall;
    f[4] = r2v.recall;
    f[5] = r2o.precision;
    f[6] = r2v.precision;
    f[7] = ar_pc;
    f[8] = r1o.recall;
    f[9] = ap_pc;
    f[10] = r2o.recall;
    f[11] = r1pc.precision;
    f[12] = r1v.precision;
    f[13] = ap_o;
    f[14] = ar_o;
    f[15] = length_difference(hyp.size(), pc_len, max_len);
    f[16] = ap_v;
    f[17] = length_difference(hyp.size(), verdict[0].size(), max_len);
    f[18] = r1o.precision;
    f[19] = ar_v;
    f[20] = aspect_density(hyp, lex);
    f[21] = aspect_density(verdict[0], lex);
    f[22] = aspect_density(Segments(pc.data(), pc.size()), lex);

    for (double v : f)
        if (!std::isfinite(v)) throw std::runtime_error("compute_features: non-finite feature");
    return f;
}

std::vector<FeatureMatrix> featurize_corpus(const std::vector<ProductRecord>& records,
                                            const AspectLexicon& lex) {
    std::vector<FeatureMatrix> mats;
    mats.reserve(records.size());
    for (const auto& rec : records) {
        FeatureMatrix m;
        m.product_id = rec.id;
        m.rows.reserve(rec.reviews.size());
        for (std::size_t k = 0; k < rec.reviews.size(); ++k)
            m.rows.push_back(compute_features(k, rec, lex));
        mats.push_back(std::move(m));
    }
    return mats;
}

namespace {

void append_double(std::string& out, double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

double parse_double(const std::string& tok) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw std::runtime_error("feature file: bad number \"" + tok + "\"");
    return v;
}

}  // namespace

void save_features(const std::vector<FeatureMatrix>& mats, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write feature file: " + path.string());
    out << "subsel-features v1\ncolumns";
    for (const char* name : feature_names()) out << ' ' << name;
    out << '\n';
    for (const auto& m : mats) {
        out << "product " << m.rows.size() << ' ' << m.product_id << '\n';
        std::string line;
        for (const auto& row : m.rows) {
            line.clear();
            for (std::size_t j = 0; j < kFeatureCount; ++j) {
                if (j) line.push_back(' ');
                append_double(line, row[j]);
            }
            out << line << '\n';
        }
    }
}

std::vector<FeatureMatrix> load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feature file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "subsel-features v1")
        throw std::runtime_error("feature file: bad header");
    if (!std::getline(in, line) || line.rfind("columns ", 0) != 0)
        throw std::runtime_error("feature file: missing columns line");

    std::vector<FeatureMatrix> mats;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream hs(line);
        std::string tag;
        std::size_t rows = 0;
        hs >> tag >> rows;
        if (tag != "product") throw std::runtime_error("feature file: expected product header");
        std::string id;
        std::getline(hs, id);
        if (!id.empty() && id.front() == ' ') id.erase(0, 1);
        FeatureMatrix m;
        m.product_id = id;
        m.rows.reserve(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            if (!std::getline(in, line))
                throw std::runtime_error("feature file: truncated matrix for " + id);
            std::istringstream rs(line);
            FeatureVector row{};
            std::string tok;
            for (std::size_t j = 0; j < kFeatureCount; ++j) {
                if (!(rs >> tok)) throw std::runtime_error("feature file: short row");
                row[j] = parse_double(tok);
            }
            m.rows.push_back(row);
        }
        mats.push_back(std::move(m));
    }
    return mats;
}

}  // namespace subsel
