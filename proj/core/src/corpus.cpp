#include "subsel/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "subsel/metrics.hpp"

namespace subsel {

using nlohmann::json;

std::vector<TokenSeq> GoldSummary::pc_segments() const {
    std::vector<TokenSeq> segs;
    segs.reserve(pros_tokens.size() + cons_tokens.size());
    segs.insert(segs.end(), pros_tokens.begin(), pros_tokens.end());
    segs.insert(segs.end(), cons_tokens.begin(), cons_tokens.end());
    return segs;
}

std::size_t GoldSummary::total_words() const {
    std::size_t n = verdict_tokens.size();
    for (const auto& b : pros_tokens) n += b.size();
    for (const auto& b : cons_tokens) n += b.size();
    return n;
}

bool GoldSummary::complete() const {
    auto any_tokens = [](const std::vector<TokenSeq>& bullets) {
        for (const auto& b : bullets)
            if (!b.empty()) return true;
        return false;
    };
    return !verdict_tokens.empty() && any_tokens(pros_tokens) && any_tokens(cons_tokens);
}

std::vector<TokenSeq> ProductRecord::review_segments() const {
    std::vector<TokenSeq> segs;
    segs.reserve(reviews.size());
    for (const auto& r : reviews) segs.push_back(r.tokens);
    return segs;
}

void FilterRules::validate() const {
    if (min_review_words <= 0 || max_review_words <= 0 || min_reviews_per_product <= 0 ||
        min_summary_words <= 0 || n_max <= 0)
        throw std::invalid_argument("FilterRules: all values must be positive");
    if (min_review_words >= max_review_words)
        throw std::invalid_argument("FilterRules: min_review_words must be < max_review_words");
}

bool FilterReport::reconciles() const {
    return products_in == products_kept + products_dropped_few_reviews +
                              products_dropped_bad_summary &&
           reviews_in == reviews_kept + reviews_dropped_length + reviews_dropped_with_product +
                             reviews_truncated;
}

std::string FilterReport::to_text() const {
    std::ostringstream os;
    os << "products_in " << products_in << '\n'
       << "products_kept " << products_kept << '\n'
       << "products_dropped_few_reviews " << products_dropped_few_reviews << '\n'
       << "products_dropped_bad_summary " << products_dropped_bad_summary << '\n'
       << "products_truncated " << products_truncated << '\n'
       << "reviews_in " << reviews_in << '\n'
       << "reviews_kept " << reviews_kept << '\n'
       << "reviews_dropped_length " << reviews_dropped_length << '\n'
       << "reviews_dropped_with_product " << reviews_dropped_with_product << '\n'
       << "reviews_truncated " << reviews_truncated << '\n';
    return os.str();
}

Review make_review(std::string text) {
    Review r;
    r.text = std::move(text);
    r.tokens = tokenize(r.text);
    r.word_count = r.tokens.size();
    return r;
}

GoldSummary make_summary(std::string verdict, std::vector<std::string> pros,
                         std::vector<std::string> cons) {
    GoldSummary s;
    s.verdict = std::move(verdict);
    s.pros = std::move(pros);
    s.cons = std::move(cons);
    s.verdict_tokens = tokenize(s.verdict);
    for (const auto& p : s.pros) s.pros_tokens.push_back(tokenize(p));
    for (const auto& c : s.cons) s.cons_tokens.push_back(tokenize(c));
    return s;
}

namespace {

const json& require_field(const json& obj, const char* name, std::size_t line_no) {
    auto it = obj.find(name);
    if (it == obj.end())
        throw CorpusError(std::string("missing field \"") + name + "\"", line_no);
    return *it;
}

std::string require_string(const json& obj, const char* name, std::size_t line_no) {
    const json& v = require_field(obj, name, line_no);
    if (!v.is_string())
        throw CorpusError(std::string("field \"") + name + "\" must be a string", line_no);
    return v.get<std::string>();
}

std::vector<std::string> require_string_array(const json& obj, const char* name,
                                              std::size_t line_no) {
    const json& v = require_field(obj, name, line_no);
    if (!v.is_array())
        throw CorpusError(std::string("field \"") + name + "\" must be an array", line_no);
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string())
            throw CorpusError(std::string("field \"") + name + "\" must contain strings", line_no);
        out.push_back(e.get<std::string>());
    }
    return out;
}

}  // namespace

ProductRecord parse_product_line(const std::string& line, std::size_t line_no) {
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw CorpusError("not valid JSON", line_no);
    if (!obj.is_object()) throw CorpusError("expected a JSON object", line_no);

    ProductRecord rec;
    rec.id = require_string(obj, "id", line_no);

    const json& reviews = require_field(obj, "reviews", line_no);
    if (!reviews.is_array()) throw CorpusError("field \"reviews\" must be an array", line_no);
    for (const auto& r : reviews) {
        if (!r.is_object()) throw CorpusError("review entries must be objects", line_no);
        rec.reviews.push_back(make_review(require_string(r, "text", line_no)));
    }

    const json& summary = require_field(obj, "summary", line_no);
    if (!summary.is_object()) throw CorpusError("field \"summary\" must be an object", line_no);
    rec.summary = make_summary(require_string(summary, "verdict", line_no),
                               require_string_array(summary, "pros", line_no),
                               require_string_array(summary, "cons", line_no));
    return rec;
}

std::vector<ProductRecord> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open corpus file: " + path.string());
    std::vector<ProductRecord> records;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ProductRecord rec = parse_product_line(line, line_no);
        if (!ids.insert(rec.id).second)
            throw CorpusError("duplicate product id \"" + rec.id + "\"", line_no);
        records.push_back(std::move(rec));
    }
    return records;
}

std::string product_to_json_line(const ProductRecord& rec) {
    json obj;
    obj["id"] = rec.id;
    json reviews = json::array();
    for (const auto& r : rec.reviews) reviews.push_back({{"text", r.text}});
    obj["reviews"] = std::move(reviews);
    obj["summary"] = {{"verdict", rec.summary.verdict},
                      {"pros", rec.summary.pros},
                      {"cons", rec.summary.cons}};
    return obj.dump();
}

void save_corpus(const std::vector<ProductRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw CorpusError("cannot write corpus file: " + path.string());
    for (const auto& rec : records) out << product_to_json_line(rec) << '\n';
}

std::pair<std::vector<ProductRecord>, FilterReport> apply_filters(
    const std::vector<ProductRecord>& records, const FilterRules& rules) {
    rules.validate();
    FilterReport report;
    report.products_in = records.size();
    std::vector<ProductRecord> kept;

    for (const auto& rec : records) {
        report.reviews_in += rec.reviews.size();

        ProductRecord out;
        out.id = rec.id;
        out.summary = rec.summary;
        for (const auto& r : rec.reviews) {
            if (r.word_count < static_cast<std::size_t>(rules.min_review_words) ||
                r.word_count > static_cast<std::size_t>(rules.max_review_words)) {
                ++report.reviews_dropped_length;
            } else {
                out.reviews.push_back(r);
            }
        }

        const bool summary_ok =
            rec.summary.complete() &&
            rec.summary.total_words() >= static_cast<std::size_t>(rules.min_summary_words);
        if (!summary_ok) {
            ++report.products_dropped_bad_summary;
            report.reviews_dropped_with_product += out.reviews.size();
            continue;
        }
        if (out.reviews.size() < static_cast<std::size_t>(rules.min_reviews_per_product)) {
            ++report.products_dropped_few_reviews;
            report.reviews_dropped_with_product += out.reviews.size();
            continue;
        }
        if (out.reviews.size() > static_cast<std::size_t>(rules.n_max)) {
            report.reviews_truncated += out.reviews.size() - rules.n_max;
            out.reviews.resize(rules.n_max);  // first n_max in file order
            ++report.products_truncated;
        }
        report.reviews_kept += out.reviews.size();
        ++report.products_kept;
        kept.push_back(std::move(out));
    }
    return {std::move(kept), report};
}

StatsTable corpus_stats(const std::vector<ProductRecord>& records) {
    if (records.empty()) throw CorpusError("corpus_stats: empty corpus");
    StatsTable t;
    t.products = records.size();
    auto section = [](const std::vector<TokenSeq>& section_segs,
                      const std::vector<TokenSeq>& review_segs, SectionStats& acc) {
        std::size_t words = 0;
        for (const auto& s : section_segs) words += s.size();
        acc.mean_words += static_cast<double>(words);
        // coverage: share of the section's n-grams found in the reviews
        acc.rouge1 += 100.0 * rouge_n(review_segs, section_segs, 1).recall;
        acc.rouge2 += 100.0 * rouge_n(review_segs, section_segs, 2).recall;
    };
    for (const auto& rec : records) {
        const auto reviews = rec.review_segments();
        std::vector<TokenSeq> verdict{rec.summary.verdict_tokens};
        section(verdict, reviews, t.verdict);
        section(rec.summary.pros_tokens, reviews, t.pros);
        section(rec.summary.cons_tokens, reviews, t.cons);
    }
    for (SectionStats* s : {&t.verdict, &t.pros, &t.cons}) {
        s->mean_words /= t.products;
        s->rouge1 /= t.products;
        s->rouge2 /= t.products;
    }
    return t;
}

std::string format_stats(const StatsTable& t) {
    char buf[128];
    std::ostringstream os;
    os << "section  len      r1       r2\n";
    auto row = [&](const char* name, const SectionStats& s) {
        std::snprintf(buf, sizeof(buf), "%-8s %-8.2f %-8.2f %-8.2f\n", name, s.mean_words,
                      s.rouge1, s.rouge2);
        os << buf;
    };
    row("verdict", t.verdict);
    row("pros", t.pros);
    row("cons", t.cons);
    os << "products " << t.products << '\n';
    return os.str();
}

}  // namespace subsel
