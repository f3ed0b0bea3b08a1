#include "subsel/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "subsel/metrics.hpp"

namespace subsel {

double digamma(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("digamma: x must be positive");
    double result = 0.0;
    while (x < 10.0) {  // recurrence lift, then asymptotic series
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv;
    result -= inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
    return result;
}

namespace {

double hash_unit(std::size_t i, double v) {
    std::uint64_t z = std::bit_cast<std::uint64_t>(v) ^ (0x9e3779b97f4a7c15ULL * (i + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

// k-th smallest |vals[j] - vals[pos]| within the sorted class array, self excluded
double kth_neighbor_distance(const std::vector<double>& vals, std::size_t pos, int k) {
    std::size_t lo = pos, hi = pos;
    double d = 0.0;
    for (int step = 0; step < k; ++step) {
        const double dl = lo > 0 ? vals[pos] - vals[lo - 1]
                                 : std::numeric_limits<double>::infinity();
        const double dr = hi + 1 < vals.size() ? vals[hi + 1] - vals[pos]
                                               : std::numeric_limits<double>::infinity();
        if (dl <= dr) {
            --lo;
            d = dl;
        } else {
            ++hi;
            d = dr;
        }
    }
    return d;
}

}  // namespace

double mi_discrete_continuous(std::span<const double> x, std::span<const int> y, int k) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("mi: x and y must be aligned");
    if (k < 1) throw std::invalid_argument("mi: k must be >= 1");
    if (n < 2 * static_cast<std::size_t>(k)) throw std::invalid_argument("mi: too few samples");

    std::vector<double> jittered(n);
    for (std::size_t i = 0; i < n; ++i)
        jittered[i] = x[i] + 1e-10 * (2.0 * hash_unit(i, x[i]) - 1.0);

    std::vector<std::size_t> class_count;
    std::vector<int> class_of(n);
    std::unordered_map<int, int> class_id;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = class_id.try_emplace(y[i], static_cast<int>(class_count.size()));
        if (inserted) class_count.push_back(0);
        class_of[i] = it->second;
        ++class_count[it->second];
    }
    if (class_count.size() < 2) throw std::invalid_argument("mi: labels contain a single class");
    for (std::size_t c : class_count)
        if (c < static_cast<std::size_t>(k) + 1)
            throw std::invalid_argument("mi: a class has fewer than k+1 samples");

    std::vector<double> all_sorted = jittered;
    std::sort(all_sorted.begin(), all_sorted.end());

    std::vector<std::vector<double>> class_sorted(class_count.size());
    for (std::size_t c = 0; c < class_count.size(); ++c) class_sorted[c].reserve(class_count[c]);
    for (std::size_t i = 0; i < n; ++i) class_sorted[class_of[i]].push_back(jittered[i]);
    for (auto& v : class_sorted) std::sort(v.begin(), v.end());

    double mean_psi_class = 0.0, mean_psi_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& cls = class_sorted[class_of[i]];
        const std::size_t pos =
            static_cast<std::size_t>(std::lower_bound(cls.begin(), cls.end(), jittered[i]) -
                                     cls.begin());
        const double d = kth_neighbor_distance(cls, pos, k);
        // strictly inside the k-th neighbor radius, the point itself included;
        // the window edges are refined with exact distance comparisons because
        // x +- radius rounds away the one-ulp shrink
        const double radius = std::nextafter(d, 0.0);
        const double xi = jittered[i];
        auto lo = std::lower_bound(all_sorted.begin(), all_sorted.end(), xi - radius);
        while (lo != all_sorted.begin() && xi - *(lo - 1) <= radius) --lo;
        while (lo != all_sorted.end() && xi - *lo > radius) ++lo;
        auto hi = std::upper_bound(all_sorted.begin(), all_sorted.end(), xi + radius);
        while (hi != all_sorted.end() && *hi - xi <= radius) ++hi;
        while (hi != lo && *(hi - 1) - xi > radius) --hi;
        const double m = static_cast<double>(hi - lo);
        mean_psi_m += digamma(std::max(m, 1.0));
        mean_psi_class += digamma(static_cast<double>(class_count[class_of[i]]));
    }
    mean_psi_m /= n;
    mean_psi_class /= n;
    return digamma(static_cast<double>(n)) - mean_psi_class + digamma(static_cast<double>(k)) -
           mean_psi_m;
}

MIReport rank_features(const std::vector<FeatureMatrix>& features,
                       const std::vector<TaggedProduct>& tags, int k) {
    if (features.size() != tags.size())
        throw std::invalid_argument("rank_features: features/tags misaligned");
    std::vector<int> labels;
    for (std::size_t p = 0; p < features.size(); ++p) {
        if (features[p].rows.size() != tags[p].tags.size() ||
            features[p].product_id != tags[p].product_id)
            throw std::invalid_argument("rank_features: row/tag mismatch for product " +
                                        features[p].product_id);
        labels.insert(labels.end(), tags[p].tags.begin(), tags[p].tags.end());
    }

    MIReport report;
    report.samples = labels.size();
    report.k = k;
    std::vector<double> column(labels.size());
    for (std::size_t col = 0; col < kFeatureCount; ++col) {
        std::size_t at = 0;
        for (const auto& m : features)
            for (const auto& row : m.rows) column[at++] = row[col];
        MIReport::Row r;
        r.feature = feature_names()[col];
        r.column = static_cast<int>(col);
        r.mi_raw = mi_discrete_continuous(column, labels, k);
        r.mi = std::max(0.0, r.mi_raw);
        report.rows.push_back(std::move(r));
    }
    std::stable_sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
        if (a.mi != b.mi) return a.mi > b.mi;
        return a.column < b.column;
    });
    return report;
}

std::string format_mi_report(const MIReport& report) {
    std::ostringstream os;
    os << "feature            mi\n";
    char buf[64];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%-18s %.4f\n", r.feature.c_str(), r.mi);
        os << buf;
    }
    os << "samples " << report.samples << "  k " << report.k << '\n';
    return os.str();
}

std::vector<SummaryRecord> load_summaries(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CorpusError("cannot open summary file: " + path.string());
    std::vector<SummaryRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw CorpusError("not valid JSON", line_no);
        SummaryRecord rec;
        rec.id = obj.at("id").get<std::string>();
        const auto& s = obj.at("summary");
        rec.summary = make_summary(s.at("verdict").get<std::string>(),
                                   s.at("pros").get<std::vector<std::string>>(),
                                   s.at("cons").get<std::vector<std::string>>());
        out.push_back(std::move(rec));
    }
    return out;
}

void save_summaries(const std::vector<SummaryRecord>& records,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw CorpusError("cannot write summary file: " + path.string());
    for (const auto& rec : records) {
        nlohmann::json obj;
        obj["id"] = rec.id;
        obj["summary"] = {{"verdict", rec.summary.verdict},
                          {"pros", rec.summary.pros},
                          {"cons", rec.summary.cons}};
        out << obj.dump() << '\n';
    }
}

namespace {

TokenSeq concat_bullets(const std::vector<TokenSeq>& bullets) {
    TokenSeq all;
    for (const auto& b : bullets) all.insert(all.end(), b.begin(), b.end());
    return all;
}

void accumulate_section(const TokenSeq& pred, const TokenSeq& gold, SectionRouge& acc) {
    acc.r1 += 100.0 * rouge_n(pred, gold, 1).f1;
    acc.r2 += 100.0 * rouge_n(pred, gold, 2).f1;
    acc.rl += 100.0 * rouge_l(pred, gold).f1;
}

}  // namespace

EvalTable eval_summaries(const std::vector<SummaryRecord>& predictions,
                         const std::vector<ProductRecord>& gold) {
    std::unordered_map<std::string, const ProductRecord*> by_id;
    for (const auto& g : gold) by_id[g.id] = &g;
    if (predictions.size() != gold.size())
        throw std::invalid_argument("eval_summaries: prediction/gold count mismatch");

    EvalTable t;
    t.products = predictions.size();
    for (const auto& pred : predictions) {
        auto it = by_id.find(pred.id);
        if (it == by_id.end())
            throw std::invalid_argument("eval_summaries: no gold summary for id " + pred.id);
        const GoldSummary& g = it->second->summary;
        accumulate_section(pred.summary.verdict_tokens, g.verdict_tokens, t.verdict);
        accumulate_section(concat_bullets(pred.summary.pros_tokens),
                           concat_bullets(g.pros_tokens), t.pros);
        accumulate_section(concat_bullets(pred.summary.cons_tokens),
                           concat_bullets(g.cons_tokens), t.cons);
    }
    for (SectionRouge* s : {&t.verdict, &t.pros, &t.cons}) {
        s->r1 /= t.products;
        s->r2 /= t.products;
        s->rl /= t.products;
    }
    return t;
}

std::string format_eval(const EvalTable& t) {
    std::ostringstream os;
    os << "section  r1       r2       rl\n";
    char buf[96];
    auto row = [&](const char* name, const SectionRouge& s) {
        std::snprintf(buf, sizeof(buf), "%-8s %-8.2f %-8.2f %-8.2f\n", name, s.r1, s.r2, s.rl);
        os << buf;
    };
    row("verdict", t.verdict);
    row("pros", t.pros);
    row("cons", t.cons);
    os << "products " << t.products << '\n';
    return os.str();
}

}  // namespace subsel
