#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "subsel/corpus.hpp"
#include "subsel/features.hpp"
#include "subsel/prior.hpp"

namespace subsel {

double digamma(double x);

/// Nearest-neighbor mutual information (nats) between a continuous variable
/// and binary labels: the k-th same-class neighbor distance defines a radius,
/// m_i counts all samples strictly inside it, and
/// MI = psi(n) - <psi(n_class)> + psi(k) - <psi(m)>. Duplicate values are
/// de-ticked with hash-seeded jitter of magnitude 1e-10. The raw estimate can
/// be slightly negative.
double mi_discrete_continuous(std::span<const double> x, std::span<const int> y, int k = 3);

struct MIReport {
    struct Row {
        std::string feature;
        int column = 0;
        double mi_raw = 0.0;
        double mi = 0.0;  // clamped at >= 0 for reporting
    };
    std::vector<Row> rows;  // descending MI, ties by column index
    std::size_t samples = 0;
    int k = 3;
};

/// Per-column MI between the feature matrices and the per-review tags.
MIReport rank_features(const std::vector<FeatureMatrix>& features,
                       const std::vector<TaggedProduct>& tags, int k = 3);

std::string format_mi_report(const MIReport& report);

// ---- evaluation harness -----------------------------------------------------

struct SummaryRecord {
    std::string id;
    GoldSummary summary;
};

std::vector<SummaryRecord> load_summaries(const std::filesystem::path& path);
void save_summaries(const std::vector<SummaryRecord>& records,
                    const std::filesystem::path& path);

struct SectionRouge {
    double r1 = 0.0, r2 = 0.0, rl = 0.0;  // mean F1 x100
};

struct EvalTable {
    std::size_t products = 0;
    SectionRouge verdict, pros, cons;
};

/// Section-wise mean ROUGE F1 over aligned prediction/gold pairs; pros and
/// cons are evaluated as concatenated bullet text. Throws when ids mismatch.
EvalTable eval_summaries(const std::vector<SummaryRecord>& predictions,
                         const std::vector<ProductRecord>& gold);
std::string format_eval(const EvalTable& t);

}  // namespace subsel
