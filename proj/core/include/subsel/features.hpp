#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "subsel/corpus.hpp"
#include "subsel/metrics.hpp"

namespace subsel {

inline constexpr std::size_t kFeatureCount = 23;

// One row of scorer inputs for a review in its product context.
using FeatureVector = std::array<double, kFeatureCount>;

// Frozen column order; serialization and reports all use these names.
const std::array<const char*, kFeatureCount>& feature_names();

struct FeatureMatrix {
    std::string product_id;
    std::vector<FeatureVector> rows;  // aligned to review order
};

// Longest sequence among the product's reviews, verdict, and joined
// pros-and-cons; the normalizer for the length-difference features.
std::size_t product_max_len(const ProductRecord& rec);

/// All 23 features of review k against the verdict, the joined pros-and-cons,
/// and the remaining reviews. Cross-segment n-grams are never formed, so the
/// result is invariant to the order of the other reviews.
FeatureVector compute_features(std::size_t k, const ProductRecord& rec, const AspectLexicon& lex);

std::vector<FeatureMatrix> featurize_corpus(const std::vector<ProductRecord>& records,
                                            const AspectLexicon& lex);

// Structured text, bit-exact round trip (shortest round-trip decimal form).
void save_features(const std::vector<FeatureMatrix>& mats, const std::filesystem::path& path);
std::vector<FeatureMatrix> load_features(const std::filesystem::path& path);

}  // namespace subsel
