#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "subsel/corpus.hpp"
#include "subsel/features.hpp"
#include "subsel/metrics.hpp"
#include "subsel/rng.hpp"

using namespace subsel;

namespace {

AspectLexicon demo_lexicon() {
    return AspectLexicon::from_phrases({"zoom", "lens", "battery life", "screen", "grip"});
}

ProductRecord demo_product() {
    ProductRecord rec;
    rec.id = "demo";
    rec.reviews.push_back(make_review("The zoom is sharp and the lens feels solid overall."));
    rec.reviews.push_back(make_review("Battery life is weak but the screen looks great."));
    rec.reviews.push_back(make_review("I mostly use the grip and the zoom every day."));
    rec.summary = make_summary("Great zoom and a solid lens.",
                               {"The zoom is sharp.", "Nice screen for the price."},
                               {"Battery life is weak."});
    return rec;
}

}  // namespace

TEST_CASE("feature order is frozen") {
    const auto& names = feature_names();
    REQUIRE(names.size() == kFeatureCount);
    CHECK(std::string(names[0]) == "R2-R(r,pc)");
    CHECK(std::string(names[1]) == "R1-R(r,pc)");
    CHECK(std::string(names[15]) == "LD(r,pc)");
    CHECK(std::string(names[20]) == "AD(r)");
    CHECK(std::string(names[22]) == "AD(pc)");
}

TEST_CASE("review identical to the verdict gets unit verdict scores") {
    ProductRecord rec = demo_product();
    rec.reviews[0] = make_review(rec.summary.verdict);
    const auto f = compute_features(0, rec, demo_lexicon());
    CHECK(f[3] == doctest::Approx(1.0));   // R1-R(r,v)
    CHECK(f[12] == doctest::Approx(1.0));  // R1-P(r,v)
}

TEST_CASE("duplicated review saturates the other-review precision") {
    ProductRecord rec;
    rec.id = "dup";
    rec.reviews.push_back(make_review("exactly the same words here today"));
    rec.reviews.push_back(make_review("exactly the same words here today"));
    rec.summary = demo_product().summary;
    const auto f = compute_features(0, rec, demo_lexicon());
    CHECK(f[18] == doctest::Approx(1.0));  // R1-P(r,r-k)
}

TEST_CASE("every entry matches a straight-line recomputation from the metric primitives") {
    const auto rec = demo_product();
    const auto lex = demo_lexicon();
    for (std::size_t k = 0; k < rec.reviews.size(); ++k) {
        const auto f = compute_features(k, rec, lex);

        const TokenSeq& r = rec.reviews[k].tokens;
        const std::vector<TokenSeq> v{rec.summary.verdict_tokens};
        const auto pc = rec.summary.pc_segments();
        std::vector<TokenSeq> others;
        for (std::size_t i = 0; i < rec.reviews.size(); ++i)
            if (i != k) others.push_back(rec.reviews[i].tokens);
        const Segments rs(&r, 1);

        const auto r1v = rouge_n(rs, Segments(v.data(), v.size()), 1);
        const auto r2v = rouge_n(rs, Segments(v.data(), v.size()), 2);
        const auto r1pc = rouge_n(rs, Segments(pc.data(), pc.size()), 1);
        const auto r2pc = rouge_n(rs, Segments(pc.data(), pc.size()), 2);
        const auto r1o = rouge_n(rs, Segments(others.data(), others.size()), 1);
        const auto r2o = rouge_n(rs, Segments(others.data(), others.size()), 2);
        const auto [ap_v, ar_v] = aspect_scores(rs, Segments(v.data(), v.size()), lex);
        const auto [ap_pc, ar_pc] = aspect_scores(rs, Segments(pc.data(), pc.size()), lex);
        const auto [ap_o, ar_o] = aspect_scores(rs, Segments(others.data(), others.size()), lex);

        std::size_t pc_len = 0;
        for (const auto& seg : pc) pc_len += seg.size();
        const std::size_t mx = product_max_len(rec);

        CHECK(f[0] == doctest::Approx(r2pc.recall));
        CHECK(f[1] == doctest::Approx(r1pc.recall));
        CHECK(f[2] == doctest::Approx(r2pc.precision));
        CHECK(f[3] == doctest::Approx(r1v.recall));
        CHECK(f[4] == doctest::Approx(r2v.recall));
        CHECK(f[5] == doctest::Approx(r2o.precision));
        CHECK(f[6] == doctest::Approx(r2v.precision));
        CHECK(f[7] == doctest::Approx(ar_pc));
        CHECK(f[8] == doctest::Approx(r1o.recall));
        CHECK(f[9] == doctest::Approx(ap_pc));
        CHECK(f[10] == doctest::Approx(r2o.recall));
        CHECK(f[11] == doctest::Approx(r1pc.precision));
        CHECK(f[12] == doctest::Approx(r1v.precision));
        CHECK(f[13] == doctest::Approx(ap_o));
        CHECK(f[14] == doctest::Approx(ar_o));
        CHECK(f[15] == doctest::Approx(length_difference(r.size(), pc_len, mx)));
        CHECK(f[16] == doctest::Approx(ap_v));
        CHECK(f[17] == doctest::Approx(length_difference(r.size(), v[0].size(), mx)));
        CHECK(f[18] == doctest::Approx(r1o.precision));
        CHECK(f[19] == doctest::Approx(ar_v));
        CHECK(f[20] == doctest::Approx(aspect_density(r, lex)));
        CHECK(f[21] == doctest::Approx(aspect_density(v[0], lex)));
        CHECK(f[22] == doctest::Approx(aspect_density(Segments(pc.data(), pc.size()), lex)));
    }
}

TEST_CASE("feature ranges hold") {
    const auto rec = demo_product();
    const auto lex = demo_lexicon();
    for (std::size_t k = 0; k < rec.reviews.size(); ++k) {
        const auto f = compute_features(k, rec, lex);
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            CHECK(std::isfinite(f[j]));
            if (j == 15 || j == 17) {
                CHECK(f[j] >= -1.0);
                CHECK(f[j] <= 1.0);
            } else {
                CHECK(f[j] >= 0.0);
                CHECK(f[j] <= 1.0);
            }
        }
    }
    CHECK_THROWS_AS(compute_features(99, rec, lex), std::out_of_range);
}

TEST_CASE("features are invariant to the order of the other reviews") {
    ProductRecord rec = demo_product();
    rec.reviews.push_back(make_review("One extra review about the screen quality."));
    const auto lex = demo_lexicon();
    const auto before = compute_features(0, rec, lex);
    // permute every review except index 0
    std::swap(rec.reviews[1], rec.reviews[3]);
    std::swap(rec.reviews[2], rec.reviews[3]);
    const auto after = compute_features(0, rec, lex);
    for (std::size_t j = 0; j < kFeatureCount; ++j)
        CHECK(before[j] == doctest::Approx(after[j]).epsilon(1e-15));
}

TEST_CASE("single-token reviews stay finite") {
    ProductRecord rec = demo_product();
    rec.reviews.push_back(make_review("zoom"));
    const auto f = compute_features(rec.reviews.size() - 1, rec, demo_lexicon());
    for (double v : f) CHECK(std::isfinite(v));
}

TEST_CASE("featurize_corpus shapes and the per-product LD normalizer") {
    const auto lex = demo_lexicon();
    CHECK(featurize_corpus({}, lex).empty());

    const auto rec = demo_product();
    const auto mats = featurize_corpus({rec}, lex);
    REQUIRE(mats.size() == 1);
    CHECK(mats[0].product_id == "demo");
    CHECK(mats[0].rows.size() == rec.reviews.size());

    // recompute the normalizer: max over reviews, verdict, and joined pc
    std::size_t expect = rec.summary.verdict_tokens.size();
    std::size_t pc_len = 0;
    for (const auto& b : rec.summary.pc_segments()) pc_len += b.size();
    expect = std::max(expect, pc_len);
    for (const auto& r : rec.reviews) expect = std::max(expect, r.word_count);
    CHECK(product_max_len(rec) == expect);
}

TEST_CASE("feature files round-trip bit-exactly") {
    const auto rec = demo_product();
    auto mats = featurize_corpus({rec}, demo_lexicon());
    mats[0].rows[0][15] = -0.12345678901234567;  // exercise a negative, non-terminating value
    const auto path = std::filesystem::temp_directory_path() / "subsel_features_test.txt";
    save_features(mats, path);
    const auto loaded = load_features(path);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].product_id == "demo");
    REQUIRE(loaded[0].rows.size() == mats[0].rows.size());
    for (std::size_t i = 0; i < mats[0].rows.size(); ++i)
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            CHECK(loaded[0].rows[i][j] == mats[0].rows[i][j]);  // exact
    std::filesystem::remove(path);
}
