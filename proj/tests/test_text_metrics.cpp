#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "subsel/metrics.hpp"
#include "subsel/rng.hpp"
#include "subsel/text.hpp"

using namespace subsel;

TEST_CASE("tokenize basics") {
    CHECK(tokenize("The cat, sat.") == TokenSeq{"the", "cat", "sat"});
    CHECK(tokenize("") == TokenSeq{});
    CHECK(tokenize("Wi-Fi works!!") == TokenSeq{"wi-fi", "works"});
    CHECK(tokenize("   ") == TokenSeq{});
    CHECK(tokenize("...  ---") == TokenSeq{});
    CHECK(tokenize("don't STOP") == TokenSeq{"don't", "stop"});
    // U+00A0 no-break space splits tokens
    CHECK(tokenize("a\xc2\xa0" "b") == TokenSeq{"a", "b"});
    CHECK(tokenize("4.5 stars") == TokenSeq{"4.5", "stars"});
}

TEST_CASE("tokenize is deterministic and never yields empty tokens") {
    Rng rng(11);
    const std::string alphabet = "abZ .,!-\t()'";
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        const int len = static_cast<int>(rng.below(30));
        for (int i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
        const auto a = tokenize(s);
        CHECK(a == tokenize(s));
        for (const auto& t : a) CHECK(!t.empty());
    }
}

TEST_CASE("stemmer flag") {
    TokenizeOptions stem{.stem = true};
    CHECK(tokenize("glasses running jumped", stem) == TokenSeq{"glass", "runn", "jump"});
    CHECK(tokenize("glasses running jumped") == TokenSeq{"glasses", "running", "jumped"});
}

TEST_CASE("rouge_n examples") {
    const TokenSeq same{"a", "b", "c"};
    auto s = rouge_n(same, same, 1);
    CHECK(s.precision == doctest::Approx(1.0));
    CHECK(s.recall == doctest::Approx(1.0));
    CHECK(s.f1 == doctest::Approx(1.0));

    auto disjoint = rouge_n(TokenSeq{"a", "b"}, TokenSeq{"c", "d"}, 1);
    CHECK(disjoint.precision == 0.0);
    CHECK(disjoint.recall == 0.0);
    CHECK(disjoint.f1 == 0.0);

    auto two_thirds = rouge_n(TokenSeq{"the", "cat", "sat"}, TokenSeq{"the", "cat", "ran"}, 1);
    CHECK(two_thirds.precision == doctest::Approx(2.0 / 3.0));
    CHECK(two_thirds.recall == doctest::Approx(2.0 / 3.0));

    CHECK_THROWS_AS(rouge_n(same, same, 0), std::invalid_argument);
}

TEST_CASE("rouge_n clipping credits each reference n-gram at most its multiplicity") {
    // hyp repeats "a" three times, ref has it twice -> overlap clipped to 2
    auto s = rouge_n(TokenSeq{"a", "a", "a"}, TokenSeq{"a", "a", "b"}, 1);
    CHECK(s.precision == doctest::Approx(2.0 / 3.0));
    CHECK(s.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("rouge_l examples") {
    const TokenSeq same{"x", "y", "z"};
    CHECK(rouge_l(same, same).f1 == doctest::Approx(1.0));

    auto s = rouge_l(TokenSeq{"a", "b", "c", "d"}, TokenSeq{"a", "c", "b", "d"});
    CHECK(s.precision == doctest::Approx(0.75));
    CHECK(s.recall == doctest::Approx(0.75));

    CHECK(rouge_l(TokenSeq{}, same).f1 == 0.0);
}

namespace {

TokenSeq random_seq(Rng& rng, std::size_t max_len, int vocab) {
    TokenSeq s;
    const std::size_t len = rng.below(max_len + 1);
    for (std::size_t i = 0; i < len; ++i)
        s.push_back(std::string(1, static_cast<char>('a' + rng.below(vocab))));
    return s;
}

}  // namespace

TEST_CASE("rouge_n matches the position-matching oracle on random sequences") {
    Rng rng(101);
    for (int trial = 0; trial < 3000; ++trial) {
        const auto hyp = random_seq(rng, 10, 4);
        const auto ref = random_seq(rng, 10, 4);
        const int n = 1 + static_cast<int>(rng.below(3));
        const auto s = rouge_n(hyp, ref, n);
        const double overlap = static_cast<double>(oracle::rouge_overlap(hyp, ref, n));
        const double hn = static_cast<double>(oracle::ngram_count(hyp, n));
        const double rn = static_cast<double>(oracle::ngram_count(ref, n));
        CHECK(s.precision == doctest::Approx(hn > 0 ? overlap / hn : 0.0).epsilon(1e-12));
        CHECK(s.recall == doctest::Approx(rn > 0 ? overlap / rn : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("rouge_l matches the memoized-recursion LCS oracle") {
    Rng rng(202);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto a = random_seq(rng, 12, 3);
        const auto b = random_seq(rng, 12, 3);
        CHECK(lcs_length(a, b) == oracle::lcs_memo(a, b));
    }
    // tiny cases against the fully exponential recursion as well
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_seq(rng, 6, 2);
        const auto b = random_seq(rng, 6, 2);
        CHECK(lcs_length(a, b) == oracle::lcs_exponential(a, b));
    }
}

TEST_CASE("rouge properties") {
    Rng rng(303);
    for (int trial = 0; trial < 500; ++trial) {
        const auto a = random_seq(rng, 8, 3);
        const auto b = random_seq(rng, 8, 3);
        const int n = 1 + static_cast<int>(rng.below(2));
        const auto ab = rouge_n(a, b, n);
        const auto ba = rouge_n(b, a, n);
        CHECK(ab.precision == doctest::Approx(ba.recall).epsilon(1e-12));
        CHECK(ab.f1 <= std::max(ab.precision, ab.recall) + 1e-12);
        CHECK(ab.precision >= 0.0);
        CHECK(ab.precision <= 1.0);
        CHECK(ab.recall <= 1.0);
        if (a.size() >= static_cast<std::size_t>(n)) {
            const auto self = rouge_n(a, a, n);
            CHECK(self.f1 == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("segmented rouge blocks cross-segment n-grams") {
    const TokenSeq s1{"a", "b"}, s2{"c", "d"};
    const std::vector<TokenSeq> segs{s1, s2};
    const TokenSeq bridge{"b", "c"};
    // the bigram b-c spans the boundary, so it must not be found
    auto sc = rouge_n(Segments(&bridge, 1), Segments(segs.data(), segs.size()), 2);
    CHECK(sc.precision == 0.0);
    // unigram counts still add across segments
    auto u = rouge_n(Segments(&bridge, 1), Segments(segs.data(), segs.size()), 1);
    CHECK(u.precision == doctest::Approx(1.0));
}

TEST_CASE("aspect scores") {
    auto lex = AspectLexicon::from_phrases({"battery life", "screen", "zoom"});
    CHECK(lex.size() == 3);

    const TokenSeq hyp = tokenize("The battery life is great");
    const TokenSeq ref = tokenize("Solid battery life overall");
    auto [ap, ar] = aspect_scores(hyp, ref, lex);
    CHECK(ap == doctest::Approx(1.0));
    CHECK(ar == doctest::Approx(1.0));

    const TokenSeq none = tokenize("nothing to see here");
    auto [ap0, ar0] = aspect_scores(none, ref, lex);
    CHECK(ap0 == 0.0);
    CHECK(ar0 == 0.0);

    // hyp aspects {screen, battery life}, ref aspects {screen}
    const TokenSeq hyp2 = tokenize("the screen and the battery life");
    const TokenSeq ref2 = tokenize("lovely screen here");
    auto [ap2, ar2] = aspect_scores(hyp2, ref2, lex);
    CHECK(ap2 == doctest::Approx(0.5));
    CHECK(ar2 == doctest::Approx(1.0));

    CHECK_THROWS_AS(aspect_scores(hyp, ref, AspectLexicon{}), std::invalid_argument);
}

TEST_CASE("aspect matching is greedy longest-match left-to-right") {
    auto lex = AspectLexicon::from_phrases({"battery", "battery life"});
    const auto tags = lex.tag(tokenize("battery life was fine"));
    REQUIRE(tags.size() == 1);
    CHECK(tags[0] == "battery life");
}

TEST_CASE("aspect scores are invariant to token order within a sequence") {
    auto lex = AspectLexicon::from_phrases({"screen", "zoom", "lens"});
    const TokenSeq hyp{"screen", "zoom", "filler", "lens"};
    const TokenSeq hyp_shuffled{"lens", "filler", "zoom", "screen"};
    const TokenSeq ref{"zoom", "words", "screen"};
    auto a = aspect_scores(hyp, ref, lex);
    auto b = aspect_scores(hyp_shuffled, ref, lex);
    CHECK(a.first == doctest::Approx(b.first));
    CHECK(a.second == doctest::Approx(b.second));
}

TEST_CASE("aspect density") {
    auto lex = AspectLexicon::from_phrases({"zoom", "lens"});
    const TokenSeq ten{"zoom", "a", "b", "c", "lens", "d", "e", "f", "g", "h"};
    CHECK(aspect_density(ten, lex) == doctest::Approx(0.2));
    CHECK(aspect_density(TokenSeq{"x", "y"}, lex) == 0.0);
    CHECK(aspect_density(TokenSeq{}, lex) == 0.0);
    // hand-tagged fixture: 3 aspect tokens of 6
    const TokenSeq fixture{"zoom", "zoom", "lens", "a", "b", "c"};
    CHECK(aspect_density(fixture, lex) == doctest::Approx(0.5));
}

TEST_CASE("length difference") {
    CHECK(length_difference(10, 10, 50) == doctest::Approx(0.0));
    CHECK(length_difference(50, 25, 100) == doctest::Approx(0.25));
    CHECK_THROWS_AS(length_difference(1, 2, 0), std::invalid_argument);
    Rng rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t a = rng.below(100), b = rng.below(100);
        const std::size_t m = std::max<std::size_t>({a, b, 1});
        CHECK(length_difference(a, b, m) == doctest::Approx(-length_difference(b, a, m)));
        CHECK(std::abs(length_difference(a, b, m)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("lexicon file loading skips comments and duplicates") {
    const auto path = std::filesystem::temp_directory_path() / "subsel_lexicon_test.txt";
    {
        std::ofstream out(path);
        out << "# comment line\nbattery life\nscreen\nscreen\n\nzoom # trailing comment\n";
    }
    auto lex = AspectLexicon::load(path);
    CHECK(lex.size() == 3);
    CHECK(lex.has_unigram("screen"));
    CHECK(lex.has_unigram("zoom"));
    std::filesystem::remove(path);
}
