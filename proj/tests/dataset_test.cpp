#include <doctest.h>

#include <algorithm>
#include <set>

#include "translit/dataset.hpp"
#include "translit/error.hpp"
#include "translit/rng.hpp"

using namespace translit;

TEST_CASE("parse_pairs basic tsv") {
    PairList p = parse_pairs("jens\tjɛns\nkyoto\tきょうと\n");
    REQUIRE(p.size() == 2);
    CHECK(p[0].source == U"jens");
    CHECK(p[0].target == U"jɛns");
    CHECK(p[1].target == U"きょうと");
}

TEST_CASE("parse_pairs tolerates missing final newline and CRLF") {
    PairList p = parse_pairs("a\tb\r\nc\td");
    REQUIRE(p.size() == 2);
    CHECK(p[0].target == U"b");
    CHECK(p[1] == TransliterationPair{U"c", U"d"});
}

TEST_CASE("parse_pairs skips blank lines") {
    CHECK(parse_pairs("a\tb\n\n\nc\td\n").size() == 2);
}

TEST_CASE("parse_pairs reports the offending line") {
    CHECK_THROWS_WITH_AS(parse_pairs("a\tb\nno-tab-here\n"), doctest::Contains("line 2"),
                         ParseError);
    CHECK_THROWS_AS(parse_pairs("a\tb\tc\n"), ParseError);
    CHECK_THROWS_AS(parse_pairs("\tb\n"), ParseError);
    CHECK_THROWS_AS(parse_pairs("a\t\n"), ParseError);
}

TEST_CASE("parse_pairs rejects malformed utf8") {
    CHECK_THROWS_AS(parse_pairs("a\t\x80\n"), EncodingError);
}

TEST_CASE("load_pairs missing file") {
    CHECK_THROWS_AS(load_pairs("/nonexistent/pairs.tsv"), IoError);
}

TEST_CASE("vocabulary reserved ids and first-appearance order") {
    PairList p = parse_pairs("cab\tx\nbad\ty\n");
    std::vector<std::u32string> sources;
    for (const auto &pr : p) sources.push_back(pr.source);
    CodepointVocabulary v = build_vocab(sources);
    CHECK(v.content_size() == 4); // c a b d
    CHECK(v.total_size() == 8);
    CHECK(v.id_of(U'c') == 4);
    CHECK(v.id_of(U'a') == 5);
    CHECK(v.id_of(U'b') == 6);
    CHECK(v.id_of(U'd') == 7);
}

TEST_CASE("vocabulary round trip and oov") {
    CodepointVocabulary v({U'k', U'よ'});
    std::u32string s = U"よk";
    CHECK(v.decode(v.encode(s)) == s);
    CHECK_FALSE(v.contains(U'z'));
    CHECK_THROWS_WITH_AS(v.id_of(U'z'), doctest::Contains("U+007A"), VocabularyError);
    CHECK_THROWS_AS(v.encode(U"kz"), VocabularyError);
}

TEST_CASE("normalize_english lowercases and strips diacritics") {
    CHECK(normalize_english(U"Jens") == U"jens");
    CHECK(normalize_english(U"Müller") == U"muller");
    CHECK(normalize_english(U"café") == U"cafe");
    CHECK(normalize_english(U"naïve") == U"naive");
    CHECK(normalize_english(U"Ångström") == U"angstrom");
}

TEST_CASE("normalize_english preserves undecomposable letters") {
    CHECK(normalize_english(U"straße") == U"straße");
    CHECK(normalize_english(U"søren") == U"søren");
    CHECK(normalize_english(U"łukasz") == U"łukasz");
}

TEST_CASE("normalize_english is idempotent") {
    for (std::u32string s : {U"Jens", U"Müller", U"straße", U"ŁÓDŹ", U"ﬁxed"}) {
        std::u32string once = normalize_english(s);
        CHECK(normalize_english(once) == once);
    }
}

TEST_CASE("normalize_pairs touches only the requested side") {
    PairList p = {{U"Ö", U"Ö"}};
    PairList src = normalize_pairs(p, NormalizeSide::Source);
    CHECK(src[0].source == U"o");
    CHECK(src[0].target == U"Ö");
    PairList tgt = normalize_pairs(p, NormalizeSide::Target);
    CHECK(tgt[0].source == U"Ö");
    CHECK(tgt[0].target == U"o");
    CHECK(normalize_pairs(p, NormalizeSide::None) == p);
}

TEST_CASE("normalize_side_from_name") {
    CHECK(normalize_side_from_name("none") == NormalizeSide::None);
    CHECK(normalize_side_from_name("source") == NormalizeSide::Source);
    CHECK(normalize_side_from_name("target") == NormalizeSide::Target);
    CHECK_THROWS_AS(normalize_side_from_name("both"), ArgumentError);
}

namespace {

PairList numbered_pairs(size_t n) {
    PairList p;
    for (size_t i = 0; i < n; ++i) {
        std::u32string s;
        for (size_t v = i;; v /= 10) {
            s.insert(s.begin(), static_cast<char32_t>(U'0' + v % 10));
            if (v < 10) break;
        }
        p.push_back({s, s});
    }
    return p;
}

} // namespace

TEST_CASE("split sizes follow the 10 percent rule") {
    CorpusSplits s = split(numbered_pairs(105), 1);
    CHECK(s.test.size() == 10);  // floor(105/10)
    CHECK(s.eval.size() == 9);   // floor(95/10)
    CHECK(s.train.size() == 86);
}

TEST_CASE("split is a deterministic partition") {
    PairList pairs = numbered_pairs(50);
    CorpusSplits a = split(pairs, 9), b = split(pairs, 9);
    CHECK(a.train == b.train);
    CHECK(a.eval == b.eval);
    CHECK(a.test == b.test);
    std::multiset<std::u32string> seen;
    for (const auto &part : {a.train, a.eval, a.test})
        for (const auto &pr : part) seen.insert(pr.source);
    CHECK(seen.size() == 50);
    std::multiset<std::u32string> want;
    for (const auto &pr : pairs) want.insert(pr.source);
    CHECK(seen == want);
    // a different seed shuffles differently
    CorpusSplits c = split(pairs, 10);
    CHECK(a.test != c.test);
}

TEST_CASE("split rejects tiny corpora") {
    CHECK_THROWS_AS(split(numbered_pairs(9), 0), ArgumentError);
    CHECK_NOTHROW(split(numbered_pairs(10), 0));
}

TEST_CASE("stats on a hand-checked corpus") {
    PairList p = parse_pairs("ab\txyz\ncd\tx\n");
    DatasetStats st = stats(p);
    CHECK(st.pairs == 2);
    CHECK(st.avg_input_length == doctest::Approx(2.0));
    CHECK(st.avg_output_length == doctest::Approx(2.0));
    CHECK(st.source_vocab_size == 4);
    CHECK(st.target_vocab_size == 3);
}

TEST_CASE("stats counts codepoints not bytes") {
    DatasetStats st = stats(parse_pairs("きょうと\tkyoto\n"));
    CHECK(st.avg_input_length == doctest::Approx(4.0));
    CHECK(st.avg_output_length == doctest::Approx(5.0));
}
