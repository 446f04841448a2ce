#include <doctest.h>

#include <random>

#include "confidant/error.hpp"
#include "confidant/metrics.hpp"
#include "test_helpers.hpp"

using namespace confidant;
using namespace confidant::metrics;

TEST_CASE("reading ease of hand-checked fixtures") {
    const auto cat = flesch_reading_ease("The cat sat.");
    CHECK(cat.raw == doctest::Approx(119.19).epsilon(1e-12));
    CHECK(cat.norm == doctest::Approx(1.1919).epsilon(1e-12));
    const auto go = flesch_reading_ease("Go. Go. Go.");
    CHECK(go.raw == doctest::Approx(121.22).epsilon(1e-12));

    const auto s = text_statistics("Go. Go. Go.");
    CHECK(s.words == 3);
    CHECK(s.sentences == 3);
    CHECK(s.syllables == 3);
}

TEST_CASE("tokenization rules") {
    CHECK(text_statistics("Hello world").sentences == 1);  // trailing fragment
    CHECK(text_statistics("Wait... what?! Fine").sentences == 3);
    CHECK(text_statistics("It costs 3.50 today.").sentences == 1);
    CHECK(text_statistics("\"Hi,\" she said -- twice.").words == 4);
    CHECK(text_statistics("").words == 0);
    CHECK_THROWS_CODE(flesch_reading_ease(""), ErrorCode::NoWords);
    CHECK_THROWS_CODE(flesch_reading_ease("... !!!"), ErrorCode::NoWords);
}

TEST_CASE("syllable heuristic") {
    CHECK(count_syllables("cat") == 1);
    CHECK(count_syllables("make") == 1);
    CHECK(count_syllables("table") == 2);
    CHECK(count_syllables("little") == 2);
    CHECK(count_syllables("the") == 1);
    CHECK(count_syllables("beautiful") == 3);
    CHECK(count_syllables("rhythm") == 1);
    CHECK(count_syllables("psychotherapy") == 5);
    CHECK(count_syllables("") == 1);
    CHECK(count_syllables("Happy") == 2);
}

TEST_CASE("property: one extra monosyllable shifts the score as the formula predicts") {
    const std::vector<std::string> words = {"sleep", "worry", "family", "tomorrow", "anxious", "talk",
                                            "therapy", "feel", "beautiful", "little", "work", "I"};
    std::mt19937_64 rng(11);
    for (int round = 0; round < 50; ++round) {
        std::string text;
        const int sentences = 1 + static_cast<int>(rng() % 4);
        for (int s = 0; s < sentences; ++s) {
            const int n = 1 + static_cast<int>(rng() % 8);
            for (int i = 0; i < n; ++i) text += (i ? " " : (s ? " " : "")) + words[rng() % words.size()];
            text += ".";
        }
        const auto base = text_statistics(text);
        std::string longer = text;
        longer.insert(longer.size() - 1, " cat");
        const double w = static_cast<double>(base.words);
        const double ss = static_cast<double>(base.sentences);
        const double y = static_cast<double>(base.syllables);
        const double predicted = -1.015 * ((w + 1) / ss - w / ss) - 84.6 * ((y + 1) / (w + 1) - y / w);
        const double delta = flesch_reading_ease(longer).raw - flesch_reading_ease(text).raw;
        CHECK(delta == doctest::Approx(predicted).epsilon(1e-9));
    }
}

TEST_CASE("sentiment averages matched tokens") {
    const auto lex = SentimentLexicon::parse("# t\tp\ts\ngood\t0.5\t0.4\nawful\t-1\t1\n");
    CHECK(lex.size() == 2);
    const auto s = sentiment("Good day, awful night, GOOD food", lex);
    CHECK(s.polarity == doctest::Approx((0.5 - 1 + 0.5) / 3));
    CHECK(s.subjectivity == doctest::Approx(1.8 / 3));
    const auto none = sentiment("nothing matches", lex);
    CHECK(none.polarity == 0.0);
    CHECK(none.subjectivity == 0.0);
    CHECK_THROWS_CODE(SentimentLexicon::parse("good 0.5 0.4\n"), ErrorCode::ParseError);
    CHECK_THROWS_CODE(SentimentLexicon::parse("good\tx\t0.4\n"), ErrorCode::ParseError);
}

TEST_CASE("shipped sentiment lexicon") {
    const auto lex = SentimentLexicon::load(testing::data_file("sentiment_lexicon.tsv"));
    CHECK(sentiment("I am happy", lex).polarity > 0.0);
    CHECK(sentiment("this is terrible and sad", lex).polarity < 0.0);
}

TEST_CASE("relevance") {
    const embedding::HashingEmbedder e;
    CHECK(relevance("I cannot sleep at night", "I cannot sleep at night", e) == doctest::Approx(1.0));
    CHECK(relevance("anxious about exams", "my garden tomatoes", e) < 0.15);
    CHECK(relevance("", "anything", e) == 0.0);
}

TEST_CASE("full report") {
    const embedding::HashingEmbedder e;
    const auto lex = SentimentLexicon::load(testing::data_file("sentiment_lexicon.tsv"));
    const auto r = evaluate_response("How do I sleep better?", "Try a good routine. Sleep helps.", e, lex);
    CHECK(r.relevance > 0.0);
    CHECK(r.readability_norm == doctest::Approx(r.readability_raw / 100.0));
    const nlohmann::json j = r;
    for (const char* key : {"relevance", "readability_raw", "readability_norm", "polarity", "subjectivity"}) {
        CHECK(j.contains(key));
    }
}
