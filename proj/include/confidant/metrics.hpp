#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "confidant/embedding.hpp"

namespace confidant::metrics {

// Heuristic syllable count: vowel groups (aeiouy), minus a silent trailing 'e'
// unless the word ends in consonant + "le"; never below 1.
int count_syllables(std::string_view word);

struct TextStatistics {
    std::size_t words = 0;
    std::size_t sentences = 0;
    std::size_t syllables = 0;
};

// Sentences end at a run of .!? followed by whitespace or the end of text; a
// trailing fragment without punctuation is a sentence too. Words are
// whitespace-separated with surrounding punctuation stripped; tokens left
// empty do not count.
TextStatistics text_statistics(std::string_view text);

struct Readability {
    double raw = 0.0;
    double norm = 0.0;  // raw / 100, not clamped
};

double flesch_from_counts(double words, double sentences, double syllables);

// Throws NoWords or NoSentences.
Readability flesch_reading_ease(std::string_view text);

struct SentimentWeights {
    double polarity = 0.0;
    double subjectivity = 0.0;
};

class SentimentLexicon {
public:
    SentimentLexicon() = default;
    explicit SentimentLexicon(std::map<std::string, SentimentWeights> entries) : entries_(std::move(entries)) {}

    // token<TAB>polarity<TAB>subjectivity; '#' starts a comment line.
    static SentimentLexicon parse(std::string_view contents);
    static SentimentLexicon load(const std::string& path);

    const SentimentWeights* find(const std::string& token) const;
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::map<std::string, SentimentWeights> entries_;
};

struct Sentiment {
    double polarity = 0.0;      // [-1, 1]
    double subjectivity = 0.0;  // [0, 1]
};

// Averages over every matched token occurrence; (0, 0) without matches.
Sentiment sentiment(std::string_view text, const SentimentLexicon& lexicon);

double relevance(std::string_view a, std::string_view b, const embedding::EmbeddingProvider& provider);

struct MetricReport {
    double relevance = 0.0;
    double readability_raw = 0.0;
    double readability_norm = 0.0;
    double polarity = 0.0;
    double subjectivity = 0.0;
};

void to_json(nlohmann::json& j, const MetricReport& r);

// Relevance is measured between the question and the response; the other
// metrics describe the response alone.
MetricReport evaluate_response(std::string_view question, std::string_view response,
                               const embedding::EmbeddingProvider& provider, const SentimentLexicon& lexicon);

}  // namespace confidant::metrics
