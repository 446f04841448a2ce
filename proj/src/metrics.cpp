#include "confidant/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "confidant/error.hpp"
#include "confidant/text.hpp"

namespace confidant::metrics {

namespace {

bool is_vowel(char c) {
    switch (c) {
        case 'a': case 'e': case 'i': case 'o': case 'u': case 'y': return true;
        default: return false;
    }
}

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_terminal(char c) {
    return c == '.' || c == '!' || c == '?';
}

// Strips leading/trailing bytes that are neither letters, digits nor UTF-8.
std::string_view strip_punct(std::string_view w) {
    while (!w.empty() && !text::is_word_byte(static_cast<unsigned char>(w.front()))) w.remove_prefix(1);
    while (!w.empty() && !text::is_word_byte(static_cast<unsigned char>(w.back()))) w.remove_suffix(1);
    return w;
}

double parse_double(std::string_view s, std::size_t line) {
    const std::string t = text::trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw Error(ErrorCode::ParseError, "sentiment lexicon line " + std::to_string(line) + ": bad number '" + t + "'");
    }
    return v;
}

}  // namespace

int count_syllables(std::string_view word) {
    std::string w;
    for (char c : word) {
        if (std::isalpha(static_cast<unsigned char>(c))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (w.empty()) return 1;
    int groups = 0;
    bool in_group = false;
    for (char c : w) {
        const bool v = is_vowel(c);
        if (v && !in_group) ++groups;
        in_group = v;
    }
    if (w.size() >= 2 && w.back() == 'e') {
        const bool consonant_le = w.size() >= 3 && w[w.size() - 2] == 'l' && !is_vowel(w[w.size() - 3]);
        if (!consonant_le && groups > 1) --groups;
    }
    return std::max(groups, 1);
}

TextStatistics text_statistics(std::string_view s) {
    TextStatistics st;
    bool sentence_has_words = false;
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_space(s[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        const std::string_view raw = s.substr(i, j - i);
        const std::string_view word = strip_punct(raw);
        if (!word.empty()) {
            ++st.words;
            st.syllables += static_cast<std::size_t>(count_syllables(word));
            sentence_has_words = true;
        }
        // A token ending in .!? closes the sentence: the next byte is
        // whitespace or the end of text by construction.
        if (is_terminal(raw.back()) && sentence_has_words) {
            ++st.sentences;
            sentence_has_words = false;
        }
        i = j;
    }
    if (sentence_has_words) ++st.sentences;
    return st;
}

double flesch_from_counts(double words, double sentences, double syllables) {
    return 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words);
}

Readability flesch_reading_ease(std::string_view text) {
    const auto st = text_statistics(text);
    if (st.words == 0) throw Error(ErrorCode::NoWords, "text has no words");
    if (st.sentences == 0) throw Error(ErrorCode::NoSentences, "text has no sentences");
    Readability r;
    r.raw = flesch_from_counts(static_cast<double>(st.words), static_cast<double>(st.sentences),
                               static_cast<double>(st.syllables));
    r.norm = r.raw / 100.0;
    return r;
}

SentimentLexicon SentimentLexicon::parse(std::string_view contents) {
    std::map<std::string, SentimentWeights> entries;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(contents)) {
        ++line_no;
        const std::string t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto a = line.find('\t');
        const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
        if (b == std::string::npos) {
            throw Error(ErrorCode::ParseError, "sentiment lexicon line " + std::to_string(line_no) +
                                                   ": expected token<TAB>polarity<TAB>subjectivity");
        }
        const std::string token = text::to_lower(text::trim(std::string_view(line).substr(0, a)));
        SentimentWeights w{parse_double(std::string_view(line).substr(a + 1, b - a - 1), line_no),
                           parse_double(std::string_view(line).substr(b + 1), line_no)};
        entries[token] = w;
    }
    return SentimentLexicon(std::move(entries));
}

SentimentLexicon SentimentLexicon::load(const std::string& path) {
    return parse(text::read_file(path));
}

const SentimentWeights* SentimentLexicon::find(const std::string& token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? nullptr : &it->second;
}

Sentiment sentiment(std::string_view text, const SentimentLexicon& lexicon) {
    double pol = 0.0;
    double subj = 0.0;
    std::size_t hits = 0;
    for (const auto& tok : text::word_tokens(text)) {
        if (const auto* w = lexicon.find(tok)) {
            pol += w->polarity;
            subj += w->subjectivity;
            ++hits;
        }
    }
    if (hits == 0) return {};
    const double n = static_cast<double>(hits);
    return {std::clamp(pol / n, -1.0, 1.0), std::clamp(subj / n, 0.0, 1.0)};
}

double relevance(std::string_view a, std::string_view b, const embedding::EmbeddingProvider& provider) {
    return embedding::cosine_similarity(provider.embed(a), provider.embed(b));
}

void to_json(nlohmann::json& j, const MetricReport& r) {
    j = {{"relevance", r.relevance},
         {"readability_raw", r.readability_raw},
         {"readability_norm", r.readability_norm},
         {"polarity", r.polarity},
         {"subjectivity", r.subjectivity}};
}

MetricReport evaluate_response(std::string_view question, std::string_view response,
                               const embedding::EmbeddingProvider& provider, const SentimentLexicon& lexicon) {
    MetricReport r;
    r.relevance = relevance(question, response, provider);
    const auto fre = flesch_reading_ease(response);
    r.readability_raw = fre.raw;
    r.readability_norm = fre.norm;
    const auto s = sentiment(response, lexicon);
    r.polarity = s.polarity;
    r.subjectivity = s.subjectivity;
    return r;
}

}  // namespace confidant::metrics
