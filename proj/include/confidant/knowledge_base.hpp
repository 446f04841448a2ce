#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "confidant/embedding.hpp"

namespace confidant::kb {

struct QAPair {
    std::string question_id;
    std::string question_title;
    std::string question_text;
    std::string question_link;
    std::string topic;
    std::string therapist_info;
    std::string therapist_url;
    std::string answer_text;
    std::int64_t upvotes = 0;
    std::int64_t views = 0;
};

struct EmbeddedQuestion {
    std::string question_id;
    std::string question_title;
    std::string question_text;
    embedding::EmbeddingVector vector;
};

struct RankedAnswer {
    std::string answer_text;
    double preference_score = 0.0;
};

struct RetrievalResult {
    std::string question_id;
    std::string question_text;
    double similarity = 0.0;
    std::vector<RankedAnswer> answers;
};

// Header of the corpus CSV, in file order.
inline constexpr std::array<std::string_view, 10> kCorpusColumns = {
    "questionID", "questionTitle", "questionText", "questionLink", "topic",
    "therapistInfo", "therapistURL", "answerText", "upvotes", "views"};

/// log(upvotes + 1) / log(views + 1). Zero when either count is zero; may
/// exceed 1 when upvotes > views. Throws NegativeCount.
double preference_score(std::int64_t upvotes, std::int64_t views);

// Throws ParseError naming the offending data row (1-based, header excluded).
std::vector<QAPair> parse_corpus(std::string_view csv_contents);
std::vector<QAPair> load_corpus(const std::string& path);

// Text embedded for a question: title and body joined by a space.
std::string question_embedding_text(const QAPair& pair);

class KnowledgeBase {
public:
    KnowledgeBase() = default;

    // One embedded question per distinct question_id, in first-seen order.
    // Throws EmptyCorpus.
    static KnowledgeBase build(std::vector<QAPair> pairs, const embedding::EmbeddingProvider& provider);

    const std::vector<QAPair>& pairs() const noexcept { return pairs_; }
    const std::vector<EmbeddedQuestion>& questions() const noexcept { return questions_; }
    const nlohmann::json& provider_config() const noexcept { return provider_config_; }
    bool empty() const noexcept { return questions_.empty(); }

    // Indices into pairs(), in ingestion order.
    const std::vector<std::size_t>& answers_for(const std::string& question_id) const;

    nlohmann::json snapshot() const;
    static KnowledgeBase from_snapshot(const nlohmann::json& j);
    void save(const std::string& path) const;
    static KnowledgeBase load(const std::string& path);

private:
    void index_answers();

    std::vector<QAPair> pairs_;
    std::vector<EmbeddedQuestion> questions_;
    std::map<std::string, std::vector<std::size_t>> answers_by_question_;
    nlohmann::json provider_config_;
};

KnowledgeBase ingest(const std::string& corpus_path, const embedding::EmbeddingProvider& provider);

struct SearchOutcome {
    // Best cosine similarity over all questions (first-ingested wins ties).
    double best_similarity = 0.0;
    std::size_t best_question = 0;
    // Present iff best_similarity >= alpha.
    std::optional<RetrievalResult> result;
};

// Throws EmptyKnowledgeBase; InvalidArgument for k < 1 or alpha outside [-1, 1].
SearchOutcome search(const embedding::EmbeddingVector& query, const KnowledgeBase& kb, double alpha, int k);

std::optional<RetrievalResult> retrieve(const embedding::EmbeddingVector& query, const KnowledgeBase& kb,
                                        double alpha, int k);

}  // namespace confidant::kb
