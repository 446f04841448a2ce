#include "confidant/knowledge_base.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "confidant/csv.hpp"
#include "confidant/error.hpp"
#include "confidant/text.hpp"

namespace confidant::kb {

namespace {

std::int64_t parse_count(const std::string& raw, std::size_t row, std::string_view column) {
    const std::string s = text::trim(raw);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        // pandas exports integer columns as "12.0" when NaNs were present
        double d = 0.0;
        auto [dptr, dec] = std::from_chars(s.data(), s.data() + s.size(), d);
        if (s.empty() || dec != std::errc() || dptr != s.data() + s.size() || d != std::floor(d)) {
            throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": column " +
                                                   std::string(column) + " is not an integer: '" + raw + "'");
        }
        value = static_cast<std::int64_t>(d);
    }
    if (value < 0) {
        throw Error(ErrorCode::ParseError,
                    "row " + std::to_string(row) + ": column " + std::string(column) + " is negative");
    }
    return value;
}

}  // namespace

double preference_score(std::int64_t upvotes, std::int64_t views) {
    if (upvotes < 0 || views < 0) {
        throw Error(ErrorCode::NegativeCount, "upvotes and views must be non-negative");
    }
    if (upvotes == 0 || views == 0) return 0.0;
    return std::log1p(static_cast<double>(upvotes)) / std::log1p(static_cast<double>(views));
}

std::vector<QAPair> parse_corpus(std::string_view contents) {
    const auto rows = csv::parse(contents);
    if (rows.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no header");

    // Named columns must be exactly the ten corpus attributes; unnamed columns
    // (a leading pandas index, for instance) are ignored.
    const auto& header = rows.front().fields;
    std::array<std::size_t, kCorpusColumns.size()> col{};
    std::vector<std::string> named;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = text::trim(header[i]);
        if (name.empty()) continue;
        auto it = std::find(kCorpusColumns.begin(), kCorpusColumns.end(), name);
        if (it == kCorpusColumns.end()) {
            throw Error(ErrorCode::ParseError, "header: unexpected column '" + name + "'");
        }
        if (std::find(named.begin(), named.end(), name) != named.end()) {
            throw Error(ErrorCode::ParseError, "header: duplicate column '" + name + "'");
        }
        named.push_back(name);
        col[static_cast<std::size_t>(it - kCorpusColumns.begin())] = i;
    }
    if (named.size() != kCorpusColumns.size()) {
        for (auto c : kCorpusColumns) {
            if (std::find(named.begin(), named.end(), c) == named.end()) {
                throw Error(ErrorCode::ParseError, "header: missing column '" + std::string(c) + "'");
            }
        }
    }

    std::vector<QAPair> pairs;
    pairs.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r].fields;
        if (f.size() != header.size()) {
            throw Error(ErrorCode::ParseError, "row " + std::to_string(r) + ": expected " +
                                                   std::to_string(header.size()) + " fields, got " +
                                                   std::to_string(f.size()));
        }
        QAPair p;
        p.question_id = text::trim(f[col[0]]);
        if (p.question_id.empty()) throw Error(ErrorCode::ParseError, "row " + std::to_string(r) + ": empty questionID");
        p.question_title = f[col[1]];
        p.question_text = f[col[2]];
        p.question_link = f[col[3]];
        p.topic = f[col[4]];
        p.therapist_info = f[col[5]];
        p.therapist_url = f[col[6]];
        p.answer_text = f[col[7]];
        p.upvotes = parse_count(f[col[8]], r, "upvotes");
        p.views = parse_count(f[col[9]], r, "views");
        pairs.push_back(std::move(p));
    }
    if (pairs.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no data rows");
    return pairs;
}

std::vector<QAPair> load_corpus(const std::string& path) {
    return parse_corpus(text::read_file(path));
}

std::string question_embedding_text(const QAPair& pair) {
    if (pair.question_title.empty()) return pair.question_text;
    if (pair.question_text.empty()) return pair.question_title;
    return pair.question_title + " " + pair.question_text;
}

KnowledgeBase KnowledgeBase::build(std::vector<QAPair> pairs, const embedding::EmbeddingProvider& provider) {
    if (pairs.empty()) throw Error(ErrorCode::EmptyCorpus, "no QA pairs to ingest");
    KnowledgeBase kb;
    kb.pairs_ = std::move(pairs);
    kb.index_answers();
    for (const auto& p : kb.pairs_) {
        const bool seen = std::any_of(kb.questions_.begin(), kb.questions_.end(),
                                      [&](const EmbeddedQuestion& q) { return q.question_id == p.question_id; });
        if (seen) continue;
        kb.questions_.push_back({p.question_id, p.question_title, p.question_text,
                                 provider.embed(question_embedding_text(p))});
    }
    kb.provider_config_ = provider.config();
    return kb;
}

void KnowledgeBase::index_answers() {
    answers_by_question_.clear();
    for (std::size_t i = 0; i < pairs_.size(); ++i) answers_by_question_[pairs_[i].question_id].push_back(i);
}

const std::vector<std::size_t>& KnowledgeBase::answers_for(const std::string& question_id) const {
    static const std::vector<std::size_t> none;
    auto it = answers_by_question_.find(question_id);
    return it == answers_by_question_.end() ? none : it->second;
}

nlohmann::json KnowledgeBase::snapshot() const {
    nlohmann::json qs = nlohmann::json::array();
    for (const auto& q : questions_) {
        qs.push_back({{"question_id", q.question_id},
                      {"question_title", q.question_title},
                      {"question_text", q.question_text},
                      {"vector", q.vector.values}});
    }
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : pairs_) {
        ps.push_back({{"question_id", p.question_id},
                      {"question_title", p.question_title},
                      {"question_text", p.question_text},
                      {"question_link", p.question_link},
                      {"topic", p.topic},
                      {"therapist_info", p.therapist_info},
                      {"therapist_url", p.therapist_url},
                      {"answer_text", p.answer_text},
                      {"upvotes", p.upvotes},
                      {"views", p.views}});
    }
    return {{"questions", qs}, {"pairs", ps}, {"provider_config", provider_config_}};
}

KnowledgeBase KnowledgeBase::from_snapshot(const nlohmann::json& j) {
    KnowledgeBase kb;
    try {
        for (const auto& p : j.at("pairs")) {
            QAPair q;
            q.question_id = p.at("question_id").get<std::string>();
            q.question_title = p.value("question_title", "");
            q.question_text = p.value("question_text", "");
            q.question_link = p.value("question_link", "");
            q.topic = p.value("topic", "");
            q.therapist_info = p.value("therapist_info", "");
            q.therapist_url = p.value("therapist_url", "");
            q.answer_text = p.at("answer_text").get<std::string>();
            q.upvotes = p.at("upvotes").get<std::int64_t>();
            q.views = p.at("views").get<std::int64_t>();
            kb.pairs_.push_back(std::move(q));
        }
        for (const auto& q : j.at("questions")) {
            kb.questions_.push_back({q.at("question_id").get<std::string>(), q.value("question_title", ""),
                                     q.value("question_text", ""),
                                     {q.at("vector").get<std::vector<double>>()}});
        }
        kb.provider_config_ = j.value("provider_config", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("knowledge base snapshot: ") + e.what());
    }
    kb.index_answers();
    return kb;
}

void KnowledgeBase::save(const std::string& path) const {
    text::write_file_atomic(path, snapshot().dump());
}

KnowledgeBase KnowledgeBase::load(const std::string& path) {
    try {
        return from_snapshot(nlohmann::json::parse(text::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("knowledge base snapshot: ") + e.what());
    }
}

KnowledgeBase ingest(const std::string& corpus_path, const embedding::EmbeddingProvider& provider) {
    return KnowledgeBase::build(load_corpus(corpus_path), provider);
}

SearchOutcome search(const embedding::EmbeddingVector& query, const KnowledgeBase& kb, double alpha, int k) {
    if (kb.empty()) throw Error(ErrorCode::EmptyKnowledgeBase, "knowledge base has no questions");
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    if (!(alpha >= -1.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [-1, 1]");

    SearchOutcome out;
    out.best_similarity = -2.0;
    const auto& questions = kb.questions();
    for (std::size_t i = 0; i < questions.size(); ++i) {
        const double s = embedding::cosine_similarity(query, questions[i].vector);
        if (s > out.best_similarity) {
            out.best_similarity = s;
            out.best_question = i;
        }
    }
    if (out.best_similarity < alpha) return out;

    const auto& q = questions[out.best_question];
    RetrievalResult r{q.question_id, q.question_text, out.best_similarity, {}};
    for (std::size_t idx : kb.answers_for(q.question_id)) {
        const auto& p = kb.pairs()[idx];
        r.answers.push_back({p.answer_text, preference_score(p.upvotes, p.views)});
    }
    std::stable_sort(r.answers.begin(), r.answers.end(), [](const RankedAnswer& a, const RankedAnswer& b) {
        return a.preference_score > b.preference_score;
    });
    if (r.answers.size() > static_cast<std::size_t>(k)) r.answers.resize(static_cast<std::size_t>(k));
    out.result = std::move(r);
    return out;
}

std::optional<RetrievalResult> retrieve(const embedding::EmbeddingVector& query, const KnowledgeBase& kb,
                                        double alpha, int k) {
    return search(query, kb, alpha, k).result;
}

}  // namespace confidant::kb
