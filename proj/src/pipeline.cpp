#include "confidant/pipeline.hpp"

#include <set>
#include <utility>

#include "confidant/error.hpp"
#include "confidant/text.hpp"

namespace confidant::pipeline {

namespace {

// Runs one step of the flow and tags any failure with the step name.
template <class F>
decltype(auto) stage(const char* name, F&& f) {
    try {
        return std::forward<F>(f)();
    } catch (Error& e) {
        if (e.stage().empty()) e.set_stage(name);
        throw;
    } catch (const std::exception& e) {
        Error err(ErrorCode::InvalidArgument, e.what());
        err.set_stage(name);
        throw err;
    }
}

const std::set<std::string> kConfigKeys = {"alpha", "short_term_n", "update_every", "k", "template",
                                           "seed", "short_term_memory", "long_term_memory"};

}  // namespace

void SessionConfig::validate() const {
    if (!(alpha >= -1.0 && alpha <= 1.0)) {
        throw Error(ErrorCode::ValidationError, "alpha must lie in [-1, 1], got " + std::to_string(alpha));
    }
    if (short_term_n < 1) throw Error(ErrorCode::ValidationError, "short_term_n must be >= 1");
    if (update_every < 1) throw Error(ErrorCode::ValidationError, "update_every must be >= 1");
    if (k < 1) throw Error(ErrorCode::ValidationError, "k must be >= 1");
    if (template_name.empty()) throw Error(ErrorCode::ValidationError, "template must be non-empty");
}

void to_json(nlohmann::json& j, const SessionConfig& c) {
    j = {{"alpha", c.alpha},
         {"short_term_n", c.short_term_n},
         {"update_every", c.update_every},
         {"k", c.k},
         {"template", c.template_name},
         {"seed", c.seed},
         {"short_term_memory", c.short_term_memory},
         {"long_term_memory", c.long_term_memory}};
}

void from_json(const nlohmann::json& j, SessionConfig& c) {
    if (!j.is_object()) throw Error(ErrorCode::ValidationError, "config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (kConfigKeys.count(key) == 0) throw Error(ErrorCode::ValidationError, "unknown config key '" + key + "'");
        }
        c.alpha = j.value("alpha", c.alpha);
        c.short_term_n = j.value("short_term_n", c.short_term_n);
        c.update_every = j.value("update_every", c.update_every);
        c.k = j.value("k", c.k);
        c.template_name = j.value("template", c.template_name);
        c.seed = j.value("seed", c.seed);
        c.short_term_memory = j.value("short_term_memory", c.short_term_memory);
        c.long_term_memory = j.value("long_term_memory", c.long_term_memory);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ValidationError, std::string("bad config: ") + e.what());
    }
}

SessionConfig merge_config(const SessionConfig& base, const nlohmann::json& overrides) {
    SessionConfig c = base;
    if (!overrides.is_null()) from_json(overrides, c);
    c.validate();
    return c;
}

void to_json(nlohmann::json& j, const ResponseTrace& t) {
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : t.placeholders) spans.push_back(s);
    j = {{"turn_index", t.turn_index},
         {"exchange", t.exchange},
         {"template", t.template_name},
         {"anonymized_query", t.anonymized_query},
         {"placeholders", spans},
         {"retrieval_attempted", t.retrieval_attempted},
         {"similarity", t.similarity ? nlohmann::json(*t.similarity) : nlohmann::json(nullptr)},
         {"alpha", t.alpha},
         {"gate_open", t.gate_open},
         {"question_id", t.question_id},
         {"answers_used", t.answers_used},
         {"entities_used", t.entities_used},
         {"entity_update",
          {{"attempted", t.entity_update.attempted},
           {"updated", t.entity_update.updated},
           {"error", t.entity_update.error}}}};
}

void from_json(const nlohmann::json& j, ResponseTrace& t) {
    t.turn_index = j.at("turn_index").get<std::int64_t>();
    t.exchange = j.at("exchange").get<std::int64_t>();
    t.template_name = j.at("template").get<std::string>();
    t.anonymized_query = j.at("anonymized_query").get<std::string>();
    t.placeholders.clear();
    for (const auto& s : j.at("placeholders")) {
        t.placeholders.push_back({s.at("start").get<std::size_t>(), s.at("end").get<std::size_t>(),
                                  privacy::parse_kind(s.at("kind").get<std::string>()),
                                  s.at("surface").get<std::string>()});
    }
    t.retrieval_attempted = j.at("retrieval_attempted").get<bool>();
    if (j.at("similarity").is_null()) {
        t.similarity.reset();
    } else {
        t.similarity = j.at("similarity").get<double>();
    }
    t.alpha = j.at("alpha").get<double>();
    t.gate_open = j.at("gate_open").get<bool>();
    t.question_id = j.at("question_id").get<std::string>();
    t.answers_used = j.at("answers_used").get<std::size_t>();
    t.entities_used = j.at("entities_used").get<std::vector<std::string>>();
    const auto& u = j.at("entity_update");
    t.entity_update = {u.at("attempted").get<bool>(), u.at("updated").get<std::vector<std::string>>(),
                       u.at("error").get<std::string>()};
}

std::string default_data_dir() {
    return CONFIDANT_DATA_DIR;
}

EngineResources load_default_resources(const std::string& data_root) {
    EngineResources r;
    r.detector = std::make_shared<privacy::RuleBasedDetector>(privacy::load_lexicon(data_root + "/data/gazetteer.tsv"));
    r.pools = std::make_shared<privacy::SurrogatePools>(privacy::load_lexicon(data_root + "/data/surrogates.tsv"));
    r.embedder = std::make_shared<embedding::HashingEmbedder>();
    r.templates = std::make_shared<prompt::TemplateSet>(prompt::load_templates(data_root + "/templates"));
    r.summary_prompt = prompt::load_summary_prompt(data_root + "/templates");
    return r;
}

Engine::Engine(EngineResources resources) : res_(std::move(resources)) {
    if (!res_.detector || !res_.pools || !res_.embedder || !res_.templates || !res_.llm) {
        throw Error(ErrorCode::InvalidArgument, "engine needs a detector, pools, embedder, templates and an LLM");
    }
}

ConversationState Engine::new_conversation(std::string session_id, SessionConfig config) const {
    config.validate();
    res_.templates->get(config.template_name);  // fail fast on an unknown template
    ConversationState s;
    s.map = privacy::AnonymizationMap(session_id, config.seed);
    s.session_id = std::move(session_id);
    s.buffer = memory::ShortTermBuffer(2 * static_cast<std::size_t>(config.short_term_n));
    s.entities.update_every = config.update_every;
    s.config = std::move(config);
    return s;
}

std::string Engine::entity_display(const ConversationState& state, const std::string& key) {
    auto entry = state.map.entry_for_key(key);
    return entry ? entry->placeholder : key;
}

memory::Turn Engine::anonymized_turn(ConversationState& state, memory::Role role, std::string_view text,
                                     std::vector<privacy::PiiSpan>* spans) const {
    const auto detected = stage("detect", [&] { return privacy::detect_pii(text, *res_.detector); });
    auto anon = stage("anonymize", [&] { return privacy::anonymize(text, detected, state.map, *res_.pools); });
    if (spans != nullptr) *spans = anon.spans;
    return {state.buffer.next_index(), role, std::move(anon.text), memory::now_utc_ms()};
}

Response Engine::respond(ConversationState& state, std::string_view user_message) const {
    ConversationState next = state;
    Response out;
    auto& trace = out.trace;
    const auto& cfg = next.config;
    trace.turn_index = next.buffer.next_index();
    trace.exchange = next.exchanges + 1;
    trace.template_name = cfg.template_name;
    trace.alpha = cfg.alpha;

    std::vector<privacy::PiiSpan> spans;
    memory::Turn user_turn = anonymized_turn(next, memory::Role::User, user_message, &spans);
    trace.anonymized_query = user_turn.content;
    trace.placeholders = spans;

    stage("register", [&] { next.entities = memory::register_entities(next.entities, spans, next.exchanges); });

    std::optional<kb::RetrievalResult> retrieval;
    if (res_.knowledge_base) {
        const auto query_vec = stage("embed", [&] { return res_.embedder->embed(user_turn.content); });
        auto outcome = stage("retrieve", [&] { return kb::search(query_vec, *res_.knowledge_base, cfg.alpha, cfg.k); });
        trace.retrieval_attempted = true;
        trace.similarity = outcome.best_similarity;
        trace.gate_open = outcome.result.has_value();
        if (outcome.result) {
            trace.question_id = outcome.result->question_id;
            trace.answers_used = outcome.result->answers.size();
        }
        retrieval = std::move(outcome.result);
    }

    std::vector<memory::EntityRecord> entities;
    if (cfg.long_term_memory) {
        stage("lookup", [&] {
            for (auto& rec : memory::lookup_entities(user_turn.content, next.entities)) {
                if (rec.summary.empty()) continue;
                trace.entities_used.push_back(rec.name);
                entities.push_back(std::move(rec));
            }
        });
    }

    const std::vector<memory::Turn> history =
        cfg.short_term_memory ? next.buffer.to_vector() : std::vector<memory::Turn>{};
    out.prompt = stage("assemble", [&] {
        return prompt::assemble_prompt(res_.templates->get(cfg.template_name), user_turn.content, retrieval, history,
                                       entities, [&](const std::string& key) { return entity_display(next, key); });
    });

    // Only user-derived text is checked: templates and corpus answers are
    // static and may legitimately contain names.
    stage("privacy_guard", [&] {
        std::vector<std::string> parts = {user_turn.content};
        for (const auto& t : history) parts.push_back(t.content);
        for (const auto& e : entities) parts.push_back(e.summary);
        for (const auto& part : parts) {
            const auto leaks = privacy::find_leaks(part, next.map);
            if (!leaks.empty()) {
                throw Error(ErrorCode::PrivacyLeak,
                            "outbound prompt would contain " + std::to_string(leaks.size()) + " original surface(s)");
            }
        }
    });

    out.raw_reply = stage("complete", [&] { return llm::complete(out.prompt.messages(), *res_.llm); });
    out.reply = stage("restore", [&] { return privacy::restore(out.raw_reply, next.map); });

    stage("memory", [&] {
        memory::Turn assistant{user_turn.index + 1, memory::Role::Assistant, out.raw_reply, memory::now_utc_ms()};
        next.buffer.append(user_turn);
        next.buffer.append(assistant);
        next.log.push_back(std::move(user_turn));
        next.log.push_back(std::move(assistant));
        ++next.exchanges;
    });

    // A failed summarization leaves the old summaries in place; the next
    // cadence point retries.
    if (memory::is_update_turn(next.entities, next.exchanges)) {
        trace.entity_update.attempted = true;
        try {
            trace.entity_update.updated = memory::update_entities(
                next.entities, next.buffer.to_vector(), *res_.llm, next.exchanges,
                [&](const std::string& key) { return entity_display(next, key); }, res_.summary_prompt);
        } catch (const std::exception& e) {
            trace.entity_update.error = e.what();
        }
    }

    state = std::move(next);
    return out;
}

void Engine::feed_history(ConversationState& state,
                          const std::vector<std::pair<memory::Role, std::string>>& turns) const {
    ConversationState next = state;
    for (const auto& [role, content] : turns) {
        std::vector<privacy::PiiSpan> spans;
        memory::Turn turn = anonymized_turn(next, role, content, &spans);
        next.entities = memory::register_entities(next.entities, spans, next.exchanges);
        next.buffer.append(turn);
        next.log.push_back(std::move(turn));
        if (role == memory::Role::User) ++next.exchanges;
    }
    state = std::move(next);
}

std::vector<std::string> Engine::flush_entities(ConversationState& state) const {
    ConversationState next = state;
    auto updated = stage("entity_update", [&] {
        return memory::update_entities(next.entities, next.buffer.to_vector(), *res_.llm, next.exchanges,
                                       [&](const std::string& key) { return entity_display(next, key); },
                                       res_.summary_prompt);
    });
    state = std::move(next);
    return updated;
}

}  // namespace confidant::pipeline
