#include <doctest.h>

#include "confidant/error.hpp"
#include "confidant/pipeline.hpp"
#include "confidant/text.hpp"
#include "test_helpers.hpp"

using namespace confidant;
using namespace confidant::pipeline;
using confidant::testing::echo_resources;
using confidant::testing::fixture;

namespace {

bool any_request_mentions(const llm::ScriptedLlm& m, const privacy::AnonymizationMap& map) {
    for (const auto& req : m.requests()) {
        for (const auto& msg : req) {
            if (!privacy::find_leaks(msg.content, map).empty()) return true;
        }
    }
    return false;
}

Error capture_error(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e;
    }
    FAIL("expected an Error");
    return Error(ErrorCode::InvalidArgument, "unreachable");
}

}  // namespace

TEST_CASE("first message of a session") {
    auto model = std::shared_ptr<llm::ScriptedLlm>(llm::mock::make_echo_llm());
    const Engine engine(echo_resources(model));
    auto state = engine.new_conversation("s", SessionConfig{});
    CHECK(state.buffer.capacity() == 20);

    const auto r = engine.respond(state, "I have been feeling low.");
    CHECK(r.reply == llm::mock::kGenericReply);
    CHECK(r.trace.turn_index == 0);
    CHECK(r.trace.exchange == 1);
    CHECK_FALSE(r.trace.retrieval_attempted);
    CHECK_FALSE(r.trace.similarity.has_value());
    CHECK(r.prompt.messages().size() == 2);
    CHECK(state.exchanges == 1);
    CHECK(state.log.size() == 2);
    CHECK(state.buffer.size() == 2);
    CHECK(state.log[1].role == memory::Role::Assistant);
    CHECK(model->call_count() == 1);
}

TEST_CASE("a remembered person comes back in later replies without leaving the process") {
    auto model = std::shared_ptr<llm::ScriptedLlm>(llm::mock::make_echo_llm());
    const Engine engine(echo_resources(model));
    SessionConfig cfg;
    cfg.update_every = 2;
    cfg.seed = 42;
    auto state = engine.new_conversation("derek", cfg);

    engine.respond(state, "My brother Derek keeps borrowing money.");
    const auto second = engine.respond(state, "Derek never pays it back.");
    CHECK(second.trace.entity_update.attempted);
    REQUIRE(second.trace.entity_update.updated.size() == 1);
    const std::string key = second.trace.entity_update.updated[0];
    const std::string placeholder = *state.map.placeholder_for("Derek", privacy::PiiKind::Person);
    CHECK(key == text::to_lower(placeholder));
    CHECK(state.entities.find(key)->last_updated_turn == 2);

    const auto third = engine.respond(state, "What should I do about Derek?");
    CHECK(third.trace.entities_used == std::vector<std::string>{key});
    CHECK(third.prompt.entity_context);
    CHECK(third.reply ==
          "It sounds like this is weighing on you. I remember what you shared before: Derek was mentioned by the "
          "user: My brother Derek keeps borrowing money. Derek never pays it back.");
    CHECK(third.raw_reply.find("Derek") == std::string::npos);
    CHECK(third.raw_reply.find(placeholder) != std::string::npos);
    CHECK_FALSE(any_request_mentions(*model, state.map));
}

TEST_CASE("retrieval gate shows up in the trace and the prompt") {
    auto res = echo_resources();
    const embedding::HashingEmbedder e;
    res.knowledge_base = std::make_shared<kb::KnowledgeBase>(kb::ingest(fixture("corpus_two_questions.csv"), e));
    const Engine engine(res);
    auto state = engine.new_conversation("g", SessionConfig{});

    const auto closed = engine.respond(state, "?!");
    CHECK(closed.trace.retrieval_attempted);
    REQUIRE(closed.trace.similarity.has_value());
    CHECK(*closed.trace.similarity == 0.0);
    CHECK_FALSE(closed.trace.gate_open);
    CHECK(closed.trace.answers_used == 0);
    CHECK_FALSE(closed.prompt.therapist_context);
    CHECK(closed.prompt.system.find("Question:") == std::string::npos);

    const auto open = engine.respond(state, "Trouble sleeping I lie awake every night worrying about work.");
    CHECK(open.trace.gate_open);
    CHECK(*open.trace.similarity == doctest::Approx(1.0));
    CHECK(open.trace.question_id == "q1");
    CHECK(open.trace.answers_used == 1);
    CHECK(open.prompt.system.find("Answer: Try a wind-down routine") != std::string::npos);
}

TEST_CASE("a failing model call leaves the session untouched") {
    auto model = std::make_shared<llm::ScriptedLlm>(std::vector<std::string>{"only one"});
    const Engine engine(echo_resources(model));
    auto state = engine.new_conversation("r", SessionConfig{});
    engine.respond(state, "Hello, I met Derek.");
    const auto before = state;
    const auto err = capture_error([&] { engine.respond(state, "Derek and Maria visited Boston."); });
    CHECK(err.code() == ErrorCode::ScriptExhausted);
    CHECK(err.stage() == "complete");
    CHECK(state == before);
}

TEST_CASE("privacy guard blocks surfaces the detector missed") {
    // The backend only recognizes Derek on the first call.
    auto calls = std::make_shared<int>(0);
    auto res = echo_resources();
    res.detector = std::make_shared<privacy::ExternalNerDetector>([calls](std::string_view text) {
        std::vector<privacy::PiiSpan> out;
        const auto at = text.find("Derek");
        if ((*calls)++ == 0 && at != std::string_view::npos) out.push_back({at, at + 5, privacy::PiiKind::Person, "Derek"});
        return out;
    });
    auto model = std::make_shared<llm::ScriptedLlm>(std::vector<std::string>{"ok", "ok"});
    res.llm = model;
    const Engine engine(res);
    auto state = engine.new_conversation("p", SessionConfig{});
    engine.respond(state, "Derek is my friend.");
    const auto before = state;
    const auto err = capture_error([&] { engine.respond(state, "Derek called again."); });
    CHECK(err.code() == ErrorCode::PrivacyLeak);
    CHECK(err.stage() == "privacy_guard");
    CHECK(model->call_count() == 1);
    CHECK(state == before);
}

TEST_CASE("summarizer failures are recorded but not fatal") {
    auto res = echo_resources();
    auto model = std::make_shared<llm::ScriptedLlm>(
        std::vector<std::string>{"one", "two"},
        std::vector<llm::ScriptedLlm::Rule>{[](const std::vector<llm::ChatMessage>& m) -> std::optional<std::string> {
            if (m.back().content.rfind("You maintain", 0) == 0) throw Error(ErrorCode::RemoteError, "summarizer down");
            return std::nullopt;
        }});
    res.llm = model;
    const Engine engine(res);
    SessionConfig cfg;
    cfg.update_every = 2;
    auto state = engine.new_conversation("f", cfg);
    engine.respond(state, "Derek is upset.");
    const auto r = engine.respond(state, "Derek yelled.");
    CHECK(r.trace.entity_update.attempted);
    CHECK(r.trace.entity_update.error == "summarizer down");
    CHECK(r.trace.entity_update.updated.empty());
    CHECK(state.exchanges == 2);
    for (const auto& [k, rec] : state.entities.records) CHECK(rec.summary.empty());
}

TEST_CASE("memory switches") {
    auto model = std::shared_ptr<llm::ScriptedLlm>(llm::mock::make_echo_llm());
    const Engine engine(echo_resources(model));
    SessionConfig cfg;
    cfg.update_every = 1;
    cfg.short_term_memory = false;
    auto no_short = engine.new_conversation("a", cfg);
    engine.respond(no_short, "Derek is my brother.");
    const auto r1 = engine.respond(no_short, "Derek again.");
    CHECK(r1.prompt.history.empty());
    CHECK(r1.trace.entities_used.size() == 1);

    cfg.short_term_memory = true;
    cfg.long_term_memory = false;
    auto no_long = engine.new_conversation("b", cfg);
    engine.respond(no_long, "Derek is my brother.");
    const auto r2 = engine.respond(no_long, "Derek again.");
    CHECK(r2.prompt.history.size() == 2);
    CHECK(r2.trace.entities_used.empty());
    CHECK_FALSE(r2.prompt.entity_context);
}

TEST_CASE("window holds the last short_term_n exchanges") {
    const Engine engine(echo_resources());
    SessionConfig cfg;
    cfg.short_term_n = 3;
    auto state = engine.new_conversation("w", cfg);
    for (int i = 0; i < 12; ++i) engine.respond(state, "message " + std::to_string(i));
    CHECK(state.log.size() == 24);
    CHECK(state.buffer.to_vector() == std::vector<memory::Turn>(state.log.end() - 6, state.log.end()));
    CHECK(state.buffer.turns().front().content == "message 9");
}

TEST_CASE("feeding history and flushing entities") {
    const Engine engine(echo_resources());
    auto state = engine.new_conversation("h", SessionConfig{});
    engine.feed_history(state, {{memory::Role::User, "Maria is my coworker."},
                                {memory::Role::Assistant, "How do you get along with Maria?"},
                                {memory::Role::User, "Not well."}});
    CHECK(state.exchanges == 2);
    CHECK(state.log.size() == 3);
    CHECK(state.log[1].content.find("Maria") == std::string::npos);
    const auto updated = engine.flush_entities(state);
    REQUIRE(updated.size() == 1);
    CHECK(state.entities.find(updated[0])->summary.find("coworker") != std::string::npos);
}

TEST_CASE("session config validation") {
    CHECK_THROWS_CODE(merge_config({}, {{"alpha", 1.5}}), ErrorCode::ValidationError);
    CHECK_THROWS_CODE(merge_config({}, {{"short_term_n", 0}}), ErrorCode::ValidationError);
    CHECK_THROWS_CODE(merge_config({}, {{"update_every", 0}}), ErrorCode::ValidationError);
    CHECK_THROWS_CODE(merge_config({}, {{"k", 0}}), ErrorCode::ValidationError);
    CHECK_THROWS_CODE(merge_config({}, {{"colour", "blue"}}), ErrorCode::ValidationError);
    CHECK_THROWS_CODE(merge_config({}, {{"alpha", "high"}}), ErrorCode::ValidationError);
    CHECK_THROWS_CODE(merge_config({}, nlohmann::json::array()), ErrorCode::ValidationError);
    const auto c = merge_config({}, {{"alpha", 0.5}, {"template", "gkp"}});
    CHECK(c.alpha == 0.5);
    CHECK(c.template_name == "gkp");
    CHECK(c.short_term_n == 10);
    CHECK(nlohmann::json(c).get<SessionConfig>() == c);

    const Engine engine(echo_resources());
    SessionConfig bad;
    bad.template_name = "nope";
    CHECK_THROWS_CODE(engine.new_conversation("x", bad), ErrorCode::TemplateNotFound);
    auto res = echo_resources();
    res.llm.reset();
    CHECK_THROWS_CODE(Engine{res}, ErrorCode::InvalidArgument);
}

TEST_CASE("trace JSON round-trip") {
    const Engine engine(echo_resources());
    auto state = engine.new_conversation("t", SessionConfig{});
    const auto r = engine.respond(state, "I met Derek on Tuesday");
    const nlohmann::json j = r.trace;
    CHECK(j["similarity"].is_null());
    CHECK(j["placeholders"].size() == 2);
    const auto back = j.get<ResponseTrace>();
    CHECK(nlohmann::json(back) == j);
}
