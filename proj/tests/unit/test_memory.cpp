#include <doctest.h>

#include "confidant/error.hpp"
#include "confidant/llm.hpp"
#include "confidant/memory.hpp"
#include "test_helpers.hpp"

using namespace confidant;
using namespace confidant::memory;
using privacy::PiiKind;
using privacy::PiiSpan;

namespace {

Turn user(std::int64_t i, std::string s) { return {i, Role::User, std::move(s), 0}; }
Turn assistant(std::int64_t i, std::string s) { return {i, Role::Assistant, std::move(s), 0}; }

}  // namespace

TEST_CASE("short-term buffer keeps the most recent turns") {
    ShortTermBuffer buf(3);
    for (int i = 0; i < 5; ++i) buf.append(user(i, "t" + std::to_string(i)));
    REQUIRE(buf.size() == 3);
    CHECK(buf.turns().front().index == 2);
    CHECK(buf.turns().back().index == 4);
    CHECK(buf.next_index() == 5);
    CHECK_THROWS_CODE(buf.append(user(6, "gap")), ErrorCode::IndexGap);
    CHECK_THROWS_CODE(buf.append(user(4, "again")), ErrorCode::IndexGap);
    CHECK(buf.size() == 3);
    CHECK_THROWS_CODE(ShortTermBuffer(0), ErrorCode::InvalidArgument);
}

TEST_CASE("append_turn leaves its input untouched") {
    const ShortTermBuffer empty(2);
    const auto one = append_turn(empty, user(0, "hi"));
    CHECK(empty.size() == 0);
    CHECK(one.size() == 1);
    const auto resumed = append_turn(ShortTermBuffer(2, 40), user(40, "later"));
    CHECK(resumed.next_index() == 41);
}

TEST_CASE("property: buffer equals the tail of the full log") {
    for (std::size_t cap = 1; cap <= 7; ++cap) {
        ShortTermBuffer buf(cap);
        std::vector<Turn> log;
        for (int i = 0; i < 30; ++i) {
            Turn t = i % 2 == 0 ? user(i, "u") : assistant(i, "a");
            log.push_back(t);
            buf = append_turn(buf, t);
            const std::size_t keep = std::min(cap, log.size());
            CHECK(buf.to_vector() == std::vector<Turn>(log.end() - static_cast<long>(keep), log.end()));
        }
    }
}

TEST_CASE("entity registration tracks persons only, once") {
    EntityStore store;
    store = register_entities(store,
                              {{6, 13, PiiKind::Person, "Florian"}, {17, 24, PiiKind::DateTime, "July 11"},
                               {30, 36, PiiKind::Location, "Bergen"}},
                              1);
    REQUIRE(store.records.size() == 1);
    const auto* rec = store.find("florian");
    REQUIRE(rec != nullptr);
    CHECK(rec->summary.empty());
    CHECK(rec->last_updated_turn == 1);
    store = register_entities(store, {{0, 7, PiiKind::Person, "Florian"}}, 4);
    CHECK(store.find("florian")->last_updated_turn == 1);
}

TEST_CASE("update cadence") {
    EntityStore store;
    store.update_every = 10;
    CHECK_FALSE(is_update_turn(store, 0));
    CHECK_FALSE(is_update_turn(store, 9));
    CHECK(is_update_turn(store, 10));
    CHECK_FALSE(is_update_turn(store, 15));
    CHECK(is_update_turn(store, 20));
    store.update_every = 0;
    CHECK_FALSE(is_update_turn(store, 10));
}

TEST_CASE("only user turns mentioning an entity trigger its summary") {
    EntityStore store;
    store = register_entities(store, {{0, 7, PiiKind::Person, "Florian"}, {0, 4, PiiKind::Person, "Cora"}}, 1);
    const std::vector<Turn> history = {user(0, "Florian keeps yelling at me."), assistant(1, "How is Cora?"),
                                       user(2, "The Floriansons live next door.")};
    CHECK(mentioned_entities(store, history) == std::vector<std::string>{"florian"});

    auto llm = llm::mock::make_echo_llm();
    const auto resolve = [](const std::string& key) { return key == "florian" ? std::string("Florian") : key; };
    store = maybe_update_entities(store, history, *llm, 9, resolve);
    CHECK(store.find("florian")->summary.empty());
    CHECK(llm->call_count() == 0);

    store = maybe_update_entities(store, history, *llm, 10, resolve);
    CHECK(llm->call_count() == 1);
    CHECK(store.find("florian")->summary == "Florian was mentioned by the user: Florian keeps yelling at me.");
    CHECK(store.find("florian")->last_updated_turn == 10);
    CHECK(store.find("cora")->summary.empty());
    CHECK(store.find("cora")->last_updated_turn == 1);

    // no new information: summary echoed verbatim, timestamp still advances
    const std::string before = store.find("florian")->summary;
    store = maybe_update_entities(store, history, *llm, 20, resolve);
    CHECK(store.find("florian")->summary == before);
    CHECK(store.find("florian")->last_updated_turn == 20);
}

TEST_CASE("summarization failure leaves every record unchanged") {
    EntityStore store;
    store = register_entities(store, {{0, 4, PiiKind::Person, "Alba"}, {0, 4, PiiKind::Person, "Cora"}}, 1);
    const auto before = store;
    llm::ScriptedLlm one_reply({"Alba is a friend."});
    const std::vector<Turn> history = {user(0, "Alba and Cora argued.")};
    CHECK_THROWS_CODE(update_entities(store, history, one_reply, 10), ErrorCode::ScriptExhausted);
    CHECK(store == before);
}

TEST_CASE("lookup matches whole tokens, case-insensitively") {
    EntityStore store;
    store.records["florian"] = {"florian", "Florian is the user's brother.", 10};
    CHECK(lookup_entities("I saw florian today", store).size() == 1);
    CHECK(lookup_entities("What about Florian?", store).size() == 1);
    CHECK(lookup_entities("The Floriansons moved", store).empty());
    CHECK(lookup_entities("", store).empty());
}

TEST_CASE("entity snapshot round-trip") {
    EntityStore store;
    store.update_every = 5;
    store.records["alba"] = {"alba", "Alba is a coworker.", 5};
    store.records["cora"] = {"cora", "", 2};
    const auto j = entity_snapshot(store, "sess");
    CHECK(j["session_id"] == "sess");
    CHECK(entity_store_from_snapshot(j, 5) == store);
}

TEST_CASE("roles and turn serialization") {
    CHECK(parse_role("Therapist") == Role::Assistant);
    CHECK(parse_role("USER") == Role::User);
    CHECK_THROWS_CODE(parse_role("narrator"), ErrorCode::ParseError);
    const Turn t{3, Role::Assistant, "hello", 1700000000000};
    const nlohmann::json j = t;
    CHECK(j.get<Turn>() == t);
}
