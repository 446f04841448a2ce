#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sys/stat.h>

#include "confidant/error.hpp"
#include "confidant/persistence.hpp"
#include "confidant/text.hpp"
#include "test_helpers.hpp"

using namespace confidant;
using namespace confidant::persistence;
using confidant::testing::echo_resources;
namespace fs = std::filesystem;

namespace {

// Runs `n` exchanges through the engine, committing each like the service does.
pipeline::ConversationState run_session(const pipeline::Engine& engine, SessionStore& store, const std::string& id,
                                        int n, pipeline::SessionConfig cfg = {}) {
    auto state = engine.new_conversation(id, cfg);
    store.create(state, 1700000000000);
    const std::vector<std::string> lines = {"I argued with Derek on Monday.", "Maria thinks I should apologize.",
                                            "I feel tired.", "Derek lives in Boston now."};
    for (int i = 0; i < n; ++i) {
        const auto before = state.log.size();
        const auto r = engine.respond(state, lines[static_cast<std::size_t>(i) % lines.size()]);
        store.commit(state, {state.log.begin() + static_cast<long>(before), state.log.end()}, &r.trace);
    }
    return state;
}

}  // namespace

TEST_CASE("a committed session reloads to the same state") {
    testing::TempDir dir;
    SessionStore store(dir.str());
    const pipeline::Engine engine(echo_resources());
    pipeline::SessionConfig cfg;
    cfg.update_every = 3;
    cfg.short_term_n = 2;
    const auto state = run_session(engine, store, "abc", 7, cfg);
    CHECK(store.exists("abc"));
    const auto loaded = store.load("abc");
    CHECK(loaded == state);
    CHECK(store.load_traces("abc").size() == 7);
    CHECK(store.created_at("abc") == 1700000000000);

    // Writing the reloaded state again reproduces the snapshot files byte for byte.
    testing::TempDir other;
    SessionStore copy(other.str());
    copy.create(loaded, 1700000000000);
    copy.commit(loaded, {}, nullptr);
    for (const char* f : {"/entities.json", "/session.json"}) {
        CHECK(text::read_file(copy.session_dir("abc") + f) == text::read_file(store.session_dir("abc") + f));
    }
    CHECK(text::read_file(copy.private_dir("abc") + "/map.json") ==
          text::read_file(store.private_dir("abc") + "/map.json"));
}

TEST_CASE("raw PII stays out of the session directory") {
    testing::TempDir dir;
    SessionStore store(dir.str());
    const pipeline::Engine engine(echo_resources());
    run_session(engine, store, "pii", 4);
    for (const auto& entry : fs::recursive_directory_iterator(store.session_dir("pii"))) {
        if (!entry.is_regular_file()) continue;
        const auto body = text::read_file(entry.path().string());
        CAPTURE(entry.path().string());
        CHECK(text::find_whole_token(body, "Derek") == std::string::npos);
        CHECK(text::find_whole_token(body, "Boston") == std::string::npos);
    }
    CHECK(text::read_file(store.private_dir("pii") + "/map.json").find("Derek") != std::string::npos);
    struct stat st {};
    REQUIRE(::stat((dir.str() + "/private").c_str(), &st) == 0);
    CHECK((st.st_mode & 0777) == 0700);
}

TEST_CASE("a torn log tail is dropped on load") {
    testing::TempDir dir;
    SessionStore store(dir.str());
    const pipeline::Engine engine(echo_resources());
    const auto state = run_session(engine, store, "torn", 3);
    const std::string log = store.session_dir("torn") + "/log.jsonl";
    const auto intact = text::read_file(log);
    {
        std::ofstream out(log, std::ios::app | std::ios::binary);
        out << R"({"type":"turn","turn":{"index":6,"ro)";
    }
    CHECK(store.load("torn") == state);
    CHECK(text::read_file(log) == intact);
}

TEST_CASE("missing and invalid sessions") {
    testing::TempDir dir;
    SessionStore store(dir.str());
    CHECK_FALSE(store.exists("nobody"));
    CHECK_THROWS_CODE(store.load("nobody"), ErrorCode::SessionNotFound);
    CHECK_THROWS_CODE(store.load("../etc"), ErrorCode::ValidationError);
    CHECK_THROWS_CODE(check_session_id(""), ErrorCode::ValidationError);
    CHECK_THROWS_CODE(check_session_id("a/b"), ErrorCode::ValidationError);
    check_session_id("Ok_id-9");

    const auto id = new_session_id();
    CHECK(id.size() == 32);
    CHECK(id.find_first_not_of("0123456789abcdef") == std::string::npos);
    CHECK(new_session_id() != id);

    // a directory without session.json is an unfinished create
    fs::create_directories(store.session_dir("half"));
    CHECK_FALSE(store.exists("half"));
}

TEST_CASE("remove and list") {
    testing::TempDir dir;
    SessionStore store(dir.str());
    const pipeline::Engine engine(echo_resources());
    run_session(engine, store, "one", 1);
    run_session(engine, store, "two", 1);
    auto ids = store.list();
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<std::string>{"one", "two"});
    store.remove("one");
    CHECK_FALSE(store.exists("one"));
    CHECK_FALSE(fs::exists(store.private_dir("one")));
    CHECK(store.list() == std::vector<std::string>{"two"});
    CHECK_THROWS_CODE(store.remove("one"), ErrorCode::SessionNotFound);
}
