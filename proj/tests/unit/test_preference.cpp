#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "confidant/error.hpp"
#include "confidant/preference.hpp"
#include "stub_server.hpp"
#include "test_helpers.hpp"

using namespace confidant;
using namespace confidant::preference;

namespace {

// Logits looked up by (response_a, response_b).
class TableScorer final : public PairwiseScorer {
public:
    std::map<std::pair<std::string, std::string>, Logits> table;
    Logits score(std::string_view, std::string_view a, std::string_view b) const override {
        return table.at({std::string(a), std::string(b)});
    }
};

}  // namespace

TEST_CASE("reversal averaging on a hand-worked example") {
    TableScorer s;
    s.table[{"r1", "r2"}] = {0.8, 0.2};
    s.table[{"r2", "r1"}] = {0.3, 0.7};
    const auto c = compare_with_reversal(s, "q", "r1", "r2");
    CHECK(c.averaged.a == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(c.averaged.b == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(c.winner == 1);
    CHECK_FALSE(c.tie);
    CHECK(c.forward == Logits{0.8, 0.2});
    CHECK(c.reversed == Logits{0.3, 0.7});
}

TEST_CASE("ties go to the first argument and are flagged") {
    TableScorer s;
    s.table[{"x", "y"}] = {0.6, 0.4};
    s.table[{"y", "x"}] = {0.6, 0.4};
    const auto c = compare_with_reversal(s, "q", "x", "y");
    CHECK(c.tie);
    CHECK(c.winner == 1);
}

TEST_CASE("non-finite logits are rejected") {
    TableScorer s;
    s.table[{"x", "y"}] = {std::nan(""), 0.4};
    s.table[{"y", "x"}] = {0.6, 0.4};
    CHECK_THROWS_CODE(compare_with_reversal(s, "q", "x", "y"), ErrorCode::RemoteError);
}

TEST_CASE("property: swapping the responses picks the same one") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int round = 0; round < 500; ++round) {
        TableScorer s;
        s.table[{"p", "q"}] = {u(rng), u(rng)};
        s.table[{"q", "p"}] = {u(rng), u(rng)};
        const auto pq = compare_with_reversal(s, "question", "p", "q");
        const auto qp = compare_with_reversal(s, "question", "q", "p");
        CHECK(pq.averaged.a == qp.averaged.b);
        CHECK(pq.averaged.b == qp.averaged.a);
        if (!pq.tie) CHECK(pq.winner == 3 - qp.winner);
    }
}

TEST_CASE("length heuristic cancels its position bias under reversal") {
    const LengthHeuristicScorer biased(0.3);
    const std::string longer = "You could try keeping a short journal before bed each night.";
    const std::string shorter = "Sleep more.";
    const auto raw = biased.score("q", shorter, longer);
    CHECK(raw.a == doctest::Approx(2.0 / 13.0 + 0.3));
    CHECK(raw.b == doctest::Approx(11.0 / 13.0));
    const auto c = compare_with_reversal(biased, "q", shorter, longer);
    CHECK(c.winner == 2);
    CHECK(c.averaged.a == doctest::Approx(2.0 / 13.0 + 0.15));
    CHECK(c.averaged.b == doctest::Approx(11.0 / 13.0 + 0.15));
}

TEST_CASE("remote scorer protocol") {
    testing::StubServer stub;
    nlohmann::json seen;
    stub.server.Post("/compare", [&](const httplib::Request& req, httplib::Response& res) {
        seen = nlohmann::json::parse(req.body);
        const bool first_long = seen["response_a"].get<std::string>().size() > seen["response_b"].get<std::string>().size();
        res.set_content(nlohmann::json{{"logit_a", first_long ? 2.0 : -1.0}, {"logit_b", first_long ? -1.0 : 2.0}}.dump(),
                        "application/json");
    });
    stub.server.Post("/broken/compare", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"logit_a":1})", "application/json");
    });
    stub.start();

    RemoteScorerOptions opts;
    opts.base_url = stub.base_url();
    const RemoteScorer scorer(opts);
    const auto c = compare_with_reversal(scorer, "how?", "short", "much longer answer");
    CHECK(c.winner == 2);
    CHECK(c.averaged == Logits{-1.0, 2.0});
    CHECK(seen["question"] == "how?");

    opts.base_url = stub.base_url("/broken");
    CHECK_THROWS_CODE(RemoteScorer(opts).score("q", "a", "b"), ErrorCode::RemoteError);
    CHECK_THROWS_CODE(RemoteScorer(RemoteScorerOptions{}).score("q", "a", "b"), ErrorCode::RemoteError);
}

TEST_CASE("comparison serializes") {
    TableScorer s;
    s.table[{"r1", "r2"}] = {0.8, 0.2};
    s.table[{"r2", "r1"}] = {0.3, 0.7};
    const nlohmann::json j = compare_with_reversal(s, "q", "r1", "r2");
    CHECK(j["winner"] == 1);
    CHECK(j.contains("averaged"));
}
