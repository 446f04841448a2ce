#include "confidant/preference.hpp"

#include <cmath>
#include <cstdlib>

#include "confidant/error.hpp"
#include "confidant/text.hpp"

namespace confidant::preference {

namespace {

void require_finite(const Logits& l) {
    if (!std::isfinite(l.a) || !std::isfinite(l.b)) throw Error(ErrorCode::RemoteError, "scorer returned a non-finite logit");
}

}  // namespace

void to_json(nlohmann::json& j, const Comparison& c) {
    j = {{"winner", c.winner},
         {"tie", c.tie},
         {"averaged", {c.averaged.a, c.averaged.b}},
         {"forward", {c.forward.a, c.forward.b}},
         {"reversed", {c.reversed.a, c.reversed.b}}};
}

Comparison compare_with_reversal(const PairwiseScorer& scorer, std::string_view question, std::string_view r1,
                                 std::string_view r2) {
    Comparison c;
    c.forward = scorer.score(question, r1, r2);
    c.reversed = scorer.score(question, r2, r1);
    require_finite(c.forward);
    require_finite(c.reversed);
    // In the reversed call r1 sits in position b.
    c.averaged = {(c.forward.a + c.reversed.b) / 2.0, (c.forward.b + c.reversed.a) / 2.0};
    c.tie = c.averaged.a == c.averaged.b;
    c.winner = c.averaged.b > c.averaged.a ? 2 : 1;
    return c;
}

Logits LengthHeuristicScorer::score(std::string_view, std::string_view response_a,
                                    std::string_view response_b) const {
    const double na = static_cast<double>(text::word_tokens(response_a).size());
    const double nb = static_cast<double>(text::word_tokens(response_b).size());
    const double total = na + nb;
    Logits l = total == 0.0 ? Logits{0.5, 0.5} : Logits{na / total, nb / total};
    l.a += bias_;
    return l;
}

RemoteScorerOptions RemoteScorerOptions::from_env() {
    RemoteScorerOptions o;
    if (const char* v = std::getenv("SCORER_BASE_URL")) o.base_url = v;
    return o;
}

Logits RemoteScorer::score(std::string_view question, std::string_view response_a,
                           std::string_view response_b) const {
    if (options_.base_url.empty()) throw Error(ErrorCode::RemoteError, "SCORER_BASE_URL is not set");
    http::PostOptions post;
    post.timeout_seconds = options_.timeout_seconds;
    post.retry = options_.retry;
    const nlohmann::json body = {{"question", question}, {"response_a", response_a}, {"response_b", response_b}};
    const auto reply = http::post_json(options_.base_url, "/compare", body, post);
    try {
        return {reply.at("logit_a").get<double>(), reply.at("logit_b").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::RemoteError, std::string("unexpected scorer reply: ") + e.what());
    }
}

}  // namespace confidant::preference
