#pragma once

#include <string>
#include <string_view>
#include <utility>

#include <nlohmann/json.hpp>

#include "confidant/http.hpp"

namespace confidant::preference {

struct Logits {
    double a = 0.0;
    double b = 0.0;

    bool operator==(const Logits&) const = default;
};

// Scores two responses to one question: (logit for A, logit for B).
class PairwiseScorer {
public:
    virtual ~PairwiseScorer() = default;
    virtual Logits score(std::string_view question, std::string_view response_a,
                         std::string_view response_b) const = 0;
};

struct Comparison {
    int winner = 1;          // 1 or 2, in the caller's argument order
    Logits averaged;         // (score of r1, score of r2)
    bool tie = false;
    Logits forward;          // scorer(q, r1, r2)
    Logits reversed;         // scorer(q, r2, r1)
};

void to_json(nlohmann::json& j, const Comparison& c);

/// Position-debiased comparison: scores (r1, r2) and (r2, r1) and averages the
/// logits belonging to the same response. A tie goes to r1. Non-finite logits
/// are a RemoteError.
Comparison compare_with_reversal(const PairwiseScorer& scorer, std::string_view question, std::string_view r1,
                                 std::string_view r2);

/// Offline stand-in: each logit is the response's share of the combined word
/// count, plus `first_position_bias` for whichever response comes first.
class LengthHeuristicScorer final : public PairwiseScorer {
public:
    explicit LengthHeuristicScorer(double first_position_bias = 0.0) : bias_(first_position_bias) {}

    Logits score(std::string_view question, std::string_view response_a,
                 std::string_view response_b) const override;

private:
    double bias_;
};

struct RemoteScorerOptions {
    std::string base_url;  // SCORER_BASE_URL
    int timeout_seconds = 30;
    http::RetryPolicy retry;

    static RemoteScorerOptions from_env();
};

// POST {base_url}/compare {"question","response_a","response_b"} -> {"logit_a","logit_b"}.
class RemoteScorer final : public PairwiseScorer {
public:
    explicit RemoteScorer(RemoteScorerOptions options) : options_(std::move(options)) {}

    Logits score(std::string_view question, std::string_view response_a,
                 std::string_view response_b) const override;

private:
    RemoteScorerOptions options_;
};

}  // namespace confidant::preference
