#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace confidant {

enum class ErrorCode {
    // privacy
    PlaceholderCollision,
    InvalidSpans,
    PrivacyLeak,
    // embedding / remote calls
    RemoteError,
    DimensionMismatch,
    // knowledge base
    NegativeCount,
    ParseError,
    EmptyCorpus,
    EmptyKnowledgeBase,
    // memory
    IndexGap,
    // llm
    ScriptExhausted,
    // prompts
    TemplateSlotMissing,
    TemplateNotFound,
    // evaluation
    NoWords,
    NoSentences,
    TooFewSamples,
    ZeroVariance,
    BothZeroVariance,
    ScenarioParseError,
    // service
    ValidationError,
    SessionNotFound,
    StorageError,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library. `stage()` is filled in by the
// response pipeline so callers can tell which step failed.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }
    void set_stage(std::string stage) { stage_ = std::move(stage); }

private:
    ErrorCode code_;
    std::string stage_;
};

}  // namespace confidant
