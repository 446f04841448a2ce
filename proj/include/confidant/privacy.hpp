#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace confidant::privacy {

enum class PiiKind { Person, Location, DateTime, Other };

std::string_view to_string(PiiKind kind);
PiiKind parse_kind(std::string_view name);

// Byte offsets into the text the span was detected in; `surface` is the slice.
struct PiiSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    PiiKind kind = PiiKind::Other;
    std::string surface;

    bool operator==(const PiiSpan&) const = default;
};

// Throws InvalidSpans unless spans are in range, sorted, non-overlapping and
// each surface equals its slice of `text`.
void validate_spans(std::string_view text, const std::vector<PiiSpan>& spans);

class PiiDetector {
public:
    virtual ~PiiDetector() = default;
    virtual std::vector<PiiSpan> detect(std::string_view text) const = 0;
};

struct LexiconEntry {
    PiiKind kind;
    std::string surface;
};

// `kind<TAB>surface` per line; blank lines and lines starting with '#' skipped.
std::vector<LexiconEntry> parse_lexicon(std::string_view contents);
std::vector<LexiconEntry> load_lexicon(const std::string& path);

/// Deterministic offline detector: case-sensitive whole-token gazetteer hits
/// plus regular expressions for weekdays, calendar dates, e-mail addresses and
/// phone numbers. When candidates overlap, the earliest start wins and ties go
/// to the longer match.
class RuleBasedDetector final : public PiiDetector {
public:
    explicit RuleBasedDetector(std::vector<LexiconEntry> gazetteer, bool builtin_patterns = true);

    std::vector<PiiSpan> detect(std::string_view text) const override;

    const std::vector<LexiconEntry>& gazetteer() const noexcept { return gazetteer_; }

private:
    std::vector<LexiconEntry> gazetteer_;
    std::vector<std::pair<std::regex, PiiKind>> patterns_;
};

// Adapter slot for an external NER service. Whatever the backend returns is
// sorted and validated; overlapping spans are rejected with InvalidSpans.
class ExternalNerDetector final : public PiiDetector {
public:
    using Backend = std::function<std::vector<PiiSpan>(std::string_view)>;

    explicit ExternalNerDetector(Backend backend) : backend_(std::move(backend)) {}

    std::vector<PiiSpan> detect(std::string_view text) const override;

private:
    Backend backend_;
};

std::vector<PiiSpan> detect_pii(std::string_view text, const PiiDetector& detector);

class SurrogatePools {
public:
    SurrogatePools() = default;
    explicit SurrogatePools(const std::vector<LexiconEntry>& entries);

    const std::vector<std::string>& pool(PiiKind kind) const;

private:
    std::map<PiiKind, std::vector<std::string>> pools_;
};

/// Session-scoped bijection between (surface, kind) pairs and placeholders.
/// Entries are kept in insertion order so serialization is byte-stable.
class AnonymizationMap {
public:
    struct Entry {
        std::string surface;
        PiiKind kind;
        std::string placeholder;

        bool operator==(const Entry&) const = default;
    };

    AnonymizationMap() = default;
    AnonymizationMap(std::string session_id, std::uint64_t seed);

    const std::string& session_id() const noexcept { return session_id_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t draws() const noexcept { return draws_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }

    const std::string* placeholder_for(std::string_view surface, PiiKind kind) const;
    const std::string* original_for(std::string_view placeholder) const;
    // Case-folded lookup, used for entity keys.
    std::optional<Entry> entry_for_key(std::string_view folded_placeholder) const;

    bool has_placeholder(std::string_view s) const;
    bool has_original(std::string_view s) const;

    // Enforces the bijection and the placeholder/original disjointness.
    void insert(std::string surface, PiiKind kind, std::string placeholder);

    // Next pseudo-random draw for surrogate selection; advances the counter.
    std::uint64_t next_random();

    bool operator==(const AnonymizationMap& other) const;

    friend void to_json(nlohmann::json& j, const AnonymizationMap& m);
    friend void from_json(const nlohmann::json& j, AnonymizationMap& m);

private:
    std::string session_id_;
    std::uint64_t seed_ = 0;
    std::uint64_t draws_ = 0;
    std::vector<Entry> entries_;
    std::map<std::pair<std::string, PiiKind>, std::size_t> forward_;
    std::map<std::string, std::size_t, std::less<>> reverse_;
};

struct AnonymizedText {
    std::string text;
    // Spans located in `text`; `surface` holds the placeholder.
    std::vector<PiiSpan> spans;
};

inline constexpr int kMaxSurrogateAttempts = 16;

/// Replaces every span with its session placeholder, drawing a new surrogate
/// from the kind's pool on first sight. Strong guarantee: `map` is untouched
/// when this throws.
AnonymizedText anonymize(std::string_view text, const std::vector<PiiSpan>& spans,
                         AnonymizationMap& map, const SurrogatePools& pools);

// Left-to-right scan; at each token start the longest matching placeholder
// wins. Unknown text passes through unchanged.
std::string restore(std::string_view text, const AnonymizationMap& map);

// Original surfaces that occur as whole tokens in `payload`.
std::vector<std::string> find_leaks(std::string_view payload, const AnonymizationMap& map);

void to_json(nlohmann::json& j, const PiiSpan& s);

}  // namespace confidant::privacy
