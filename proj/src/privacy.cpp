#include "confidant/privacy.hpp"

#include <algorithm>

#include "confidant/error.hpp"
#include "confidant/text.hpp"

namespace confidant::privacy {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

const char* kWeekdays =
    R"(\b(?:Monday|Tuesday|Wednesday|Thursday|Friday|Saturday|Sunday)s?\b)";
const char* kMonthDay =
    R"(\b(?:January|February|March|April|May|June|July|August|September|October|November|December|)"
    R"(Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec)\.? \d{1,2}(?:st|nd|rd|th)?(?:,? \d{4})?\b)";
const char* kNumericDate = R"(\b\d{1,2}/\d{1,2}/(?:\d{4}|\d{2})\b)";
const char* kIsoDate = R"(\b\d{4}-\d{2}-\d{2}\b)";
const char* kEmail = R"(\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b)";
const char* kPhone = R"(\b(?:\+?1[-. ])?\(?\d{3}\)?[-. ]\d{3}[-. ]\d{4}\b)";

std::vector<PiiSpan> resolve_overlaps(std::vector<PiiSpan> candidates) {
    std::sort(candidates.begin(), candidates.end(), [](const PiiSpan& a, const PiiSpan& b) {
        if (a.start != b.start) return a.start < b.start;
        return (a.end - a.start) > (b.end - b.start);
    });
    std::vector<PiiSpan> out;
    std::size_t covered_to = 0;
    for (auto& c : candidates) {
        if (!out.empty() && c.start < covered_to) continue;
        covered_to = c.end;
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

std::string_view to_string(PiiKind kind) {
    switch (kind) {
        case PiiKind::Person: return "Person";
        case PiiKind::Location: return "Location";
        case PiiKind::DateTime: return "DateTime";
        case PiiKind::Other: return "Other";
    }
    return "Other";
}

PiiKind parse_kind(std::string_view name) {
    const std::string lower = text::to_lower(name);
    if (lower == "person") return PiiKind::Person;
    if (lower == "location") return PiiKind::Location;
    if (lower == "datetime") return PiiKind::DateTime;
    if (lower == "other") return PiiKind::Other;
    throw Error(ErrorCode::ParseError, "unknown PII kind '" + std::string(name) + "'");
}

void validate_spans(std::string_view text, const std::vector<PiiSpan>& spans) {
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto& s = spans[i];
        if (s.start >= s.end || s.end > text.size()) {
            throw Error(ErrorCode::InvalidSpans, "span out of range at index " + std::to_string(i));
        }
        if (i > 0 && s.start < prev_end) {
            throw Error(ErrorCode::InvalidSpans,
                        "overlapping or unsorted span at index " + std::to_string(i));
        }
        if (text.substr(s.start, s.end - s.start) != s.surface) {
            throw Error(ErrorCode::InvalidSpans, "span surface mismatch at index " + std::to_string(i));
        }
        prev_end = s.end;
    }
}

std::vector<LexiconEntry> parse_lexicon(std::string_view contents) {
    std::vector<LexiconEntry> out;
    const auto lines = text::split_lines(contents);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(i + 1) + ": expected kind<TAB>surface");
        }
        std::string surface = text::trim(std::string_view(line).substr(tab + 1));
        if (surface.empty()) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(i + 1) + ": empty surface");
        }
        out.push_back({parse_kind(text::trim(std::string_view(line).substr(0, tab))), std::move(surface)});
    }
    return out;
}

std::vector<LexiconEntry> load_lexicon(const std::string& path) {
    return parse_lexicon(text::read_file(path));
}

RuleBasedDetector::RuleBasedDetector(std::vector<LexiconEntry> gazetteer, bool builtin_patterns)
    : gazetteer_(std::move(gazetteer)) {
    if (builtin_patterns) {
        patterns_.emplace_back(std::regex(kWeekdays), PiiKind::DateTime);
        patterns_.emplace_back(std::regex(kMonthDay), PiiKind::DateTime);
        patterns_.emplace_back(std::regex(kNumericDate), PiiKind::DateTime);
        patterns_.emplace_back(std::regex(kIsoDate), PiiKind::DateTime);
        patterns_.emplace_back(std::regex(kEmail), PiiKind::Other);
        patterns_.emplace_back(std::regex(kPhone), PiiKind::Other);
    }
}

std::vector<PiiSpan> RuleBasedDetector::detect(std::string_view text) const {
    std::vector<PiiSpan> candidates;
    for (const auto& entry : gazetteer_) {
        std::size_t pos = text::find_whole_token(text, entry.surface);
        while (pos != std::string_view::npos) {
            candidates.push_back({pos, pos + entry.surface.size(), entry.kind, entry.surface});
            pos = text::find_whole_token(text, entry.surface, pos + 1);
        }
    }
    const std::string owned(text);
    for (const auto& [re, kind] : patterns_) {
        for (auto it = std::sregex_iterator(owned.begin(), owned.end(), re); it != std::sregex_iterator(); ++it) {
            const auto start = static_cast<std::size_t>(it->position(0));
            const auto len = static_cast<std::size_t>(it->length(0));
            if (len == 0) continue;
            candidates.push_back({start, start + len, kind, it->str(0)});
        }
    }
    return resolve_overlaps(std::move(candidates));
}

std::vector<PiiSpan> ExternalNerDetector::detect(std::string_view text) const {
    auto spans = backend_(text);
    std::stable_sort(spans.begin(), spans.end(),
                     [](const PiiSpan& a, const PiiSpan& b) { return a.start < b.start; });
    validate_spans(text, spans);
    return spans;
}

std::vector<PiiSpan> detect_pii(std::string_view text, const PiiDetector& detector) {
    if (text.empty()) return {};
    auto spans = detector.detect(text);
    validate_spans(text, spans);
    return spans;
}

SurrogatePools::SurrogatePools(const std::vector<LexiconEntry>& entries) {
    for (const auto& e : entries) {
        auto& pool = pools_[e.kind];
        if (std::find(pool.begin(), pool.end(), e.surface) == pool.end()) pool.push_back(e.surface);
    }
}

const std::vector<std::string>& SurrogatePools::pool(PiiKind kind) const {
    static const std::vector<std::string> empty;
    auto it = pools_.find(kind);
    return it == pools_.end() ? empty : it->second;
}

AnonymizationMap::AnonymizationMap(std::string session_id, std::uint64_t seed)
    : session_id_(std::move(session_id)), seed_(seed) {}

const std::string* AnonymizationMap::placeholder_for(std::string_view surface, PiiKind kind) const {
    auto it = forward_.find({std::string(surface), kind});
    return it == forward_.end() ? nullptr : &entries_[it->second].placeholder;
}

const std::string* AnonymizationMap::original_for(std::string_view placeholder) const {
    auto it = reverse_.find(placeholder);
    return it == reverse_.end() ? nullptr : &entries_[it->second].surface;
}

std::optional<AnonymizationMap::Entry> AnonymizationMap::entry_for_key(std::string_view folded) const {
    for (const auto& e : entries_) {
        if (text::to_lower(e.placeholder) == folded) return e;
    }
    return std::nullopt;
}

bool AnonymizationMap::has_placeholder(std::string_view s) const {
    return reverse_.find(s) != reverse_.end();
}

bool AnonymizationMap::has_original(std::string_view s) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.surface == s; });
}

void AnonymizationMap::insert(std::string surface, PiiKind kind, std::string placeholder) {
    if (forward_.count({surface, kind}) != 0) return;
    if (has_placeholder(placeholder) || has_original(placeholder)) {
        throw Error(ErrorCode::PlaceholderCollision, "placeholder already in use");
    }
    if (has_placeholder(surface) || surface == placeholder) {
        throw Error(ErrorCode::PlaceholderCollision,
                    "detected surface coincides with an existing placeholder");
    }
    const std::size_t idx = entries_.size();
    entries_.push_back({std::move(surface), kind, std::move(placeholder)});
    forward_[{entries_.back().surface, kind}] = idx;
    reverse_[entries_.back().placeholder] = idx;
}

std::uint64_t AnonymizationMap::next_random() {
    return splitmix64(seed_ ^ splitmix64(draws_++));
}

bool AnonymizationMap::operator==(const AnonymizationMap& other) const {
    return session_id_ == other.session_id_ && seed_ == other.seed_ && draws_ == other.draws_ &&
           entries_ == other.entries_;
}

void to_json(nlohmann::json& j, const AnonymizationMap& m) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : m.entries_) {
        entries.push_back({{"surface", e.surface}, {"kind", to_string(e.kind)}, {"placeholder", e.placeholder}});
    }
    j = {{"session_id", m.session_id_}, {"rng_seed", m.seed_}, {"draws", m.draws_}, {"entries", entries}};
}

void from_json(const nlohmann::json& j, AnonymizationMap& m) {
    m = AnonymizationMap(j.at("session_id").get<std::string>(), j.at("rng_seed").get<std::uint64_t>());
    for (const auto& e : j.at("entries")) {
        m.insert(e.at("surface").get<std::string>(), parse_kind(e.at("kind").get<std::string>()),
                 e.at("placeholder").get<std::string>());
    }
    m.draws_ = j.at("draws").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const PiiSpan& s) {
    j = {{"start", s.start}, {"end", s.end}, {"kind", to_string(s.kind)}, {"surface", s.surface}};
}

namespace {

std::string draw_surrogate(std::string_view text, const PiiSpan& span, const std::vector<PiiSpan>& spans,
                           AnonymizationMap& map, const SurrogatePools& pools) {
    std::vector<const std::string*> candidates;
    for (const auto& value : pools.pool(span.kind)) {
        if (!map.has_placeholder(value) && !map.has_original(value)) candidates.push_back(&value);
    }
    if (candidates.empty()) {
        throw Error(ErrorCode::PlaceholderCollision,
                    "surrogate pool exhausted for kind " + std::string(to_string(span.kind)));
    }
    for (int attempt = 0; attempt < kMaxSurrogateAttempts; ++attempt) {
        const std::string& pick = *candidates[map.next_random() % candidates.size()];
        const bool in_text = text.find(pick) != std::string_view::npos;
        const bool is_surface = std::any_of(spans.begin(), spans.end(),
                                            [&](const PiiSpan& s) { return s.surface == pick; });
        if (!in_text && !is_surface) return pick;
    }
    throw Error(ErrorCode::PlaceholderCollision,
                "no collision-free surrogate after " + std::to_string(kMaxSurrogateAttempts) + " attempts");
}

}  // namespace

AnonymizedText anonymize(std::string_view text, const std::vector<PiiSpan>& spans, AnonymizationMap& map,
                         const SurrogatePools& pools) {
    validate_spans(text, spans);
    if (spans.empty()) return {std::string(text), {}};

    AnonymizationMap working = map;
    AnonymizedText out;
    out.text.reserve(text.size());
    std::size_t cursor = 0;
    for (const auto& span : spans) {
        out.text.append(text.substr(cursor, span.start - cursor));
        const std::string* existing = working.placeholder_for(span.surface, span.kind);
        std::string placeholder;
        if (existing != nullptr) {
            placeholder = *existing;
        } else {
            if (working.has_placeholder(span.surface)) {
                throw Error(ErrorCode::PlaceholderCollision,
                            "detected surface coincides with an existing placeholder");
            }
            placeholder = draw_surrogate(text, span, spans, working, pools);
            working.insert(span.surface, span.kind, placeholder);
        }
        const std::size_t at = out.text.size();
        out.text.append(placeholder);
        out.spans.push_back({at, at + placeholder.size(), span.kind, placeholder});
        cursor = span.end;
    }
    out.text.append(text.substr(cursor));

    // Words that already equal an older placeholder are ambiguous before this
    // call; only ambiguity introduced by the new surrogates is an error.
    if (restore(out.text, working) != restore(text, map)) {
        throw Error(ErrorCode::PlaceholderCollision, "anonymized text does not restore unambiguously");
    }
    map = std::move(working);
    return out;
}

std::string restore(std::string_view text, const AnonymizationMap& map) {
    if (map.size() == 0 || text.empty()) return std::string(text);
    std::vector<const AnonymizationMap::Entry*> by_length;
    by_length.reserve(map.size());
    for (const auto& e : map.entries()) by_length.push_back(&e);
    std::stable_sort(by_length.begin(), by_length.end(), [](const auto* a, const auto* b) {
        return a->placeholder.size() > b->placeholder.size();
    });

    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const bool token_start = i == 0 || !text::is_word_byte(static_cast<unsigned char>(text[i - 1]));
        bool replaced = false;
        if (token_start) {
            for (const auto* e : by_length) {
                const auto& ph = e->placeholder;
                if (text.compare(i, ph.size(), ph) == 0 && text::at_token_boundary(text, i, ph.size())) {
                    out.append(e->surface);
                    i += ph.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out.push_back(text[i++]);
    }
    return out;
}

std::vector<std::string> find_leaks(std::string_view payload, const AnonymizationMap& map) {
    std::vector<std::string> leaks;
    for (const auto& e : map.entries()) {
        if (text::find_whole_token(payload, e.surface) != std::string_view::npos &&
            std::find(leaks.begin(), leaks.end(), e.surface) == leaks.end()) {
            leaks.push_back(e.surface);
        }
    }
    return leaks;
}

}  // namespace confidant::privacy
