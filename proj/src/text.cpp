#include "confidant/text.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "confidant/error.hpp"

namespace confidant {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::PlaceholderCollision: return "PlaceholderCollision";
        case ErrorCode::InvalidSpans: return "InvalidSpans";
        case ErrorCode::PrivacyLeak: return "PrivacyLeak";
        case ErrorCode::RemoteError: return "RemoteError";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NegativeCount: return "NegativeCount";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::EmptyKnowledgeBase: return "EmptyKnowledgeBase";
        case ErrorCode::IndexGap: return "IndexGap";
        case ErrorCode::ScriptExhausted: return "ScriptExhausted";
        case ErrorCode::TemplateSlotMissing: return "TemplateSlotMissing";
        case ErrorCode::TemplateNotFound: return "TemplateNotFound";
        case ErrorCode::NoWords: return "NoWords";
        case ErrorCode::NoSentences: return "NoSentences";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::BothZeroVariance: return "BothZeroVariance";
        case ErrorCode::ScenarioParseError: return "ScenarioParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::SessionNotFound: return "SessionNotFound";
        case ErrorCode::StorageError: return "StorageError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

namespace text {

bool is_word_byte(unsigned char c) noexcept {
    return std::isalnum(c) != 0 || c >= 0x80;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : s) {
        if (is_word_byte(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

bool at_token_boundary(std::string_view s, std::size_t pos, std::size_t len) noexcept {
    if (pos > 0 && is_word_byte(static_cast<unsigned char>(s[pos - 1]))) return false;
    const std::size_t end = pos + len;
    if (end < s.size() && is_word_byte(static_cast<unsigned char>(s[end]))) return false;
    return true;
}

bool contains_token_sequence(std::string_view haystack, std::string_view needle) {
    const auto needle_tokens = word_tokens(needle);
    if (needle_tokens.empty()) return false;
    const auto hay_tokens = word_tokens(haystack);
    if (hay_tokens.size() < needle_tokens.size()) return false;
    return std::search(hay_tokens.begin(), hay_tokens.end(), needle_tokens.begin(),
                       needle_tokens.end()) != hay_tokens.end();
}

std::size_t find_whole_token(std::string_view haystack, std::string_view needle,
                             std::size_t from) noexcept {
    if (needle.empty()) return std::string_view::npos;
    std::size_t pos = haystack.find(needle, from);
    while (pos != std::string_view::npos) {
        if (at_token_boundary(haystack, pos, needle.size())) return pos;
        pos = haystack.find(needle, pos + 1);
    }
    return std::string_view::npos;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < s.size()) lines.emplace_back(s.substr(start));
            break;
        }
        std::string_view line = s.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::StorageError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (fd < 0) throw Error(ErrorCode::StorageError, "cannot write " + tmp);
    std::size_t written = 0;
    while (written < contents.size()) {
        ssize_t n = ::write(fd, contents.data() + written, contents.size() - written);
        if (n < 0) {
            ::close(fd);
            throw Error(ErrorCode::StorageError, "short write to " + tmp);
        }
        written += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw Error(ErrorCode::StorageError, "cannot rename " + tmp + " to " + path);
    }
}

}  // namespace text
}  // namespace confidant
