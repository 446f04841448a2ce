#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace confidant::text {

// Bytes >= 0x80 are treated as word characters so multi-byte UTF-8 letters
// never split a token.
bool is_word_byte(unsigned char c) noexcept;

std::string to_lower(std::string_view s);

// Lowercased tokens made of word bytes; everything else separates tokens.
std::vector<std::string> word_tokens(std::string_view s);

// True when [pos, pos+len) is not glued to a word byte on either side.
bool at_token_boundary(std::string_view s, std::size_t pos, std::size_t len) noexcept;

// Case-folded whole-token containment of `needle` (which may itself span
// several tokens) inside `haystack`.
bool contains_token_sequence(std::string_view haystack, std::string_view needle);

// Case-sensitive whole-token search; returns npos when absent.
std::size_t find_whole_token(std::string_view haystack, std::string_view needle,
                             std::size_t from = 0) noexcept;

std::string trim(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view s);

std::string read_file(const std::string& path);

// Write-temp-then-rename so readers never see a torn file.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace confidant::text
