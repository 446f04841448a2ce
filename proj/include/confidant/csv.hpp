#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace confidant::csv {

struct Row {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line where the record starts
};

// RFC 4180: comma separated, double-quoted fields may contain commas,
// newlines and doubled quotes. Throws ParseError on an unterminated quote.
std::vector<Row> parse(std::string_view contents);

std::string escape(std::string_view field);

}  // namespace confidant::csv
