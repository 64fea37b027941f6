#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace evocr {

/// Splits on '\n', dropping a trailing '\r' per line. A final newline does not
/// produce an empty trailing line.
std::vector<std::string> split_lines(std::string_view text);
/// Whitespace-separated tokens; runs of whitespace count as one separator.
std::vector<std::string> split_words(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);
std::uint64_t parse_u64(std::string_view s);
std::int64_t parse_i64(std::string_view s);

}  // namespace evocr
