#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bathy {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Strict full-field parse; rejects trailing garbage. Non-finite values are
/// returned as parsed, callers decide whether to admit them.
std::optional<double> parse_double(std::string_view field);

std::string_view trim(std::string_view s);

/// Splits on commas and/or runs of whitespace. Empty fields between two
/// commas are kept so that malformed rows can be detected.
std::vector<std::string_view> split_fields(std::string_view line);

}  // namespace bathy
