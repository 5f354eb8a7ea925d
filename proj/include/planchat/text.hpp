#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace planchat::text {

/// Up to two decimals, trailing zeros and a trailing point trimmed: 5 -> "5",
/// 5.50 -> "5.5", -0.004 -> "0".
std::string format_number(double v);

std::string to_lower(std::string_view s);

std::string trim(std::string_view s);

/// Lowercases and folds runs of whitespace, '_' and '-' into single spaces.
std::string normalize_phrase(std::string_view s);

/// Lowercased maximal alphanumeric runs.
std::vector<std::string> words(std::string_view s);

/// True if `needle` occurs in `haystack` on word boundaries (both normalized).
bool contains_phrase(std::string_view haystack, std::string_view needle);

}  // namespace planchat::text
