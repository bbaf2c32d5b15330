#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules.
namespace clearline::text {

std::string_view trim(std::string_view s);

// ASCII case folding; non-ASCII bytes pass through unchanged.
std::string casefold(std::string_view s);

std::vector<std::string_view> split_whitespace(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

/// Rounds half away from zero to `decimals` places.
double round_half_away(double value, int decimals);

/// Fixed-point rendering after half-away-from-zero rounding, e.g. (0.9189, 2) -> "0.92".
std::string format_fixed(double value, int decimals);

}  // namespace clearline::text
