#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geomrec {

/// Shortest decimal string that round-trips to the same double.
[[nodiscard]] std::string format_double(double value);

/// Same, with an empty string for an absent value (CSV convention).
[[nodiscard]] std::string format_optional(const std::optional<double>& value);

/// CSV field, quoted (with doubled quotes) when it holds a comma, quote or newline.
[[nodiscard]] std::string csv_field(std::string_view text);

/**
 * @brief Parse a numeric grid or list.
 *
 * Accepts either `start:end:step` (inclusive of both ends when the step
 * divides the span; values are snapped to 12 decimals so 0.2:0.8:0.01 yields
 * exactly 61 clean values) or a comma separated list `0.6,0.5,0.4`.
 * Throws ParseError on malformed input.
 */
[[nodiscard]] std::vector<double> parse_grid(std::string_view text);

/// Comma separated list of integers.
[[nodiscard]] std::vector<int> parse_int_list(std::string_view text);

/// Strict full-string double parse; nullopt when any character is left over.
[[nodiscard]] std::optional<double> parse_double(std::string_view text);

}  // namespace geomrec
