#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace alaam {

// Shortest round-trip decimal form of x ("NA" for NaN, "inf"/"-inf").
std::string format_double(double x);
std::string format_optional(const std::optional<double>& x);

std::vector<std::string> split_fields(std::string_view line, char delimiter);
std::vector<std::string> split_whitespace(std::string_view line);
std::string_view trim(std::string_view s);

// Strict numeric parse of the whole token.
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_integer(std::string_view token);

}  // namespace alaam
