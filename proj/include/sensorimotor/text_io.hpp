#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sensorimotor {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Strict parse of a whole token; throws InvalidInput on trailing garbage.
double parse_double(std::string_view token);

std::vector<std::string_view> split(std::string_view line, char sep);

}  // namespace sensorimotor
