#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attrib {

// Shortest decimal text that parses back to the same double.
std::string FormatNumber(double value);

// Parses a full string as a double ("inf", "-inf" accepted). Leading and
// trailing blanks are ignored; anything else fails.
std::optional<double> ParseNumber(std::string_view text);

std::string_view Trim(std::string_view text);
std::vector<std::string> SplitString(std::string_view text, char delimiter);
std::string ToLower(std::string_view text);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace attrib
