#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stackinsights::csv {

// Minimal RFC 4180 field handling: quotes fields containing ',', '"' or newlines.
std::string escape(std::string_view field);
std::vector<std::string> split_line(std::string_view line);

// Shortest text that parses back to the same double.
std::string number(double v);
double parse_number(std::string_view text);

}  // namespace stackinsights::csv
