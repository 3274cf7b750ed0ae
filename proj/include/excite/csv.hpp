#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace excite::csv {

// Splits one CSV record. Fields may be double-quoted, with "" as an
// escaped quote. Throws input_error on an unterminated quote.
std::vector<std::string> split(std::string_view line);

// Quotes a field only when it contains a comma, quote, or newline.
std::string quote(std::string_view field);

// Shortest text that parses back to exactly `value`.
std::string format_exact(double value);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

}  // namespace excite::csv
