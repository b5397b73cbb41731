#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace facebench::csv {

/// Splits one CSV line. Fields may be double-quoted ("" escapes a quote).
/// A trailing '\r' is dropped.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field only when it contains a comma, quote or line break.
std::string escape(std::string_view field);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Strict full-field numeric parse; throws facebench::Error(Data) naming `context`.
double parse_double(std::string_view text, std::string_view context);

}  // namespace facebench::csv
