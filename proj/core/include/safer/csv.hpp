#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace safer::csv {

struct Row {
  std::size_t line = 0;  ///< 1-based physical line where the record starts
  std::vector<std::string> cells;
};

/// Parses comma-delimited text with RFC 4180 quoting (embedded commas,
/// doubled quotes, line breaks inside quotes). A leading UTF-8 BOM is dropped
/// and CRLF line endings are accepted. Blank lines are skipped.
/// Throws Error(MalformedCsv) on an unterminated quoted field.
[[nodiscard]] std::vector<Row> parse(std::string_view text);

/// Quotes a field only when it contains a delimiter, quote, or line break.
[[nodiscard]] std::string escape(std::string_view field);

/// One record terminated by '\n'.
[[nodiscard]] std::string format_row(const std::vector<std::string>& cells);

}  // namespace safer::csv
