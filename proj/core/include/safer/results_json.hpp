#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safer {

using Record = nlohmann::ordered_json;

enum class FieldType {
  String,
  Integer,  ///< accepts JSON integers, integral doubles, and numeric strings
  Id,       ///< string or integer, normalized to string
};

struct FieldSpec {
  std::string name;
  FieldType type = FieldType::String;
  bool required = true;
  long min_value = 0;    ///< Integer only
  long max_value = -1;   ///< Integer only; max < min disables the range check
  std::vector<std::string> aliases;  ///< alternative key spellings
};

using FieldSchema = std::vector<FieldSpec>;

struct RejectedRecord {
  std::size_t index = 0;
  Record record;
  std::vector<std::string> reasons;
};

struct ParsedResults {
  std::vector<Record> records;  ///< schema-valid, fields normalized
  std::vector<RejectedRecord> rejected;
};

/// Parses JSON leniently: missing commas, trailing commas, mismatched closing
/// brackets, raw newlines in strings, and an object that holds bare values
/// (read as a list) are tolerated. Returns std::nullopt when no value can be
/// read. `consumed` receives the number of characters used.
[[nodiscard]] std::optional<nlohmann::ordered_json> parse_lenient_json(std::string_view text,
                                                                       std::size_t* consumed = nullptr);

/// First outermost JSON value in model output, fences and prose skipped.
/// Throws NoJsonFound.
[[nodiscard]] nlohmann::ordered_json locate_json_value(std::string_view raw);

/// Locates the outermost JSON value in model output (code fences and leading
/// prose are skipped) and returns the value under "results".
/// Throws NoJsonFound or MissingResultsRoot.
[[nodiscard]] nlohmann::ordered_json locate_results(std::string_view raw);

/// locate_results + per-record validation. "results" may be a list of records
/// or a map whose values are records. Records failing the schema are returned
/// individually in `rejected` with reasons.
[[nodiscard]] ParsedResults parse_results_json(std::string_view raw, const FieldSchema& schema);

/// Canonical {"results":[...]} rendering.
[[nodiscard]] std::string render_results_json(const std::vector<Record>& records);

}  // namespace safer
