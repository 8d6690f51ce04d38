#pragma once

#include "safer/prompt.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace safer {

struct Requirement {
  std::string req_id;
  std::string text;  ///< single data column verbatim, or "col: value" lines for several
  std::map<std::string, std::string> extra;  ///< every non-id column by header name

  bool operator==(const Requirement&) const = default;
};

struct RequirementChunk {
  std::size_t index = 0;
  std::vector<Requirement> items;

  bool operator==(const RequirementChunk&) const = default;
};

struct RequirementSet {
  std::string dataset_name;
  std::string dataset_id;  ///< short content hash of the source bytes
  std::vector<Requirement> items;
};

/// Parses CSV text with a header row. Throws MissingColumn, DuplicateReqId,
/// EmptyDataset, EmptyRequirementText, or MalformedCsv.
[[nodiscard]] std::vector<Requirement> parse_requirements(std::string_view csv_text, const std::string& id_column,
                                                          const std::vector<std::string>& data_columns);

/// File wrapper around parse_requirements; also throws IoFailure.
[[nodiscard]] RequirementSet load_requirements(const std::filesystem::path& path, const std::string& id_column,
                                               const std::vector<std::string>& data_columns,
                                               std::string dataset_name = {});

/// Truncates to max_items (when >= 0) and splits into consecutive chunks of
/// chunk_size. Throws InvalidChunkSize.
[[nodiscard]] std::vector<RequirementChunk> chunk(const std::vector<Requirement>& reqs, long chunk_size,
                                                  long max_items = -1);

[[nodiscard]] std::vector<PromptRow> to_prompt_rows(const std::vector<Requirement>& reqs);

}  // namespace safer
