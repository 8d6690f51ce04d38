#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace safer {

struct PromptResource {
  std::string tag;             ///< e.g. "architecture_model", "ARCHITECTURE"
  nlohmann::ordered_json body; ///< strings render verbatim, anything else as indented JSON
};

struct PromptRow {
  std::string req_id;
  std::string text;
};

/// Everything a single generative call needs. Construction validates:
/// tags are non-empty and free of '<', '>' and whitespace, and every row has a
/// non-empty id. Throws Error(InvalidEnvelope).
class PromptEnvelope {
 public:
  PromptEnvelope(std::string instructions, std::vector<PromptResource> resources,
                 std::string dataset_name, std::vector<PromptRow> rows);

  [[nodiscard]] const std::string& instructions() const noexcept { return instructions_; }
  [[nodiscard]] const std::vector<PromptResource>& resources() const noexcept { return resources_; }
  [[nodiscard]] const std::string& dataset_name() const noexcept { return dataset_name_; }
  [[nodiscard]] const std::vector<PromptRow>& rows() const noexcept { return rows_; }

 private:
  std::string instructions_;
  std::vector<PromptResource> resources_;
  std::string dataset_name_;
  std::vector<PromptRow> rows_;
};

/// Deterministic rendering: instructions, then a RESOURCES block with each
/// resource wrapped in its own tag (declared order), then the rows under a tag
/// named after the dataset. Rows render as "ReqID: <id>" followed by the row
/// text, separated by blank lines; row order is preserved.
[[nodiscard]] std::string assemble_prompt(const PromptEnvelope& envelope);

}  // namespace safer
