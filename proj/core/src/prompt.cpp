#include "safer/prompt.hpp"

#include "safer/error.hpp"
#include "safer/text.hpp"

#include <cctype>

namespace safer {

PromptEnvelope::PromptEnvelope(std::string instructions, std::vector<PromptResource> resources,
                               std::string dataset_name, std::vector<PromptRow> rows)
    : instructions_(std::move(instructions)),
      resources_(std::move(resources)),
      dataset_name_(std::move(dataset_name)),
      rows_(std::move(rows)) {
  std::vector<std::string> problems;
  for (const auto& r : resources_) {
    bool bad = r.tag.empty();
    for (char c : r.tag) {
      if (c == '<' || c == '>' || std::isspace(static_cast<unsigned char>(c))) bad = true;
    }
    if (bad) problems.push_back("invalid resource tag '" + r.tag + "'");
  }
  if (dataset_name_.find_first_of("<>") != std::string::npos) {
    problems.push_back("dataset name must not contain angle brackets");
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (text::trim(rows_[i].req_id).empty()) problems.push_back("row " + std::to_string(i) + " has an empty id");
  }
  if (!problems.empty()) throw Error(ErrorCode::InvalidEnvelope, "prompt envelope rejected", problems);
}

std::string assemble_prompt(const PromptEnvelope& envelope) {
  std::string out;
  out += text::trim(envelope.instructions());
  out += "\n\n<RESOURCES>\n";
  for (const auto& r : envelope.resources()) {
    out += "<" + r.tag + ">\n";
    if (r.body.is_string()) {
      out += text::trim(r.body.get_ref<const std::string&>());
    } else {
      out += r.body.dump(2);
    }
    out += "\n</" + r.tag + ">\n";
  }
  out += "</RESOURCES>\n";
  if (!envelope.dataset_name().empty()) {
    out += "\n<" + envelope.dataset_name() + ">\n";
    bool first = true;
    for (const auto& row : envelope.rows()) {
      if (!first) out += "\n";
      first = false;
      out += "ReqID: " + row.req_id + "\n";
      out += text::trim(row.text);
      out += "\n";
    }
    out += "</" + envelope.dataset_name() + ">\n";
  }
  return out;
}

}  // namespace safer
