#include "safer/classify.hpp"

#include "safer/csv.hpp"
#include "safer/error.hpp"
#include "safer/gateway.hpp"
#include "safer/text.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace safer {

using json = nlohmann::ordered_json;

std::string_view to_string(ReqType t) noexcept {
  switch (t) {
    case ReqType::Func: return "FUNC";
    case ReqType::Prob: return "PROB";
    case ReqType::Other: return "_OT_";
  }
  return "_OT_";
}

std::optional<ReqType> parse_req_type(std::string_view s) {
  const std::string up = text::to_upper(text::trim(s));
  if (up == "FUNC") return ReqType::Func;
  if (up == "PROB") return ReqType::Prob;
  if (up == "_OT_") return ReqType::Other;
  return std::nullopt;
}

namespace {

constexpr std::pair<ClassFlag, std::string_view> kFlagNames[] = {
    {kRemappedToOF, "RemappedToOF"},
    {kRemappedToOT, "RemappedToOT"},
    {kUnreturned, "Unreturned"},
    {kLowConfidence, "LowConfidence"},
};

}  // namespace

std::string flags_to_string(unsigned flags) {
  std::vector<std::string> names;
  for (const auto& [flag, name] : kFlagNames) {
    if (flags & flag) names.emplace_back(name);
  }
  return text::join(names, "|");
}

unsigned flags_from_string(std::string_view s) {
  unsigned out = 0;
  for (const auto& [flag, name] : kFlagNames) {
    if (s.find(name) != std::string_view::npos) out |= flag;
  }
  return out;
}

// ---------------------------------------------------------------- table

const ClassifiedRequirement* ClassificationTable::find(std::string_view req_id) const {
  for (const auto& r : rows) {
    if (r.req_id == req_id) return &r;
  }
  return nullptr;
}

json ClassificationTable::to_json() const {
  json out = json::object();
  out["kind"] = "classification";
  out["rows"] = json::array();
  for (const auto& r : rows) {
    out["rows"].push_back(json{{"ReqID", r.req_id},
                               {"Function", r.function},
                               {"Type", to_string(r.rtype)},
                               {"Confidence", r.confidence},
                               {"System_Requirement", r.system_requirement},
                               {"Requirement", r.original_text},
                               {"Flags", flags_to_string(r.flags)},
                               {"Function_Explanation", r.function_explanation},
                               {"Type_Explanation", r.type_explanation}});
  }
  out["quarantine"] = json::array();
  for (const auto& q : quarantine) {
    out["quarantine"].push_back(json{{"chunk", q.chunk_index}, {"record", q.record}, {"reasons", q.reasons}});
  }
  return out;
}

ClassificationTable ClassificationTable::from_json(const json& doc) {
  if (!doc.is_object() || doc.value("kind", "") != "classification" || !doc.contains("rows") ||
      !doc["rows"].is_array()) {
    throw Error(ErrorCode::SchemaViolation, "not a classification table document");
  }
  ClassificationTable t;
  try {
    for (const auto& r : doc["rows"]) {
      ClassifiedRequirement row;
      row.req_id = r.at("ReqID").get<std::string>();
      row.function = r.at("Function").get<std::string>();
      row.rtype = parse_req_type(r.at("Type").get<std::string>()).value_or(ReqType::Other);
      row.confidence = r.at("Confidence").get<int>();
      row.system_requirement = r.value("System_Requirement", "");
      row.original_text = r.value("Requirement", "");
      row.flags = flags_from_string(r.value("Flags", ""));
      row.function_explanation = r.value("Function_Explanation", "");
      row.type_explanation = r.value("Type_Explanation", "");
      t.rows.push_back(std::move(row));
    }
    if (doc.contains("quarantine")) {
      for (const auto& q : doc["quarantine"]) {
        t.quarantine.push_back(QuarantinedRecord{q.value("chunk", std::size_t{0}), q.value("record", json{}),
                                                 q.value("reasons", std::vector<std::string>{})});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "malformed classification table", {e.what()});
  }
  return t;
}

std::string ClassificationTable::to_csv() const {
  std::string out = csv::format_row({"ReqID", "Function", "Type", "Confidence", "System Requirement", "Requirement",
                                     "Flags", "Function_Explanation", "Type_Explanation"});
  for (const auto& r : rows) {
    out += csv::format_row({r.req_id, r.function, std::string(to_string(r.rtype)), std::to_string(r.confidence),
                            r.system_requirement, r.original_text, flags_to_string(r.flags), r.function_explanation,
                            r.type_explanation});
  }
  return out;
}

// ---------------------------------------------------------------- prompt

std::string_view default_classification_instructions() {
  static const std::string text =
      "Below is a list of system requirements under the dataset tag. In the RESOURCES tag, there is an "
      "ARCHITECTURE resource which contains a list of the primary systems' functions, provided as {Alias:Name} "
      "pairs.\n"
      "Write a corresponding System Requirement (SysReq) according to requirements authoring conventions, making "
      "sure that it is a shall statement (The {SYS} shall...), necessary, clear, traceable, verifiable and "
      "complete. If the requirement is fine as is, keep the original requirement.\n"
      "Classify each requirement independently of the others.\n"
      "A. Categorize each one of the requirements under ONE of the system's functions, or if your confidence "
      "level is less than 80%, as Other function (_OF_). Present only the Function alias for each requirement ID "
      "and use only the aliases in the ARCHITECTURE resource.\n"
      "B. Classify each one of the requirements as Functional (FUNC) or Probabilistic (PROB), or if your "
      "confidence level is less than 80%, as Other type (_OT_). The types of requirements are listed under the "
      "tag <safety_function_type>. Present only the Type Symbol (FUNC, PROB, _OT_) for each ID.\n"
      "C. Provide your confidence level as a number between 0 and 100.\n"
      "D. Provide an explanation for why you chose a function.\n"
      "E. Provide an explanation for why you chose a type.\n"
      "F. Return your results in a JSON structure with the root node \"results\" holding a list of records with "
      "the fields ReqID, System_Requirement, Function, Type, Confidence, Function_Explanation, Type_Explanation.";
  return text;
}

json safety_function_types() {
  return json{{"FUNC", "Functional safety requirement: defines safe operational behavior of a function"},
              {"PROB", "Probabilistic safety requirement: quantifies acceptable risk or failure likelihood"},
              {"_OT_", "Other type: the FUNC/PROB nature is unclear"}};
}

const FieldSchema& classification_schema() {
  static const FieldSchema schema = {
      {"ReqID", FieldType::Id, true, 0, -1, {"ReqId", "req_id", "ID"}},
      {"System_Requirement", FieldType::String, false, 0, -1, {"System Requirement", "SysReq"}},
      {"Function", FieldType::String, true, 0, -1, {}},
      {"Type", FieldType::String, true, 0, -1, {}},
      {"Confidence", FieldType::Integer, false, 0, 100, {}},
      {"Function_Explanation", FieldType::String, false, 0, -1, {"Function Explanation"}},
      {"Type_Explanation", FieldType::String, false, 0, -1, {"Type Explanation"}},
  };
  return schema;
}

PromptEnvelope build_classification_prompt(const RequirementChunk& chunk, const FunctionCatalog& catalog,
                                           std::string_view instructions, std::string dataset_name,
                                           std::vector<PromptResource> extra) {
  std::vector<PromptResource> resources{{"ARCHITECTURE", catalog.alias_map()},
                                        {"safety_function_type", safety_function_types()}};
  for (auto& r : extra) {
    if (r.tag != "ARCHITECTURE" && r.tag != "safety_function_type") resources.push_back(std::move(r));
  }
  return PromptEnvelope(std::string(instructions), std::move(resources), std::move(dataset_name),
                        to_prompt_rows(chunk.items));
}

// ---------------------------------------------------------------- join

ClassifiedRequirement unreturned_row(const Requirement& req) {
  ClassifiedRequirement row;
  row.req_id = req.req_id;
  row.original_text = req.text;
  row.system_requirement = req.text;
  row.function = std::string(kOtherFunction);
  row.rtype = ReqType::Other;
  row.confidence = 0;
  row.flags = kUnreturned;
  return row;
}

ClassificationTable join_classification(const RequirementChunk& chunk, std::string_view reply,
                                        const FunctionCatalog& catalog) {
  ParsedResults parsed = parse_results_json(reply, classification_schema());

  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < chunk.items.size(); ++i) position.emplace(chunk.items[i].req_id, i);

  ClassificationTable out;
  for (auto& rej : parsed.rejected) {
    out.quarantine.push_back(QuarantinedRecord{chunk.index, std::move(rej.record), std::move(rej.reasons)});
  }

  std::vector<std::optional<ClassifiedRequirement>> slots(chunk.items.size());
  for (auto& rec : parsed.records) {
    const std::string id = rec["ReqID"].get<std::string>();
    auto it = position.find(id);
    if (it == position.end()) {
      out.quarantine.push_back(QuarantinedRecord{chunk.index, rec, {"ReqID '" + id + "' is not in the input chunk"}});
      continue;
    }
    if (slots[it->second]) {
      out.quarantine.push_back(QuarantinedRecord{chunk.index, rec, {"ReqID '" + id + "' returned more than once"}});
      continue;
    }
    const Requirement& req = chunk.items[it->second];
    ClassifiedRequirement row;
    row.req_id = id;
    row.original_text = req.text;
    row.system_requirement = rec.contains("System_Requirement") ? rec["System_Requirement"].get<std::string>() : req.text;
    if (text::trim(row.system_requirement).empty()) row.system_requirement = req.text;

    std::string function{text::trim(rec["Function"].get<std::string>())};
    if (catalog.contains(function)) {
      row.function = function;
    } else {
      row.function = std::string(kOtherFunction);
      row.flags |= kRemappedToOF;
      row.function_explanation = "[validator] alias '" + function + "' is not in the catalog; ";
    }
    if (auto t = parse_req_type(rec["Type"].get<std::string>())) {
      row.rtype = *t;
    } else {
      row.rtype = ReqType::Other;
      row.flags |= kRemappedToOT;
      row.type_explanation = "[validator] type '" + rec["Type"].get<std::string>() + "' is not FUNC/PROB/_OT_; ";
    }
    row.confidence = rec.contains("Confidence") ? rec["Confidence"].get<int>() : 0;
    if (row.confidence < kLowConfidenceThreshold) row.flags |= kLowConfidence;
    if (rec.contains("Function_Explanation")) row.function_explanation += rec["Function_Explanation"].get<std::string>();
    if (rec.contains("Type_Explanation")) row.type_explanation += rec["Type_Explanation"].get<std::string>();
    slots[it->second] = std::move(row);
  }

  out.rows.reserve(chunk.items.size());
  for (std::size_t i = 0; i < chunk.items.size(); ++i) {
    out.rows.push_back(slots[i] ? std::move(*slots[i]) : unreturned_row(chunk.items[i]));
  }
  return out;
}

ClassificationTable classify(const std::vector<RequirementChunk>& chunks, const FunctionCatalog& catalog,
                             LlmGateway& gateway, std::string_view instructions, std::string dataset_name) {
  std::vector<std::string> prompts;
  prompts.reserve(chunks.size());
  for (const auto& c : chunks) {
    prompts.push_back(assemble_prompt(build_classification_prompt(c, catalog, instructions, dataset_name)));
  }
  auto replies = gateway.send_batch(prompts);

  ClassificationTable table;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (replies[i].error) std::rethrow_exception(replies[i].error);
    auto part = join_classification(chunks[i], replies[i].result->raw_text, catalog);
    for (auto& r : part.rows) table.rows.push_back(std::move(r));
    for (auto& q : part.quarantine) table.quarantine.push_back(std::move(q));
  }
  return table;
}

// ---------------------------------------------------------------- consistency

double consistency(const std::vector<ClassificationTable>& runs, const ClassificationTable* reference, bool strict) {
  if (runs.empty()) throw Error(ErrorCode::MismatchedIdSets, "consistency needs at least one run");

  auto ids_of = [](const ClassificationTable& t) {
    std::set<std::string> ids;
    for (const auto& r : t.rows) ids.insert(r.req_id);
    return ids;
  };
  const std::set<std::string> base = reference ? ids_of(*reference) : ids_of(runs.front());
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (ids_of(runs[i]) != base || runs[i].rows.size() != base.size()) {
      problems.push_back("run " + std::to_string(i + 1) + " covers a different req_id set");
    }
  }
  if (!problems.empty()) throw Error(ErrorCode::MismatchedIdSets, "runs do not cover the same requirements", problems);
  if (base.empty()) throw Error(ErrorCode::MismatchedIdSets, "runs are empty");

  auto label = [strict](const ClassifiedRequirement& r) {
    return strict ? r.function + "\x1f" + std::string(to_string(r.rtype)) : r.function;
  };
  auto index = [&](const ClassificationTable& t) {
    std::map<std::string, std::string> m;
    for (const auto& r : t.rows) m[r.req_id] = label(r);
    return m;
  };

  std::vector<std::map<std::string, std::string>> labels;
  for (const auto& r : runs) labels.push_back(index(r));
  const double n = static_cast<double>(base.size());

  if (reference) {
    const auto expected = index(*reference);
    double sum = 0;
    for (const auto& run : labels) {
      std::size_t hits = 0;
      for (const auto& id : base) hits += run.at(id) == expected.at(id) ? 1 : 0;
      sum += 100.0 * static_cast<double>(hits) / n;
    }
    return text::round2(sum / static_cast<double>(labels.size()));
  }

  std::size_t agree = 0;
  for (const auto& id : base) {
    const auto& first = labels.front().at(id);
    bool all = std::all_of(labels.begin(), labels.end(), [&](const auto& m) { return m.at(id) == first; });
    agree += all ? 1 : 0;
  }
  return text::round2(100.0 * static_cast<double>(agree) / n);
}

}  // namespace safer
