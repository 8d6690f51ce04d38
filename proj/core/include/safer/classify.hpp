#pragma once

#include "safer/catalog.hpp"
#include "safer/prompt.hpp"
#include "safer/requirements.hpp"
#include "safer/results_json.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safer {

class LlmGateway;

enum class ReqType { Func, Prob, Other };

[[nodiscard]] std::string_view to_string(ReqType t) noexcept;  ///< "FUNC", "PROB", "_OT_"
[[nodiscard]] std::optional<ReqType> parse_req_type(std::string_view s);

enum ClassFlag : unsigned {
  kRemappedToOF = 1u << 0,
  kUnreturned = 1u << 1,
  kLowConfidence = 1u << 2,
  kRemappedToOT = 1u << 3,
};

/// "RemappedToOF|LowConfidence" style rendering; empty for no flags.
[[nodiscard]] std::string flags_to_string(unsigned flags);
[[nodiscard]] unsigned flags_from_string(std::string_view s);

inline constexpr int kLowConfidenceThreshold = 80;

struct ClassifiedRequirement {
  std::string req_id;
  std::string original_text;
  std::string system_requirement;
  std::string function = "_OF_";
  ReqType rtype = ReqType::Other;
  int confidence = 0;
  std::string function_explanation;
  std::string type_explanation;
  unsigned flags = 0;

  [[nodiscard]] bool has(ClassFlag f) const noexcept { return (flags & f) != 0; }
  bool operator==(const ClassifiedRequirement&) const = default;
};

struct QuarantinedRecord {
  std::size_t chunk_index = 0;
  Record record;
  std::vector<std::string> reasons;

  bool operator==(const QuarantinedRecord&) const = default;
};

/// Input-ordered classification rows plus reply records that could not be
/// joined to an input.
struct ClassificationTable {
  std::vector<ClassifiedRequirement> rows;
  std::vector<QuarantinedRecord> quarantine;

  [[nodiscard]] const ClassifiedRequirement* find(std::string_view req_id) const;

  /// {"kind":"classification","rows":[...],"quarantine":[...]}
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  static ClassificationTable from_json(const nlohmann::ordered_json& doc);
  /// Header: ReqID,Function,Type,Confidence,System Requirement,Requirement,Flags,
  /// Function_Explanation,Type_Explanation
  [[nodiscard]] std::string to_csv() const;

  bool operator==(const ClassificationTable&) const = default;
};

[[nodiscard]] std::string_view default_classification_instructions();
[[nodiscard]] nlohmann::ordered_json safety_function_types();

/// Schema for one classification reply record.
[[nodiscard]] const FieldSchema& classification_schema();

/// Instructions + ARCHITECTURE ({alias: lineage}) + safety_function_type, then
/// any extra resources whose tags differ from those two, then the rows.
[[nodiscard]] PromptEnvelope build_classification_prompt(const RequirementChunk& chunk,
                                                         const FunctionCatalog& catalog,
                                                         std::string_view instructions = default_classification_instructions(),
                                                         std::string dataset_name = "Safety Requirements",
                                                         std::vector<PromptResource> extra = {});

/// Joins one reply to its chunk: one row per chunk item, in chunk order.
/// Unknown or repeated ReqIDs and schema failures go to quarantine. Throws
/// NoJsonFound / MissingResultsRoot when the reply has no results at all.
[[nodiscard]] ClassificationTable join_classification(const RequirementChunk& chunk, std::string_view reply,
                                                      const FunctionCatalog& catalog);

/// Row for an input the model never returned.
[[nodiscard]] ClassifiedRequirement unreturned_row(const Requirement& req);

/// Prompts every chunk through the gateway and joins the replies in chunk
/// order. The first failing chunk's error is rethrown.
[[nodiscard]] ClassificationTable classify(const std::vector<RequirementChunk>& chunks,
                                           const FunctionCatalog& catalog, LlmGateway& gateway,
                                           std::string_view instructions = default_classification_instructions(),
                                           std::string dataset_name = "Safety Requirements");

/// Agreement percentage (two decimals). Without a reference: share of req_ids
/// labelled identically by every run. With a reference: mean over runs of the
/// share of req_ids matching the reference. `strict` compares (function, type)
/// instead of function alone. Throws MismatchedIdSets.
[[nodiscard]] double consistency(const std::vector<ClassificationTable>& runs,
                                 const ClassificationTable* reference = nullptr, bool strict = false);

}  // namespace safer
