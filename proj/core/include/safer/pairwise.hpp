#pragma once

#include "safer/catalog.hpp"
#include "safer/classify.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace safer {

class LlmGateway;

enum class PairKind { Duplicate, Complementary, Refinement, Contradiction };
enum class PromptVersion { V1, V2, V3 };
enum class PairTask { Duplicates, Contradictions };

[[nodiscard]] std::string_view to_string(PairKind k) noexcept;
[[nodiscard]] std::optional<PairKind> parse_pair_kind(std::string_view s);
[[nodiscard]] std::string_view to_string(PromptVersion v) noexcept;
[[nodiscard]] std::optional<PromptVersion> parse_prompt_version(std::string_view s);

/// Canonical id order: all-digit ids compare numerically, anything else
/// lexicographically (digit ids first).
[[nodiscard]] bool req_id_less(std::string_view a, std::string_view b) noexcept;

using ReqPair = std::pair<std::string, std::string>;  ///< always first < second
[[nodiscard]] ReqPair canonical_pair(std::string a, std::string b);

struct PairFinding {
  PairKind kind = PairKind::Duplicate;
  std::string req_a;
  std::string req_b;
  std::string function_a;
  std::string function_b;
  std::string rationale;
  std::string source_chunk;  ///< cluster alias the pair came from
  std::string validator_note;

  [[nodiscard]] ReqPair pair() const { return {req_a, req_b}; }
  bool operator==(const PairFinding&) const = default;
};

struct Cluster {
  std::string alias;
  std::vector<ClassifiedRequirement> items;
};

/// Groups rows by function alias. Clusters follow catalog order (aliases the
/// catalog does not know come after, first-seen order); rows keep input
/// order. Functions without rows get no cluster.
[[nodiscard]] std::vector<Cluster> cluster_by_function(const std::vector<ClassifiedRequirement>& classified,
                                                       const FunctionCatalog* catalog = nullptr);

struct PairPrompt {
  std::size_t index = 0;
  std::string source_cluster;
  std::vector<ClassifiedRequirement> members;
  std::string prompt;
};

[[nodiscard]] std::string pair_instructions(PairTask task, PromptVersion version);

/// One prompt per cluster with at least two submitted rows. Under V3 the
/// `_OF_` rows are appended to every other cluster's prompt.
[[nodiscard]] std::vector<PairPrompt> build_pair_prompts(const std::vector<Cluster>& clusters, PairTask task,
                                                         PromptVersion version,
                                                         const std::string& dataset_name = "Safety Requirements");

struct PairAnalysis {
  std::vector<PairFinding> findings;
  std::vector<QuarantinedRecord> quarantine;

  /// {"kind": "duplicates"|"contradictions", "findings": [...], "quarantine": [...]}
  [[nodiscard]] nlohmann::ordered_json to_json(PairTask task) const;
  static PairAnalysis from_json(const nlohmann::ordered_json& doc);
  /// kind,req_a,req_b,functions,rationale,validator_notes
  [[nodiscard]] std::string to_csv() const;
};

[[nodiscard]] const FieldSchema& pair_schema();

/// Validates one reply: ids must be distinct members of the prompt (others
/// are quarantined), pairs are canonicalized, and under V2/V3 a Duplicate
/// across two distinct non-`_OF_` functions becomes Complementary.
/// Throws KindConflict when one pair is labelled Contradiction and something
/// else; NoJsonFound / MissingResultsRoot when the reply has no results.
[[nodiscard]] PairAnalysis validate_pair_reply(const PairPrompt& prompt, std::string_view reply, PairTask task,
                                               PromptVersion version);

/// Concatenates analyses, dropping repeated pairs (first wins). Throws
/// KindConflict as above.
[[nodiscard]] PairAnalysis merge_analyses(std::vector<PairAnalysis> parts);

/// Throws KindConflict listing every pair labelled both Contradiction and a
/// non-contradiction kind.
void check_kind_exclusivity(const std::vector<PairFinding>& findings);

[[nodiscard]] PairAnalysis detect_duplicates(const std::vector<Cluster>& clusters, LlmGateway& gateway,
                                             PromptVersion version,
                                             const std::string& dataset_name = "Safety Requirements");

struct Consolidation {
  std::vector<ClassifiedRequirement> survivors;      ///< input order, one per duplicate group
  std::map<std::string, std::string> representative;  ///< dropped id -> surviving id
};

/// Union-find over Duplicate findings; the smallest id (req_id_less) of each
/// group survives.
[[nodiscard]] Consolidation consolidate(const std::vector<ClassifiedRequirement>& classified,
                                        const std::vector<PairFinding>& duplicates);

/// Clusters the consolidated list and asks for contradicting pairs.
[[nodiscard]] PairAnalysis detect_contradictions(const std::vector<Cluster>& clusters, LlmGateway& gateway,
                                                 const std::string& dataset_name = "Safety Requirements");

struct GoldPairs {
  PairKind kind = PairKind::Duplicate;
  std::set<ReqPair> pairs;

  /// Two-column CSV with a header row. Throws IoFailure / MalformedCsv /
  /// SchemaViolation.
  static GoldPairs load(const std::filesystem::path& path, PairKind kind);
  static GoldPairs parse(std::string_view csv_text, PairKind kind);
  /// Ids in the gold set that are not in `ids`.
  [[nodiscard]] std::vector<std::string> unknown_ids(const std::set<std::string>& ids) const;
};

struct PairScore {
  std::size_t detected_true = 0;
  std::size_t gold_total = 0;
  std::size_t false_positive = 0;
  double rate = 0.0;  ///< percent, two decimals
  double threshold = 80.0;
  bool pass = false;  ///< rate > threshold
};

/// Findings of the gold kind are compared to the gold pairs as unordered
/// pairs. Throws EmptyGold.
[[nodiscard]] PairScore score(const std::vector<PairFinding>& findings, const GoldPairs& gold,
                              double threshold = 80.0);

}  // namespace safer
