#pragma once

#include "safer/architecture.hpp"
#include "safer/prompt.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace safer {

class LlmGateway;

inline constexpr std::string_view kOtherFunction = "_OF_";
inline constexpr std::string_view kOtherFunctionName = "Other Function";

struct CatalogEntry {
  std::string alias;
  std::vector<std::string> lineage;  ///< 1 to 3 segments, leaf last
  std::string primary_system;

  [[nodiscard]] std::string lineage_string() const;  ///< "Drone/Navigation/Navigating"
  [[nodiscard]] const std::string& leaf() const { return lineage.back(); }
  bool operator==(const CatalogEntry&) const = default;
};

/// Alias -> lineage hierarchy with exactly one `_OF_` catch-all.
class FunctionCatalog {
 public:
  FunctionCatalog();

  /// Validates aliases (unique, non-empty) and lineages (1-3 non-empty
  /// segments). Injects `_OF_` with a warning when absent.
  /// Throws SchemaViolation.
  explicit FunctionCatalog(std::vector<CatalogEntry> entries);

  [[nodiscard]] const std::vector<CatalogEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] const CatalogEntry* find(std::string_view alias) const;
  [[nodiscard]] bool contains(std::string_view alias) const { return find(alias) != nullptr; }
  [[nodiscard]] std::vector<std::string> aliases() const;
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool contains_catch_all() const { return contains(kOtherFunction); }
  [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  void warn(std::string message) { warnings_.push_back(std::move(message)); }

  /// {"<primary>": {"<alias>": "<lineage>"}}, primaries in first-seen order.
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  /// Flat {"<alias>": "<lineage>"} map, the ARCHITECTURE prompt resource.
  [[nodiscard]] nlohmann::ordered_json alias_map() const;

  /// Accepts the nested per-primary shape, optionally wrapped in "results",
  /// or a flat alias map. Throws SchemaViolation.
  static FunctionCatalog from_json(const nlohmann::ordered_json& doc);

  bool operator==(const FunctionCatalog& other) const { return entries_ == other.entries_; }

 private:
  std::vector<CatalogEntry> entries_;
  std::vector<std::string> warnings_;
};

/// Uppercase initials of the words in `name`, skipping connectives
/// ("and", "of", "the", "&", ...) unless nothing else is left.
[[nodiscard]] std::string derive_alias(std::string_view name);

/// Deterministic catalog from a linked graph. alias_hints (thing name -> alias)
/// take precedence over model-supplied aliases, which take precedence over
/// derived initials. Throws NoPrimarySystem.
[[nodiscard]] FunctionCatalog extract_catalog(const ArchitectureGraph& graph,
                                              const std::map<std::string, std::string>& alias_hints = {});

/// Default function-identification instructions.
[[nodiscard]] std::string_view default_function_instructions();

[[nodiscard]] PromptEnvelope build_function_prompt(std::string_view model_text,
                                                   std::string_view instructions = default_function_instructions());

/// Parses a model reply into a catalog. Throws SchemaViolation.
[[nodiscard]] FunctionCatalog catalog_from_reply(std::string_view raw);

/// LLM path: model text wrapped in an <architecture_model> resource.
[[nodiscard]] FunctionCatalog extract_catalog_llm(std::string_view model_text, LlmGateway& gateway,
                                                  std::string_view instructions = default_function_instructions());

/// Share of reference entries (catch-all excluded) that the extracted catalog
/// reproduces with the same alias and leaf name, as a percentage rounded to
/// two decimals. Throws EmptyGold when the reference has no real entries.
[[nodiscard]] double catalog_accuracy(const FunctionCatalog& extracted, const FunctionCatalog& reference);

}  // namespace safer
