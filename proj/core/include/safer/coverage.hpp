#pragma once

#include "safer/catalog.hpp"
#include "safer/classify.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace safer {

enum class Verdict { Complete, Missing };

[[nodiscard]] std::string_view to_string(Verdict v) noexcept;

inline constexpr long kMinFunctional = 3;
inline constexpr long kMinProbabilistic = 1;

/// Complete iff n_func >= 3 and n_prob >= 1.
[[nodiscard]] constexpr Verdict verdict(long n_func, long n_prob) noexcept {
  return n_func >= kMinFunctional && n_prob >= kMinProbabilistic ? Verdict::Complete : Verdict::Missing;
}

/// max(0, 3 - n_func) + max(0, 1 - n_prob)
[[nodiscard]] long shortfall(long n_func, long n_prob) noexcept;

struct CoverageRow {
  std::string function;
  long n_func = 0;
  long n_prob = 0;
  long n_other = 0;
  Verdict verdict = Verdict::Missing;

  [[nodiscard]] bool catch_all() const { return function == kOtherFunction; }
  /// Complete with exactly the minimum probabilistic count.
  [[nodiscard]] bool minimal_prob() const { return verdict == Verdict::Complete && n_prob == kMinProbabilistic; }
  bool operator==(const CoverageRow&) const = default;
};

struct CoverageMatrix {
  std::vector<CoverageRow> rows;  ///< catalog order
  CoverageRow totals;             ///< function "TOTAL"; verdict is not meaningful

  [[nodiscard]] const CoverageRow* find(std::string_view alias) const;
  [[nodiscard]] long classified_count() const { return totals.n_func + totals.n_prob + totals.n_other; }

  /// Missing functions (catch-all excluded), largest shortfall first, ties in
  /// catalog order.
  [[nodiscard]] std::vector<CoverageRow> gap_ranking() const;

  /// Function,N Reqs FUNC,PROB,Result then a TOTAL line.
  [[nodiscard]] std::string to_csv() const;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  static CoverageMatrix from_json(const nlohmann::ordered_json& doc);

  bool operator==(const CoverageMatrix&) const = default;
};

/// Counts classified rows per (function, type). Throws AliasClosureViolation
/// when a row names an alias outside the catalog.
[[nodiscard]] CoverageMatrix build_matrix(const std::vector<ClassifiedRequirement>& classified,
                                          const FunctionCatalog& catalog);

}  // namespace safer
