#pragma once

#include "safer/catalog.hpp"
#include "safer/classify.hpp"
#include "safer/coverage.hpp"
#include "safer/pairwise.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace safer {

struct MetricsThresholds {
  double subsystem_identification = 90.0;
  double classification = 80.0;
  double duplicates = 80.0;
  double contradictions = 80.0;
  double stability = 80.0;
};

struct MetricScores {
  std::optional<double> subsystem_identification;
  std::optional<double> classification;
  std::optional<double> duplicates;
  std::optional<double> contradictions;
  std::optional<double> stability;
};

struct MetricRow {
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;  ///< value > threshold

  bool operator==(const MetricRow&) const = default;
};

/// One row per present score, in the order subsystem_identification,
/// classification, duplicates, contradictions, stability. Throws NoScores.
[[nodiscard]] std::vector<MetricRow> metrics_summary(const MetricScores& scores,
                                                     const MetricsThresholds& thresholds = {});

/// Whatever upstream artifacts exist; absent ones render as "not run".
struct ReportInputs {
  std::string dataset_name;
  std::string dataset_id;
  std::optional<FunctionCatalog> catalog;
  std::optional<ClassificationTable> classification;
  std::optional<CoverageMatrix> coverage;
  std::optional<PairAnalysis> duplicates;
  std::optional<PairAnalysis> contradictions;
  std::optional<PairScore> duplicate_score;
  std::optional<PairScore> contradiction_score;
  MetricScores scores;
  MetricsThresholds thresholds;
};

struct AllocationRow {
  std::string req_id;
  std::string function;
  std::string lineage;
  std::string primary_system;
  std::string requirement;
};

struct ReportSet {
  std::vector<AllocationRow> allocation;
  std::vector<MetricRow> metrics;
  std::string summary_markdown;
  std::vector<std::pair<std::string, std::string>> documents;  ///< file name -> content, write order
  std::vector<std::filesystem::path> files;                    ///< set by emit_report_set
};

[[nodiscard]] std::vector<AllocationRow> allocation_rows(const ClassificationTable& table,
                                                         const FunctionCatalog* catalog);

/// Renders everything in memory; no I/O.
[[nodiscard]] ReportSet render_report_set(const ReportInputs& inputs, const std::string& version_tag);

/// Writes <out_dir>/reports/{allocation,classification,duplicates,
/// contradictions}_<tag>.{csv,json}, coverage_<tag>.csv, summary_<tag>.md and
/// metrics_<tag>.json. Equal inputs give byte-equal files. Throws IoFailure.
ReportSet emit_report_set(const ReportInputs& inputs, const std::filesystem::path& out_dir,
                          const std::string& version_tag);

}  // namespace safer
