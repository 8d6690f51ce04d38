#pragma once

#include "safer/catalog.hpp"
#include "safer/classify.hpp"
#include "safer/config.hpp"
#include "safer/coverage.hpp"
#include "safer/pairwise.hpp"
#include "safer/reporting.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace safer {

class LlmGateway;

enum class TaskStatus { Executed, SkippedDeltaHit, SkippedRunFalse, Failed, Planned };

[[nodiscard]] std::string_view to_string(TaskStatus s) noexcept;

struct TaskOutcome {
  std::string task_name;
  TaskStatus status = TaskStatus::Failed;
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> diagnostics;
  std::size_t backend_calls = 0;
};

/// Everything a task can produce. Joined files hold one of these, so a later
/// task (or a later run) can pick up where an earlier one stopped.
struct Artifacts {
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

  /// {"kind":"joined","dataset":{...},"catalog":...,"classification":...,...}
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  static Artifacts from_json(const nlohmann::ordered_json& doc);

  /// Takes every field `other` has set.
  void absorb(const Artifacts& other);
};

/// One generative call of a task.
struct PromptUnit {
  std::string label;
  std::vector<std::string> ids;
  std::string prompt;
};

struct TaskContext {
  const TaskConfig& cfg;
  std::string version_tag;
  const Artifacts* upstream = nullptr;  ///< joined output found at input_file, if any
  std::vector<std::string>& diagnostics;
};

/// What an analysis function hands back before any backend traffic: the
/// prompts to send, and how to turn the replies (same order) into artifacts.
struct PreparedTask {
  std::vector<PromptUnit> units;
  bool uses_llm = true;
  std::vector<std::string> csv_kinds;  ///< joined CSVs to write, first one unsuffixed
  std::function<Artifacts(const std::vector<std::string>& replies)> analyze;
};

using AnalysisFunction = std::function<PreparedTask(TaskContext&)>;

class AnalysisRegistry {
 public:
  void add(std::string name, AnalysisFunction fn);
  [[nodiscard]] const AnalysisFunction* find(std::string_view name) const;
  [[nodiscard]] std::vector<std::string> names() const;

  /// analyze_requirement_completeness, analyze_requirement_classification,
  /// analyze_coverage, analyze_duplicates, analyze_contradictions,
  /// identify_functions.
  static AnalysisRegistry builtin();

 private:
  std::map<std::string, AnalysisFunction, std::less<>> functions_;
};

struct TaskPaths {
  std::filesystem::path raw;
  std::filesystem::path partial;
  std::filesystem::path joined_json;
  std::filesystem::path joined_csv;
  std::filesystem::path quarantine;
};

[[nodiscard]] TaskPaths task_paths(const TaskConfig& cfg, const std::string& version_tag);

struct RunOptions {
  bool force = false;    ///< ignore delta hits
  bool dry_run = false;  ///< build prompts, send nothing, write nothing
  std::optional<std::string> version_tag;
  std::optional<std::string> only_task;
  bool verbose = false;
  std::ostream* log = nullptr;
};

/// CLI override, then the task's version_tag, then today's date.
[[nodiscard]] std::string resolve_version_tag(const TaskConfig& cfg, const RunOptions& options);

/// Reads a reference classification CSV (ReqID, Function[, Type]).
[[nodiscard]] ClassificationTable load_reference_classification(const std::filesystem::path& path);

class Orchestrator {
 public:
  /// `gateway` may be null when only deterministic functions run.
  Orchestrator(AnalysisRegistry registry, std::shared_ptr<LlmGateway> gateway, RunOptions options = {});

  TaskOutcome run_task(const TaskConfig& cfg);

  /// Sequential, file order. A task whose input_file is an earlier task's
  /// output_path fails when that task failed. One report set is written per
  /// output directory that received results.
  std::vector<TaskOutcome> run_all(const std::vector<TaskConfig>& configs);

  [[nodiscard]] const std::vector<std::filesystem::path>& report_files() const noexcept { return report_files_; }
  [[nodiscard]] const std::map<std::string, Artifacts>& artifacts() const noexcept { return artifacts_; }

 private:
  TaskOutcome execute(const TaskConfig& cfg, const std::string& tag);
  void log(const std::string& line) const;

  AnalysisRegistry registry_;
  std::shared_ptr<LlmGateway> gateway_;
  RunOptions options_;
  std::map<std::string, Artifacts> artifacts_;  ///< by task name
  std::vector<std::filesystem::path> report_files_;
};

}  // namespace safer
