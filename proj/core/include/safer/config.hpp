#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safer {

inline constexpr std::string_view kTaskType = "GENERATIVE_ANALYSIS_TASK";

/// One task block of the parameters file, merged over defaults.
struct TaskConfig {
  std::string task_name;
  std::string type{kTaskType};
  bool run = true;
  bool delta = false;
  std::filesystem::path project_dir = ".";
  std::optional<std::filesystem::path> readme;
  std::filesystem::path input_file;
  std::string dataset_name;
  std::string dataset_id_column = "ReqID";
  std::vector<std::string> dataset_columns{"Requirements"};
  std::vector<std::string> result_columns{"Function", "Type", "Confidence", "System Requirement"};
  std::optional<std::filesystem::path> instructions;
  std::optional<std::filesystem::path> resources;
  std::filesystem::path output_path;
  long chunk_size = 10;
  long max_items = -1;
  bool execute = true;
  bool analyze = true;
  std::string analysis_function;
  bool verbose = false;
  std::optional<std::string> version_tag;

  // optional inputs used by specific analysis functions
  std::optional<std::filesystem::path> catalog;             ///< function catalog JSON
  std::optional<std::filesystem::path> architecture_model;  ///< OPL (.opl/.txt) or XMI (.xmi/.xml)
  std::map<std::string, std::string> alias_hints;           ///< thing name -> alias
  std::optional<std::filesystem::path> reference_catalog;   ///< scores function identification
  std::optional<std::filesystem::path> reference_file;      ///< CSV ReqID,Function[,Type] scores classification
  std::optional<std::filesystem::path> gold_file;           ///< pair gold CSV
  std::optional<std::filesystem::path> duplicates_input;    ///< duplicate findings for consolidation
  std::string prompt_version = "V3";
  std::string catalog_method = "llm";  ///< identify_functions: "llm" or "deterministic"
  std::map<std::string, double> thresholds;                 ///< metric name -> threshold override

  std::vector<std::string> warnings;  ///< unknown keys and similar, not fatal

  /// Paths resolve against project_dir, which resolves against `base`.
  [[nodiscard]] std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::filesystem::path base_dir;
};

/// Built-in analysis function names.
[[nodiscard]] const std::vector<std::string>& builtin_analysis_functions();

/// Parses a parameters document: an object whose keys are task names. An
/// optional "defaults" object is merged under every task. Tasks keep file
/// order. Throws InvalidConfig (all field problems at once, each naming task
/// and field) or UnknownAnalysisFunction.
[[nodiscard]] std::vector<TaskConfig> parse_config(const nlohmann::ordered_json& doc,
                                                   const std::filesystem::path& base_dir,
                                                   const std::vector<std::string>& known_functions =
                                                       builtin_analysis_functions());

/// Reads and parses a parameters file; relative project_dir values resolve
/// against the file's directory.
[[nodiscard]] std::vector<TaskConfig> load_config(const std::filesystem::path& path,
                                                  const std::vector<std::string>& known_functions =
                                                      builtin_analysis_functions());

}  // namespace safer
