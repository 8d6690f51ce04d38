#include "safer/config.hpp"

#include "safer/error.hpp"
#include "safer/text.hpp"

#include <algorithm>
#include <set>

namespace safer {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

fs::path TaskConfig::resolve(const fs::path& p) const {
  if (p.is_absolute()) return p;
  fs::path root = project_dir.is_absolute() ? project_dir : base_dir / project_dir;
  return (root / p).lexically_normal();
}

const std::vector<std::string>& builtin_analysis_functions() {
  static const std::vector<std::string> names = {
      "analyze_requirement_completeness", "analyze_requirement_classification",
      "analyze_coverage",                 "analyze_duplicates",
      "analyze_contradictions",           "identify_functions",
  };
  return names;
}

namespace {

class FieldReader {
 public:
  FieldReader(std::string task, const json& block, std::vector<std::string>& problems)
      : task_(std::move(task)), block_(block), problems_(problems) {}

  template <typename Setter>
  void read(const char* key, json::value_t expected, Setter set) {
    seen_.insert(key);
    if (!block_.contains(key)) return;
    const json& v = block_[key];
    if (v.is_null()) return;
    bool ok = v.type() == expected ||
              (expected == json::value_t::number_integer && v.is_number_unsigned()) ||
              (expected == json::value_t::number_float && v.is_number());
    if (!ok) {
      problems_.push_back(task_ + "." + key + ": expected " + type_name(expected) + ", got " + v.type_name());
      return;
    }
    set(v);
  }

  void str(const char* key, std::string& out) {
    read(key, json::value_t::string, [&](const json& v) { out = v.get<std::string>(); });
  }
  void path(const char* key, fs::path& out) {
    read(key, json::value_t::string, [&](const json& v) { out = v.get<std::string>(); });
  }
  void opt_path(const char* key, std::optional<fs::path>& out) {
    read(key, json::value_t::string, [&](const json& v) {
      auto s = v.get<std::string>();
      if (!text::trim(s).empty()) out = fs::path(s);
    });
  }
  void boolean(const char* key, bool& out) {
    read(key, json::value_t::boolean, [&](const json& v) { out = v.get<bool>(); });
  }
  void integer(const char* key, long& out) {
    read(key, json::value_t::number_integer, [&](const json& v) { out = v.get<long>(); });
  }
  void strings(const char* key, std::vector<std::string>& out) {
    read(key, json::value_t::array, [&](const json& v) {
      std::vector<std::string> items;
      for (const auto& item : v) {
        if (!item.is_string()) {
          problems_.push_back(task_ + "." + key + ": every item must be a string");
          return;
        }
        items.push_back(item.get<std::string>());
      }
      out = std::move(items);
    });
  }

  std::vector<std::string> unknown_keys() const {
    std::vector<std::string> out;
    for (auto it = block_.begin(); it != block_.end(); ++it) {
      if (!seen_.count(it.key())) out.push_back(it.key());
    }
    return out;
  }

  bool present(const char* key) const { return block_.contains(key) && !block_[key].is_null(); }

 private:
  static std::string type_name(json::value_t t) {
    switch (t) {
      case json::value_t::string: return "string";
      case json::value_t::boolean: return "boolean";
      case json::value_t::number_integer: return "integer";
      case json::value_t::number_float: return "number";
      case json::value_t::array: return "array";
      case json::value_t::object: return "object";
      default: return "value";
    }
  }

  std::string task_;
  const json& block_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

json merged(const json& defaults, const json& block) {
  json out = defaults.is_object() ? defaults : json::object();
  for (auto it = block.begin(); it != block.end(); ++it) out[it.key()] = it.value();
  return out;
}

}  // namespace

std::vector<TaskConfig> parse_config(const json& doc, const fs::path& base_dir,
                                     const std::vector<std::string>& known_functions) {
  if (doc.is_null()) return {};
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "parameters file must be a JSON object of tasks");

  json defaults = json::object();
  if (doc.contains("defaults")) {
    if (!doc["defaults"].is_object()) throw Error(ErrorCode::InvalidConfig, "\"defaults\" must be an object");
    defaults = doc["defaults"];
  }

  std::vector<TaskConfig> out;
  std::vector<std::string> problems;
  std::vector<std::string> unknown_functions;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() == "defaults") continue;
    const std::string& name = it.key();
    if (!it.value().is_object()) {
      problems.push_back(name + ": task block must be an object");
      continue;
    }
    const json block = merged(defaults, it.value());
    TaskConfig cfg;
    cfg.task_name = name;
    cfg.base_dir = base_dir;
    FieldReader r(name, block, problems);

    r.str("type", cfg.type);
    r.boolean("run", cfg.run);
    r.boolean("delta", cfg.delta);
    r.path("project_dir", cfg.project_dir);
    r.opt_path("readme", cfg.readme);
    r.path("input_file", cfg.input_file);
    r.str("dataset_name", cfg.dataset_name);
    r.str("dataset_id_column", cfg.dataset_id_column);
    r.strings("dataset_columns", cfg.dataset_columns);
    r.strings("result_columns", cfg.result_columns);
    r.opt_path("instructions", cfg.instructions);
    r.opt_path("resources", cfg.resources);
    r.path("output_path", cfg.output_path);
    r.integer("chunk_size", cfg.chunk_size);
    r.integer("max_items", cfg.max_items);
    r.boolean("execute", cfg.execute);
    r.boolean("analyze", cfg.analyze);
    r.str("analysis_function", cfg.analysis_function);
    r.boolean("verbose", cfg.verbose);
    r.read("version_tag", json::value_t::string, [&](const json& v) { cfg.version_tag = v.get<std::string>(); });
    r.opt_path("catalog", cfg.catalog);
    r.opt_path("architecture_model", cfg.architecture_model);
    r.read("alias_hints", json::value_t::object, [&](const json& v) {
      for (auto h = v.begin(); h != v.end(); ++h) {
        if (h.value().is_string()) {
          cfg.alias_hints[h.key()] = h.value().get<std::string>();
        } else {
          problems.push_back(name + ".alias_hints." + h.key() + ": alias must be a string");
        }
      }
    });
    r.opt_path("reference_catalog", cfg.reference_catalog);
    r.opt_path("reference_file", cfg.reference_file);
    r.opt_path("gold_file", cfg.gold_file);
    r.opt_path("duplicates_input", cfg.duplicates_input);
    r.str("prompt_version", cfg.prompt_version);
    r.str("catalog_method", cfg.catalog_method);
    r.read("thresholds", json::value_t::object, [&](const json& v) {
      for (auto h = v.begin(); h != v.end(); ++h) {
        if (h.value().is_number()) {
          cfg.thresholds[h.key()] = h.value().get<double>();
        } else {
          problems.push_back(name + ".thresholds." + h.key() + ": threshold must be a number");
        }
      }
    });

    if (cfg.type != kTaskType) problems.push_back(name + ".type: unsupported task type '" + cfg.type + "'");
    for (const char* required : {"input_file", "output_path", "analysis_function"}) {
      if (!r.present(required)) problems.push_back(name + "." + required + ": required field is missing");
    }
    if (cfg.chunk_size < 1) problems.push_back(name + ".chunk_size: must be at least 1");
    if (cfg.max_items < -1) problems.push_back(name + ".max_items: must be -1 or a count");
    if (cfg.dataset_id_column.empty()) problems.push_back(name + ".dataset_id_column: must not be empty");
    if (cfg.prompt_version != "V1" && cfg.prompt_version != "V2" && cfg.prompt_version != "V3") {
      problems.push_back(name + ".prompt_version: expected V1, V2 or V3");
    }
    if (cfg.catalog_method != "llm" && cfg.catalog_method != "deterministic") {
      problems.push_back(name + ".catalog_method: expected \"llm\" or \"deterministic\"");
    }
    if (cfg.version_tag && (cfg.version_tag->empty() || cfg.version_tag->find('/') != std::string::npos)) {
      problems.push_back(name + ".version_tag: must be a non-empty file-name fragment");
    }
    if (!cfg.analysis_function.empty() &&
        std::find(known_functions.begin(), known_functions.end(), cfg.analysis_function) == known_functions.end()) {
      unknown_functions.push_back(name + ".analysis_function: '" + cfg.analysis_function + "'");
    }
    for (const auto& k : r.unknown_keys()) cfg.warnings.push_back("unknown key '" + k + "' ignored");
    out.push_back(std::move(cfg));
  }
  if (!problems.empty()) throw Error(ErrorCode::InvalidConfig, "invalid parameters file", problems);
  if (!unknown_functions.empty()) {
    throw Error(ErrorCode::UnknownAnalysisFunction, "unknown analysis function", unknown_functions);
  }
  return out;
}

std::vector<TaskConfig> load_config(const fs::path& path, const std::vector<std::string>& known_functions) {
  const std::string bytes = text::read_file(path);
  if (text::trim(bytes).empty()) return {};
  json doc = json::parse(bytes, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::InvalidConfig, "parameters file is not valid JSON: " + path.string());
  fs::path base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(doc, base, known_functions);
}

}  // namespace safer
