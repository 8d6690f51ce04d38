#include "safer/orchestrator.hpp"

#include "safer/csv.hpp"
#include "safer/error.hpp"
#include "safer/gateway.hpp"
#include "safer/opl_parser.hpp"
#include "safer/requirements.hpp"
#include "safer/text.hpp"
#include "safer/xmi_parser.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <set>

namespace safer {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view to_string(TaskStatus s) noexcept {
  switch (s) {
    case TaskStatus::Executed: return "Executed";
    case TaskStatus::SkippedDeltaHit: return "SkippedDeltaHit";
    case TaskStatus::SkippedRunFalse: return "SkippedRunFalse";
    case TaskStatus::Failed: return "Failed";
    case TaskStatus::Planned: return "Planned";
  }
  return "Failed";
}

// ------------------------------------------------------------------ artifacts

namespace {

json score_to_json(const PairScore& s) {
  return json{{"detected_true", s.detected_true}, {"gold_total", s.gold_total},
              {"false_positive", s.false_positive}, {"rate", s.rate},
              {"threshold", s.threshold},           {"pass", s.pass}};
}

PairScore score_from_json(const json& j) {
  PairScore s;
  s.detected_true = j.value("detected_true", std::size_t{0});
  s.gold_total = j.value("gold_total", std::size_t{0});
  s.false_positive = j.value("false_positive", std::size_t{0});
  s.rate = j.value("rate", 0.0);
  s.threshold = j.value("threshold", 80.0);
  s.pass = j.value("pass", false);
  return s;
}

template <typename T>
void take(std::optional<T>& into, const std::optional<T>& from) {
  if (from) into = from;
}

}  // namespace

json Artifacts::to_json() const {
  json j{{"kind", "joined"}, {"dataset", json{{"name", dataset_name}, {"id", dataset_id}}}};
  if (catalog) j["catalog"] = catalog->to_json();
  if (classification) j["classification"] = classification->to_json();
  if (coverage) j["coverage"] = coverage->to_json();
  if (duplicates) j["duplicates"] = duplicates->to_json(PairTask::Duplicates);
  if (contradictions) j["contradictions"] = contradictions->to_json(PairTask::Contradictions);
  if (duplicate_score) j["duplicate_score"] = score_to_json(*duplicate_score);
  if (contradiction_score) j["contradiction_score"] = score_to_json(*contradiction_score);
  json s = json::object();
  if (scores.subsystem_identification) s["subsystem_identification"] = *scores.subsystem_identification;
  if (scores.classification) s["classification"] = *scores.classification;
  if (scores.duplicates) s["duplicates"] = *scores.duplicates;
  if (scores.contradictions) s["contradictions"] = *scores.contradictions;
  if (scores.stability) s["stability"] = *scores.stability;
  if (!s.empty()) j["scores"] = s;
  return j;
}

Artifacts Artifacts::from_json(const json& doc) {
  if (!doc.is_object() || doc.value("kind", "") != "joined") {
    throw Error(ErrorCode::SchemaViolation, "not a joined results document");
  }
  Artifacts a;
  if (doc.contains("dataset") && doc["dataset"].is_object()) {
    a.dataset_name = doc["dataset"].value("name", "");
    a.dataset_id = doc["dataset"].value("id", "");
  }
  if (doc.contains("catalog")) a.catalog = FunctionCatalog::from_json(doc["catalog"]);
  if (doc.contains("classification")) a.classification = ClassificationTable::from_json(doc["classification"]);
  if (doc.contains("coverage")) a.coverage = CoverageMatrix::from_json(doc["coverage"]);
  if (doc.contains("duplicates")) a.duplicates = PairAnalysis::from_json(doc["duplicates"]);
  if (doc.contains("contradictions")) a.contradictions = PairAnalysis::from_json(doc["contradictions"]);
  if (doc.contains("duplicate_score")) a.duplicate_score = score_from_json(doc["duplicate_score"]);
  if (doc.contains("contradiction_score")) a.contradiction_score = score_from_json(doc["contradiction_score"]);
  if (doc.contains("scores") && doc["scores"].is_object()) {
    const json& s = doc["scores"];
    auto opt = [&](const char* k) -> std::optional<double> {
      if (s.contains(k) && s[k].is_number()) return s[k].get<double>();
      return std::nullopt;
    };
    a.scores.subsystem_identification = opt("subsystem_identification");
    a.scores.classification = opt("classification");
    a.scores.duplicates = opt("duplicates");
    a.scores.contradictions = opt("contradictions");
    a.scores.stability = opt("stability");
  }
  return a;
}

void Artifacts::absorb(const Artifacts& other) {
  if (!other.dataset_name.empty()) dataset_name = other.dataset_name;
  if (!other.dataset_id.empty()) dataset_id = other.dataset_id;
  take(catalog, other.catalog);
  take(classification, other.classification);
  take(coverage, other.coverage);
  take(duplicates, other.duplicates);
  take(contradictions, other.contradictions);
  take(duplicate_score, other.duplicate_score);
  take(contradiction_score, other.contradiction_score);
  take(scores.subsystem_identification, other.scores.subsystem_identification);
  take(scores.classification, other.scores.classification);
  take(scores.duplicates, other.scores.duplicates);
  take(scores.contradictions, other.scores.contradictions);
  take(scores.stability, other.scores.stability);
}

// ------------------------------------------------------------------- registry

void AnalysisRegistry::add(std::string name, AnalysisFunction fn) { functions_[std::move(name)] = std::move(fn); }

const AnalysisFunction* AnalysisRegistry::find(std::string_view name) const {
  auto it = functions_.find(name);
  return it == functions_.end() ? nullptr : &it->second;
}

std::vector<std::string> AnalysisRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : functions_) out.push_back(k);
  return out;
}

TaskPaths task_paths(const TaskConfig& cfg, const std::string& version_tag) {
  const fs::path root = cfg.resolve(cfg.output_path);
  const std::string stem = cfg.task_name + "_" + version_tag;
  TaskPaths p;
  p.raw = root / "raw" / (stem + ".json");
  p.partial = root / "raw" / (stem + ".json.partial");
  p.joined_json = root / "joined" / (stem + ".json");
  p.joined_csv = root / "joined" / (stem + ".csv");
  p.quarantine = root / "quarantine" / (stem + ".json");
  return p;
}

std::string resolve_version_tag(const TaskConfig& cfg, const RunOptions& options) {
  if (options.version_tag && !options.version_tag->empty()) return *options.version_tag;
  if (cfg.version_tag) return *cfg.version_tag;
  return text::today_iso();
}

ClassificationTable load_reference_classification(const fs::path& path) {
  auto rows = csv::parse(text::read_file(path));
  if (rows.empty()) throw Error(ErrorCode::EmptyGold, "reference file is empty: " + path.string());
  const auto& header = rows.front().cells;
  auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (text::trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  auto id = col("ReqID");
  auto fn = col("Function");
  auto type = col("Type");
  std::vector<std::string> missing;
  if (!id) missing.push_back("ReqID");
  if (!fn) missing.push_back("Function");
  if (!missing.empty()) throw Error(ErrorCode::MissingColumn, "reference file lacks columns", missing);
  ClassificationTable t;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r].cells;
    auto cell = [&](std::size_t i) { return i < cells.size() ? std::string(text::trim(cells[i])) : std::string(); };
    ClassifiedRequirement row;
    row.req_id = cell(*id);
    if (row.req_id.empty()) continue;
    row.function = cell(*fn);
    if (type) row.rtype = parse_req_type(cell(*type)).value_or(ReqType::Other);
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw Error(ErrorCode::EmptyGold, "reference file has no rows: " + path.string());
  return t;
}

// --------------------------------------------------------- built-in functions

namespace {

constexpr const char* kDefaultDatasetName = "Safety Requirements";

std::string dataset_name_of(const TaskConfig& cfg) {
  return cfg.dataset_name.empty() ? std::string(kDefaultDatasetName) : cfg.dataset_name;
}

json read_json_file(const fs::path& path) {
  json doc = json::parse(text::read_file(path), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::SchemaViolation, "not valid JSON: " + path.string());
  return doc;
}

std::optional<Artifacts> scan_joined(const fs::path& dir, const std::string& tag) {
  const fs::path joined = dir / "joined";
  std::error_code ec;
  if (!fs::is_directory(joined, ec)) return std::nullopt;
  std::vector<fs::path> files;
  const std::string suffix = "_" + tag + ".json";
  for (const auto& entry : fs::directory_iterator(joined)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) return std::nullopt;
  std::sort(files.begin(), files.end());
  Artifacts merged;
  for (const auto& f : files) merged.absorb(Artifacts::from_json(read_json_file(f)));
  return merged;
}

std::optional<Artifacts> load_artifacts_at(const fs::path& path, const std::string& tag) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) return scan_joined(path, tag);
  if (!fs::is_regular_file(path, ec) || path.extension() != ".json") return std::nullopt;
  json doc = read_json_file(path);
  const std::string kind = doc.is_object() ? doc.value("kind", "") : "";
  Artifacts a;
  if (kind == "joined") return Artifacts::from_json(doc);
  if (kind == "classification") {
    a.classification = ClassificationTable::from_json(doc);
    return a;
  }
  if (kind == "duplicates") {
    a.duplicates = PairAnalysis::from_json(doc);
    return a;
  }
  if (kind == "contradictions") {
    a.contradictions = PairAnalysis::from_json(doc);
    return a;
  }
  return std::nullopt;
}

std::vector<PromptResource> load_resources(const TaskConfig& cfg) {
  std::vector<PromptResource> out;
  if (!cfg.resources) return out;
  const std::string bytes = text::read_file(cfg.resolve(*cfg.resources));
  json doc = json::parse(bytes, nullptr, false);
  if (!doc.is_discarded() && doc.is_object()) {
    for (auto it = doc.begin(); it != doc.end(); ++it) out.push_back(PromptResource{it.key(), it.value()});
  } else {
    out.push_back(PromptResource{"resources", bytes});
  }
  return out;
}

std::string load_instructions(const TaskConfig& cfg, std::string_view fallback) {
  if (!cfg.instructions) return std::string(fallback);
  return text::read_file(cfg.resolve(*cfg.instructions));
}

ArchitectureGraph load_graph(const fs::path& path) {
  const std::string body = text::read_file(path);
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".xmi" || ext == ".xml") return parse_xmi_bdd(body);
  return parse_opl(body);
}

FunctionCatalog load_catalog_source(const fs::path& path, const std::string& tag) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    auto a = scan_joined(path, tag);
    if (!a || !a->catalog) throw Error(ErrorCode::MissingUpstream, "missing upstream output: no catalog in " + path.string());
    return *a->catalog;
  }
  json doc = read_json_file(path);
  if (doc.is_object() && doc.value("kind", "") == "joined") {
    if (!doc.contains("catalog")) throw Error(ErrorCode::SchemaViolation, "joined file has no catalog: " + path.string());
    return FunctionCatalog::from_json(doc["catalog"]);
  }
  return FunctionCatalog::from_json(doc);
}

FunctionCatalog resolve_catalog(TaskContext& ctx, const std::vector<PromptResource>& resources) {
  const TaskConfig& cfg = ctx.cfg;
  std::optional<FunctionCatalog> cat;
  if (cfg.catalog) {
    cat = load_catalog_source(cfg.resolve(*cfg.catalog), ctx.version_tag);
  } else if (cfg.architecture_model) {
    auto graph = load_graph(cfg.resolve(*cfg.architecture_model));
    for (const auto& w : graph.warnings()) ctx.diagnostics.push_back("architecture: " + w);
    cat = extract_catalog(graph, cfg.alias_hints);
  } else {
    for (const auto& r : resources) {
      if (r.tag == "ARCHITECTURE") {
        cat = FunctionCatalog::from_json(r.body);
        break;
      }
    }
    if (!cat && ctx.upstream && ctx.upstream->catalog) cat = ctx.upstream->catalog;
  }
  if (!cat) {
    throw Error(ErrorCode::MissingUpstream,
                "no function catalog: set catalog, architecture_model, or an ARCHITECTURE resource");
  }
  for (const auto& w : cat->warnings()) ctx.diagnostics.push_back("catalog: " + w);
  return *cat;
}

const Artifacts& require_upstream(const TaskContext& ctx, bool need_classification) {
  if (!ctx.upstream || (need_classification && !ctx.upstream->classification)) {
    throw Error(ErrorCode::MissingUpstream,
                "missing upstream output: no classification results at " + ctx.cfg.resolve(ctx.cfg.input_file).string());
  }
  return *ctx.upstream;
}

// Malformed replies turn every row of the chunk into an unreturned row.
ClassificationTable join_or_unreturned(const RequirementChunk& chunk, const std::string& reply,
                                       const FunctionCatalog& catalog, std::vector<std::string>& diagnostics) {
  try {
    return join_classification(chunk, reply, catalog);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoJsonFound && e.code() != ErrorCode::MissingResultsRoot) throw;
    diagnostics.push_back("chunk " + std::to_string(chunk.index) + ": " + std::string(to_string(e.code())) +
                          ", all rows marked unreturned");
    ClassificationTable t;
    for (const auto& r : chunk.items) t.rows.push_back(unreturned_row(r));
    t.quarantine.push_back(QuarantinedRecord{chunk.index, json{{"reply", reply}}, {e.what()}});
    return t;
  }
}

std::optional<double> classification_score(const ClassificationTable& table, const fs::path& ref_path,
                                           std::vector<std::string>& diagnostics) {
  auto reference = load_reference_classification(ref_path);
  ClassificationTable ref_kept, run_kept;
  for (const auto& r : reference.rows) {
    if (const auto* row = table.find(r.req_id)) {
      ref_kept.rows.push_back(r);
      run_kept.rows.push_back(*row);
    } else {
      diagnostics.push_back("reference id " + r.req_id + " not in results");
    }
  }
  if (ref_kept.rows.empty()) return std::nullopt;
  return consistency({run_kept}, &ref_kept);
}

PreparedTask prepare_classification(TaskContext& ctx, bool with_coverage) {
  const TaskConfig& cfg = ctx.cfg;
  const std::string dataset = dataset_name_of(cfg);
  auto reqs = load_requirements(cfg.resolve(cfg.input_file), cfg.dataset_id_column, cfg.dataset_columns, dataset);
  auto resources = load_resources(cfg);
  auto catalog = resolve_catalog(ctx, resources);
  const std::string instructions = load_instructions(cfg, default_classification_instructions());
  auto chunks = chunk(reqs.items, cfg.chunk_size, cfg.max_items);

  PreparedTask task;
  task.csv_kinds = with_coverage ? std::vector<std::string>{"classification", "coverage"}
                                 : std::vector<std::string>{"classification"};
  for (const auto& c : chunks) {
    PromptUnit u;
    u.label = "chunk-" + std::to_string(c.index);
    for (const auto& r : c.items) u.ids.push_back(r.req_id);
    u.prompt = assemble_prompt(build_classification_prompt(c, catalog, instructions, dataset, resources));
    task.units.push_back(std::move(u));
  }
  auto* diags = &ctx.diagnostics;
  task.analyze = [chunks, catalog, reqs, with_coverage, cfg, diags](const std::vector<std::string>& replies) {
    Artifacts a;
    a.dataset_name = reqs.dataset_name;
    a.dataset_id = reqs.dataset_id;
    a.catalog = catalog;
    ClassificationTable table;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      auto part = join_or_unreturned(chunks[i], replies[i], catalog, *diags);
      for (auto& r : part.rows) table.rows.push_back(std::move(r));
      for (auto& q : part.quarantine) table.quarantine.push_back(std::move(q));
    }
    if (!table.quarantine.empty()) {
      diags->push_back(std::to_string(table.quarantine.size()) + " reply record(s) quarantined");
    }
    if (cfg.reference_file) {
      a.scores.classification = classification_score(table, cfg.resolve(*cfg.reference_file), *diags);
    }
    if (with_coverage) a.coverage = build_matrix(table.rows, catalog);
    a.classification = std::move(table);
    return a;
  };
  return task;
}

PreparedTask prepare_coverage(TaskContext& ctx) {
  const Artifacts& up = require_upstream(ctx, true);
  auto resources = load_resources(ctx.cfg);
  FunctionCatalog catalog = resolve_catalog(ctx, resources);
  PreparedTask task;
  task.uses_llm = false;
  task.csv_kinds = {"coverage"};
  task.analyze = [up, catalog](const std::vector<std::string>&) {
    Artifacts a;
    a.dataset_name = up.dataset_name;
    a.dataset_id = up.dataset_id;
    a.catalog = catalog;
    a.classification = up.classification;
    a.coverage = build_matrix(up.classification->rows, catalog);
    return a;
  };
  return task;
}

std::optional<GoldPairs> load_gold(const TaskConfig& cfg, PairKind kind, const ClassificationTable& table,
                                   std::vector<std::string>& diagnostics) {
  if (!cfg.gold_file) return std::nullopt;
  auto gold = GoldPairs::load(cfg.resolve(*cfg.gold_file), kind);
  std::set<std::string> ids;
  for (const auto& r : table.rows) ids.insert(r.req_id);
  for (const auto& id : gold.unknown_ids(ids)) diagnostics.push_back("gold id " + id + " not in the dataset");
  return gold;
}

void note_ignored_prompt_inputs(const TaskConfig& cfg, std::vector<std::string>& diagnostics) {
  if (cfg.instructions) diagnostics.push_back("instructions file ignored: pair prompts use the versioned instruction set");
  if (cfg.resources) diagnostics.push_back("resources file ignored by pair analyses");
}

PreparedTask prepare_pairs(TaskContext& ctx, PairTask which) {
  const TaskConfig& cfg = ctx.cfg;
  const Artifacts& up = require_upstream(ctx, true);
  note_ignored_prompt_inputs(cfg, ctx.diagnostics);
  const FunctionCatalog* catalog = up.catalog ? &*up.catalog : nullptr;
  const std::string dataset = dataset_name_of(cfg);

  PromptVersion version = PromptVersion::V3;
  std::vector<ClassifiedRequirement> rows = up.classification->rows;
  if (which == PairTask::Duplicates) {
    version = parse_prompt_version(cfg.prompt_version).value_or(PromptVersion::V3);
  } else {
    std::optional<PairAnalysis> dups;
    if (cfg.duplicates_input) {
      auto loaded = load_artifacts_at(cfg.resolve(*cfg.duplicates_input), ctx.version_tag);
      if (!loaded || !loaded->duplicates) {
        throw Error(ErrorCode::MissingUpstream,
                    "missing upstream output: no duplicate findings at " + cfg.resolve(*cfg.duplicates_input).string());
      }
      dups = loaded->duplicates;
    } else if (up.duplicates) {
      dups = up.duplicates;
    }
    if (dups) {
      auto merged = consolidate(rows, dups->findings);
      ctx.diagnostics.push_back("consolidated " + std::to_string(merged.representative.size()) +
                                " duplicate requirement(s) before the contradiction pass");
      rows = std::move(merged.survivors);
    } else {
      ctx.diagnostics.push_back("no duplicate findings found; contradictions run over the full list");
    }
  }

  auto clusters = cluster_by_function(rows, catalog);
  auto prompts = build_pair_prompts(clusters, which, version, dataset);
  PreparedTask task;
  task.csv_kinds = {which == PairTask::Duplicates ? "duplicates" : "contradictions"};
  for (const auto& p : prompts) {
    PromptUnit u;
    u.label = "cluster-" + p.source_cluster;
    for (const auto& m : p.members) u.ids.push_back(m.req_id);
    u.prompt = p.prompt;
    task.units.push_back(std::move(u));
  }
  const PairKind gold_kind = which == PairTask::Duplicates ? PairKind::Duplicate : PairKind::Contradiction;
  auto gold = load_gold(cfg, gold_kind, *up.classification, ctx.diagnostics);
  auto* diags = &ctx.diagnostics;
  task.analyze = [prompts, which, version, up, gold, diags](const std::vector<std::string>& replies) {
    std::vector<PairAnalysis> parts;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      try {
        parts.push_back(validate_pair_reply(prompts[i], replies[i], which, version));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoJsonFound && e.code() != ErrorCode::MissingResultsRoot) throw;
        diags->push_back("cluster " + prompts[i].source_cluster + ": " + std::string(to_string(e.code())));
        PairAnalysis bad;
        bad.quarantine.push_back(QuarantinedRecord{prompts[i].index, json{{"reply", replies[i]}}, {e.what()}});
        parts.push_back(std::move(bad));
      }
    }
    Artifacts a;
    a.dataset_name = up.dataset_name;
    a.dataset_id = up.dataset_id;
    a.catalog = up.catalog;
    a.classification = up.classification;
    PairAnalysis merged = merge_analyses(std::move(parts));
    if (which == PairTask::Duplicates) {
      if (gold) a.duplicate_score = score(merged.findings, *gold);
      a.duplicates = std::move(merged);
    } else {
      if (gold) a.contradiction_score = score(merged.findings, *gold);
      a.duplicates = up.duplicates;
      a.contradictions = std::move(merged);
    }
    return a;
  };
  return task;
}

PreparedTask prepare_identify(TaskContext& ctx) {
  const TaskConfig& cfg = ctx.cfg;
  const fs::path model_path = cfg.resolve(cfg.input_file);
  std::optional<FunctionCatalog> reference;
  if (cfg.reference_catalog) reference = load_catalog_source(cfg.resolve(*cfg.reference_catalog), ctx.version_tag);
  auto finish = [reference, model_path](FunctionCatalog cat) {
    Artifacts a;
    a.dataset_name = model_path.stem().string();
    a.dataset_id = text::sha256_hex(text::read_file(model_path)).substr(0, 12);
    if (reference) a.scores.subsystem_identification = catalog_accuracy(cat, *reference);
    a.catalog = std::move(cat);
    return a;
  };

  PreparedTask task;
  task.csv_kinds = {"catalog"};
  auto* diags = &ctx.diagnostics;
  if (cfg.catalog_method == "deterministic") {
    auto graph = load_graph(model_path);
    for (const auto& w : graph.warnings()) ctx.diagnostics.push_back("architecture: " + w);
    auto cat = extract_catalog(graph, cfg.alias_hints);
    task.uses_llm = false;
    task.analyze = [cat, finish, diags](const std::vector<std::string>&) {
      for (const auto& w : cat.warnings()) diags->push_back("catalog: " + w);
      return finish(cat);
    };
    return task;
  }
  const std::string instructions = load_instructions(cfg, default_function_instructions());
  PromptUnit u;
  u.label = "model";
  u.prompt = assemble_prompt(build_function_prompt(text::read_file(model_path), instructions));
  task.units.push_back(std::move(u));
  task.analyze = [finish, diags](const std::vector<std::string>& replies) {
    auto cat = catalog_from_reply(replies.at(0));
    for (const auto& w : cat.warnings()) diags->push_back("catalog: " + w);
    return finish(std::move(cat));
  };
  return task;
}

std::string catalog_csv(const FunctionCatalog& cat) {
  std::string out = csv::format_row({"Alias", "Lineage", "Primary System"});
  for (const auto& e : cat.entries()) out += csv::format_row({e.alias, e.lineage_string(), e.primary_system});
  return out;
}

std::optional<std::string> csv_of(const Artifacts& a, const std::string& kind) {
  if (kind == "classification" && a.classification) return a.classification->to_csv();
  if (kind == "coverage" && a.coverage) return a.coverage->to_csv();
  if (kind == "duplicates" && a.duplicates) return a.duplicates->to_csv();
  if (kind == "contradictions" && a.contradictions) return a.contradictions->to_csv();
  if (kind == "catalog" && a.catalog) return catalog_csv(*a.catalog);
  return std::nullopt;
}

json quarantine_of(const Artifacts& a, const std::vector<std::string>& kinds) {
  json records = json::array();
  auto add = [&](const std::vector<QuarantinedRecord>& qs) {
    for (const auto& q : qs) records.push_back(json{{"chunk", q.chunk_index}, {"record", q.record}, {"reasons", q.reasons}});
  };
  for (const auto& k : kinds) {
    if (k == "classification" && a.classification) add(a.classification->quarantine);
    if (k == "duplicates" && a.duplicates) add(a.duplicates->quarantine);
    if (k == "contradictions" && a.contradictions) add(a.contradictions->quarantine);
  }
  return records;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json raw_document(const TaskConfig& cfg, const std::string& tag, const std::vector<PromptUnit>& units,
                  const std::vector<std::optional<std::string>>& replies) {
  json j{{"task", cfg.task_name}, {"version_tag", tag}, {"units", json::array()}};
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (!replies[i]) continue;
    j["units"].push_back(json{{"label", units[i].label},
                              {"ids", units[i].ids},
                              {"prompt_sha256", text::sha256_hex(units[i].prompt)},
                              {"reply", *replies[i]}});
  }
  return j;
}

// Replies from an earlier raw file, when it answers exactly these prompts.
std::optional<std::vector<std::string>> reuse_raw(const fs::path& raw, const std::vector<PromptUnit>& units) {
  std::error_code ec;
  if (!fs::is_regular_file(raw, ec)) return std::nullopt;
  json doc = json::parse(text::read_file(raw), nullptr, false);
  if (doc.is_discarded() || !doc.contains("units") || !doc["units"].is_array()) return std::nullopt;
  const json& saved = doc["units"];
  if (saved.size() != units.size()) return std::nullopt;
  std::vector<std::string> replies;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (saved[i].value("prompt_sha256", "") != text::sha256_hex(units[i].prompt)) return std::nullopt;
    replies.push_back(saved[i].value("reply", ""));
  }
  return replies;
}

}  // namespace

AnalysisRegistry AnalysisRegistry::builtin() {
  AnalysisRegistry r;
  r.add("analyze_requirement_completeness", [](TaskContext& c) { return prepare_classification(c, true); });
  r.add("analyze_requirement_classification", [](TaskContext& c) { return prepare_classification(c, false); });
  r.add("analyze_coverage", prepare_coverage);
  r.add("analyze_duplicates", [](TaskContext& c) { return prepare_pairs(c, PairTask::Duplicates); });
  r.add("analyze_contradictions", [](TaskContext& c) { return prepare_pairs(c, PairTask::Contradictions); });
  r.add("identify_functions", prepare_identify);
  return r;
}

// --------------------------------------------------------------- orchestrator

Orchestrator::Orchestrator(AnalysisRegistry registry, std::shared_ptr<LlmGateway> gateway, RunOptions options)
    : registry_(std::move(registry)), gateway_(std::move(gateway)), options_(std::move(options)) {}

void Orchestrator::log(const std::string& line) const {
  if (options_.log) *options_.log << line << "\n";
}

TaskOutcome Orchestrator::run_task(const TaskConfig& cfg) { return execute(cfg, resolve_version_tag(cfg, options_)); }

TaskOutcome Orchestrator::execute(const TaskConfig& cfg, const std::string& tag) {
  TaskOutcome out;
  out.task_name = cfg.task_name;
  for (const auto& w : cfg.warnings) out.diagnostics.push_back(w);
  if (!cfg.run) {
    out.status = TaskStatus::SkippedRunFalse;
    log("[" + cfg.task_name + "] skipped (run is false)");
    return out;
  }

  const TaskPaths paths = task_paths(cfg, tag);
  const fs::path primary = cfg.analyze ? paths.joined_json : paths.raw;
  std::error_code ec;
  if (cfg.delta && !options_.force && !options_.dry_run && fs::exists(primary, ec)) {
    out.status = TaskStatus::SkippedDeltaHit;
    out.outputs.push_back(primary);
    out.diagnostics.push_back("output exists: " + primary.string());
    if (fs::exists(paths.joined_json, ec)) {
      try {
        artifacts_[cfg.task_name] = Artifacts::from_json(read_json_file(paths.joined_json));
      } catch (const Error& e) {
        out.diagnostics.push_back(std::string("could not reload joined output: ") + e.what());
      }
    }
    log("[" + cfg.task_name + "] delta hit, " + primary.string());
    return out;
  }

  try {
    if (cfg.readme) {
      const std::string readme = text::read_file(cfg.resolve(*cfg.readme));
      out.diagnostics.push_back("readme: " + cfg.resolve(*cfg.readme).string());
      log("[" + cfg.task_name + "] README");
      for (const auto& line : text::split_lines(readme)) log("  " + line);
    }
    const AnalysisFunction* fn = registry_.find(cfg.analysis_function);
    if (!fn) throw Error(ErrorCode::UnknownAnalysisFunction, "unknown analysis function '" + cfg.analysis_function + "'");

    std::optional<Artifacts> upstream = load_artifacts_at(cfg.resolve(cfg.input_file), tag);
    TaskContext ctx{cfg, tag, upstream ? &*upstream : nullptr, out.diagnostics};
    PreparedTask prepared = (*fn)(ctx);

    if (options_.dry_run) {
      out.status = TaskStatus::Planned;
      out.diagnostics.push_back(std::to_string(prepared.units.size()) + " prompt(s) planned");
      if (options_.verbose) {
        for (const auto& u : prepared.units) log("[" + cfg.task_name + "] " + u.label + "\n" + u.prompt);
      }
      return out;
    }

    std::vector<std::string> replies;
    if (prepared.uses_llm) {
      std::optional<std::vector<std::string>> reused;
      if ((cfg.delta && !options_.force) || !cfg.execute) reused = reuse_raw(paths.raw, prepared.units);
      if (reused) {
        replies = std::move(*reused);
        out.diagnostics.push_back("reused raw results: " + paths.raw.string());
      } else {
        if (!cfg.execute) {
          throw Error(ErrorCode::MissingUpstream,
                      "execute is false and no raw results match the current prompts: " + paths.raw.string());
        }
        if (!gateway_) throw Error(ErrorCode::InvalidConfig, "no backend configured");
        std::vector<std::string> prompts;
        for (const auto& u : prepared.units) prompts.push_back(u.prompt);
        const std::size_t before = gateway_->backend_calls();
        auto batch = gateway_->send_batch(prompts);
        out.backend_calls = gateway_->backend_calls() - before;

        std::vector<std::optional<std::string>> got(batch.size());
        std::optional<std::size_t> first_failure;
        for (std::size_t i = 0; i < batch.size(); ++i) {
          if (batch[i].result) {
            got[i] = batch[i].result->raw_text;
            if (batch[i].result->status == ResultStatus::ParseFailed && options_.verbose) {
              log("[" + cfg.task_name + "] " + prepared.units[i].label + ": reply has no results");
            }
          } else if (!first_failure) {
            first_failure = i;
          }
        }
        if (first_failure) {
          text::write_file(paths.partial, dump(raw_document(cfg, tag, prepared.units, got)));
          out.outputs.push_back(paths.partial);
          out.diagnostics.push_back("unit " + prepared.units[*first_failure].label + " failed");
          std::rethrow_exception(batch[*first_failure].error);
        }
        text::write_file(paths.raw, dump(raw_document(cfg, tag, prepared.units, got)));
        fs::remove(paths.partial, ec);
        for (auto& g : got) replies.push_back(std::move(*g));
      }
      out.outputs.push_back(paths.raw);
    } else if (!cfg.analyze) {
      out.diagnostics.push_back("analyze is false but this function has no generative step; analysis ran anyway");
    }

    if (cfg.analyze || !prepared.uses_llm) {
      Artifacts produced = prepared.analyze(replies);
      text::write_file(paths.joined_json, dump(produced.to_json()));
      out.outputs.push_back(paths.joined_json);
      bool first = true;
      for (const auto& kind : prepared.csv_kinds) {
        auto body = csv_of(produced, kind);
        if (!body) continue;
        fs::path p = paths.joined_csv;
        if (!first) p.replace_extension("." + kind + ".csv");
        text::write_file(p, *body);
        out.outputs.push_back(p);
        first = false;
      }
      json q{{"task", cfg.task_name}, {"version_tag", tag}, {"records", quarantine_of(produced, prepared.csv_kinds)}};
      text::write_file(paths.quarantine, dump(q));
      out.outputs.push_back(paths.quarantine);
      artifacts_[cfg.task_name] = std::move(produced);
    }
    out.status = TaskStatus::Executed;
    log("[" + cfg.task_name + "] executed, " + std::to_string(out.backend_calls) + " backend call(s)");
  } catch (const std::exception& e) {
    out.status = TaskStatus::Failed;
    out.diagnostics.push_back(e.what());
    log("[" + cfg.task_name + "] failed: " + e.what());
  }
  return out;
}

std::vector<TaskOutcome> Orchestrator::run_all(const std::vector<TaskConfig>& configs) {
  std::vector<TaskOutcome> outcomes;
  struct Ran {
    const TaskConfig* cfg;
    std::string tag;
    TaskStatus status;
  };
  std::vector<Ran> ran;

  for (const auto& cfg : configs) {
    if (options_.only_task && cfg.task_name != *options_.only_task) continue;
    const std::string tag = resolve_version_tag(cfg, options_);
    const fs::path input = cfg.resolve(cfg.input_file);
    const Ran* upstream = nullptr;
    for (const auto& r : ran) {
      if (r.cfg->resolve(r.cfg->output_path) == input) upstream = &r;
    }
    TaskOutcome out;
    if (cfg.run && upstream && upstream->status == TaskStatus::Failed) {
      out.task_name = cfg.task_name;
      out.status = TaskStatus::Failed;
      out.diagnostics.push_back("missing upstream output: task '" + upstream->cfg->task_name + "' failed");
      log("[" + cfg.task_name + "] failed: missing upstream output");
    } else {
      out = execute(cfg, tag);
    }
    ran.push_back(Ran{&cfg, tag, out.status});
    outcomes.push_back(std::move(out));
  }

  if (options_.dry_run) return outcomes;

  // one report set per (output directory, version tag)
  std::vector<std::pair<fs::path, std::string>> groups;
  for (const auto& r : ran) {
    if (r.status != TaskStatus::Executed && r.status != TaskStatus::SkippedDeltaHit) continue;
    if (!artifacts_.count(r.cfg->task_name)) continue;
    std::pair<fs::path, std::string> key{r.cfg->resolve(r.cfg->output_path), r.tag};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }
  for (const auto& [dir, tag] : groups) {
    Artifacts merged;
    ReportInputs inputs;
    for (const auto& r : ran) {
      if (r.cfg->resolve(r.cfg->output_path) != dir || r.tag != tag) continue;
      auto it = artifacts_.find(r.cfg->task_name);
      if (it == artifacts_.end()) continue;
      merged.absorb(it->second);
      for (const auto& [name, value] : r.cfg->thresholds) {
        if (name == "subsystem_identification") inputs.thresholds.subsystem_identification = value;
        if (name == "classification") inputs.thresholds.classification = value;
        if (name == "duplicates") inputs.thresholds.duplicates = value;
        if (name == "contradictions") inputs.thresholds.contradictions = value;
        if (name == "stability") inputs.thresholds.stability = value;
      }
    }
    inputs.dataset_name = merged.dataset_name;
    inputs.dataset_id = merged.dataset_id;
    inputs.catalog = merged.catalog;
    inputs.classification = merged.classification;
    inputs.coverage = merged.coverage;
    inputs.duplicates = merged.duplicates;
    inputs.contradictions = merged.contradictions;
    inputs.duplicate_score = merged.duplicate_score;
    inputs.contradiction_score = merged.contradiction_score;
    inputs.scores = merged.scores;
    try {
      auto set = emit_report_set(inputs, dir, tag);
      for (auto& f : set.files) report_files_.push_back(f);
      log("reports written to " + (dir / "reports").string());
    } catch (const std::exception& e) {
      log(std::string("report generation failed: ") + e.what());
    }
  }
  return outcomes;
}

}  // namespace safer
