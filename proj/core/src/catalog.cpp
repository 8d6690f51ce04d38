#include "safer/catalog.hpp"

#include "safer/error.hpp"
#include "safer/gateway.hpp"
#include "safer/results_json.hpp"
#include "safer/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace safer {

using json = nlohmann::ordered_json;

namespace {

std::string collapse_ws(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Splits "a / b/c" into trimmed segments; empty segments are kept so callers
// can reject them.
std::vector<std::string> split_lineage(std::string_view value) {
  std::vector<std::string> out;
  std::string collapsed = collapse_ws(value);
  std::size_t start = 0;
  while (true) {
    auto slash = collapsed.find('/', start);
    auto piece = std::string_view(collapsed).substr(start, slash == std::string::npos ? std::string::npos : slash - start);
    out.emplace_back(text::trim(piece));
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return out;
}

std::optional<std::string> lineage_problem(const std::vector<std::string>& lineage) {
  if (lineage.empty() || lineage.size() > 3) {
    return "lineage has " + std::to_string(lineage.size()) + " segments (1 to 3 allowed)";
  }
  for (const auto& seg : lineage) {
    if (seg.empty()) return std::string("lineage has an empty segment");
  }
  return std::nullopt;
}

CatalogEntry catch_all(std::string primary) {
  return CatalogEntry{std::string(kOtherFunction), {std::string(kOtherFunctionName)}, std::move(primary)};
}

}  // namespace

std::string CatalogEntry::lineage_string() const { return text::join(lineage, "/"); }

FunctionCatalog::FunctionCatalog() : entries_{catch_all("")} {}

FunctionCatalog::FunctionCatalog(std::vector<CatalogEntry> entries) : entries_(std::move(entries)) {
  std::vector<std::string> problems;
  std::set<std::string, std::less<>> seen;
  for (auto& e : entries_) {
    e.alias = std::string(text::trim(e.alias));
    if (e.alias.empty()) {
      problems.push_back("entry with empty alias (" + e.lineage_string() + ")");
      continue;
    }
    if (!seen.insert(e.alias).second) problems.push_back("duplicate alias " + e.alias);
    for (auto& seg : e.lineage) seg = collapse_ws(seg);
    if (auto p = lineage_problem(e.lineage)) problems.push_back(e.alias + ": " + *p);
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::SchemaViolation, "invalid function catalog", std::move(problems));
  }
  if (!seen.count(kOtherFunction)) {
    std::string primary = entries_.empty() ? std::string{} : entries_.front().primary_system;
    // keep the catch-all right after the first primary's block
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const CatalogEntry& e) { return e.primary_system != primary; });
    entries_.insert(it, catch_all(primary));
    warn("catalog had no _OF_ entry; catch-all added");
  }
}

const CatalogEntry* FunctionCatalog::find(std::string_view alias) const {
  for (const auto& e : entries_) {
    if (e.alias == alias) return &e;
  }
  return nullptr;
}

std::vector<std::string> FunctionCatalog::aliases() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.alias);
  return out;
}

json FunctionCatalog::to_json() const {
  json out = json::object();
  for (const auto& e : entries_) {
    out[e.primary_system][e.alias] = e.lineage_string();
  }
  return out;
}

json FunctionCatalog::alias_map() const {
  json out = json::object();
  for (const auto& e : entries_) out[e.alias] = e.lineage_string();
  return out;
}

FunctionCatalog FunctionCatalog::from_json(const json& input) {
  const json* doc = &input;
  if (doc->is_object() && doc->contains("results")) doc = &(*doc)["results"];
  if (!doc->is_object()) {
    throw Error(ErrorCode::SchemaViolation, "catalog must be a JSON object of primary systems");
  }

  std::vector<CatalogEntry> entries;
  std::vector<std::string> problems;
  auto add = [&](const std::string& primary, const std::string& alias, const json& value) {
    if (!value.is_string()) {
      problems.push_back(alias + ": lineage is not a string");
      return;
    }
    auto lineage = split_lineage(value.get<std::string>());
    if (auto p = lineage_problem(lineage)) {
      problems.push_back(alias + ": " + *p);
      return;
    }
    std::string owner = primary;
    if (owner.empty() && lineage.size() > 1) owner = lineage.front();
    entries.push_back(CatalogEntry{alias, std::move(lineage), std::move(owner)});
  };

  const bool flat = std::all_of(doc->begin(), doc->end(), [](const json& v) { return v.is_string(); });
  for (auto it = doc->begin(); it != doc->end(); ++it) {
    if (flat) {
      add("", it.key(), it.value());
    } else if (!it.value().is_object()) {
      problems.push_back(it.key() + ": primary system value is not a key:value map");
    } else {
      for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) add(it.key(), jt.key(), jt.value());
    }
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::SchemaViolation, "malformed catalog JSON", std::move(problems));
  }
  if (entries.empty()) {
    FunctionCatalog out(std::move(entries));
    out.warn("catalog JSON held no functions");
    return out;
  }
  return FunctionCatalog(std::move(entries));
}

std::string derive_alias(std::string_view name) {
  static const std::set<std::string, std::less<>> connectives = {
      "a", "an", "and", "the", "of", "for", "to", "in", "on", "by", "or", "with", "&"};
  std::istringstream in{std::string(name)};
  std::string word, all, kept;
  while (in >> word) {
    auto first = std::find_if(word.begin(), word.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
    if (first == word.end()) continue;
    char initial = static_cast<char>(std::toupper(static_cast<unsigned char>(*first)));
    all += initial;
    if (!connectives.count(lower(word))) kept += initial;
  }
  if (!kept.empty()) return kept;
  return all.empty() ? std::string("F") : all;
}

// ---------------------------------------------------------------- deterministic path

namespace {

bool contains_target(const OplRelation& r, const std::string& name) {
  return std::find(r.targets.begin(), r.targets.end(), name) != r.targets.end();
}

bool is_containment(RelationKind k) {
  return k == RelationKind::Aggregation || k == RelationKind::Exhibition;
}

}  // namespace

FunctionCatalog extract_catalog(const ArchitectureGraph& graph,
                                const std::map<std::string, std::string>& alias_hints) {
  auto kind_of = [&](const std::string& name) -> std::optional<ThingKind> {
    const OplThing* t = graph.find(name);
    return t ? std::optional<ThingKind>(t->kind) : std::nullopt;
  };

  // first containing Object per Object
  std::map<std::string, std::string> parent;
  std::vector<std::string> objects, processes;
  for (const auto& name : graph.declaration_order()) {
    (kind_of(name) == ThingKind::Object ? objects : processes).push_back(name);
  }
  if (objects.empty()) throw Error(ErrorCode::NoPrimarySystem, "model declares no objects");
  for (const auto& r : graph.relations()) {
    if (!is_containment(r.kind) || kind_of(r.source) != ThingKind::Object) continue;
    for (const auto& t : r.targets) {
      if (t != r.source && kind_of(t) == ThingKind::Object && !parent.count(t)) parent[t] = r.source;
    }
  }

  std::vector<std::string> primaries;
  for (const auto& o : objects) {
    if (!parent.count(o)) primaries.push_back(o);
  }
  if (primaries.empty()) {
    throw Error(ErrorCode::NoPrimarySystem, "every object is contained by another (cyclic containment)");
  }

  auto primary_of = [&](const std::string& object) {
    std::set<std::string> visited;
    std::string cur = object;
    while (parent.count(cur)) {
      if (!visited.insert(cur).second) {
        throw Error(ErrorCode::NoPrimarySystem, "containment cycle through " + cur);
      }
      cur = parent.at(cur);
    }
    return cur;
  };

  // owner Object of each directly owned function
  std::map<std::string, std::string> owner;
  for (const auto& p : processes) {
    for (RelationKind k : {RelationKind::Exhibition, RelationKind::Handles}) {
      for (const auto& r : graph.relations()) {
        if (r.kind == k && kind_of(r.source) == ThingKind::Object && contains_target(r, p)) {
          owner[p] = r.source;
          break;
        }
      }
      if (owner.count(p)) break;
    }
  }

  // sub-functions: parts of an already cataloged process
  std::map<std::string, std::string> parent_function;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : processes) {
      if (owner.count(p) || parent_function.count(p)) continue;
      for (const auto& r : graph.relations()) {
        if (!is_containment(r.kind) || r.source == p || !contains_target(r, p)) continue;
        if (kind_of(r.source) != ThingKind::Process) continue;
        if (owner.count(r.source) || parent_function.count(r.source)) {
          parent_function[p] = r.source;
          changed = true;
          break;
        }
      }
    }
  }

  auto root_owner = [&](std::string p) {
    std::set<std::string> visited;
    while (!owner.count(p) && visited.insert(p).second) p = parent_function.at(p);
    return owner.at(p);
  };

  struct Pending {
    std::string name;
    std::vector<std::string> lineage;
    std::string primary;
  };
  std::map<std::string, std::vector<Pending>> by_primary;
  std::vector<std::string> warnings;
  for (const auto& p : processes) {
    if (!owner.count(p) && !parent_function.count(p)) {
      warnings.push_back("process '" + p + "' has no owning object; not cataloged");
      continue;
    }
    const std::string obj = root_owner(p);
    const std::string primary = primary_of(obj);
    std::vector<std::string> lineage{primary};
    if (owner.count(p)) {
      if (obj != primary) lineage.push_back(obj);
    } else {
      lineage.push_back(obj != primary ? obj : parent_function.at(p));
    }
    lineage.push_back(p);
    by_primary[primary].push_back(Pending{p, std::move(lineage), primary});
  }

  std::vector<CatalogEntry> entries;
  std::set<std::string, std::less<>> taken{std::string(kOtherFunction)};
  auto unique = [&](std::string alias) {
    if (taken.insert(alias).second) return alias;
    for (int n = 2;; ++n) {
      std::string candidate = alias + std::to_string(n);
      if (taken.insert(candidate).second) return candidate;
    }
  };
  bool catch_all_placed = false;
  for (const auto& primary : primaries) {
    auto it = by_primary.find(primary);
    if (it == by_primary.end()) continue;
    for (auto& f : it->second) {
      std::string alias;
      if (auto h = alias_hints.find(f.name); h != alias_hints.end()) {
        alias = h->second;
      } else if (const OplThing* t = graph.find(f.name); t && t->alias) {
        alias = *t->alias;
      } else {
        alias = derive_alias(f.name);
      }
      entries.push_back(CatalogEntry{unique(alias), std::move(f.lineage), f.primary});
    }
    if (!catch_all_placed) {
      entries.push_back(catch_all(primary));
      catch_all_placed = true;
    }
  }
  if (!catch_all_placed) {
    entries.push_back(catch_all(primaries.front()));
    warnings.push_back("model exhibits no functions; catalog holds only _OF_");
  }

  FunctionCatalog out(std::move(entries));
  for (auto& w : warnings) out.warn(std::move(w));
  return out;
}

// ---------------------------------------------------------------- LLM path

std::string_view default_function_instructions() {
  static const std::string text =
      "1. The <architecture_model> resource is an Object-Process Methodology (OPM) specification of a system "
      "architecture model.\n"
      "2. Identify the system, subsystems, and functions in the <architecture_model> resource.\n"
      "3. Provide the results in a json structure with the root node \"results\". Under the root node "
      "\"results\" there is a node for each one of the primary systems. Under each primary system node is a "
      "set of key:value pairs in this pattern:\n"
      "{\"results\": {\"Drone\": {\"key1\": \"subsystem1/function11\", \"key2\": \"subsystem2/function21\"}}}\n"
      "- the key is the alias of the leaf function or a unique abbreviation of the name if no alias is given.\n"
      "- the value is the lineage of the system name/sub-system name/function name.\n"
      "- a system can consist of sub-systems and they are both OPM things of type \"Object\".\n"
      "- a primary system is a system that has no parent in the model, i.e., no other system consists of it.\n"
      "- a system/sub-system object can exhibit an OPM Process, which represents a function of the owner "
      "system/sub-system.\n"
      "- DO NOT REFER to input/output objects that are passed from function to function as subsystems.\n"
      "4. Include a placeholder called \"Other Function\" with the key \"_OF_\" which will serve as a catch-all "
      "for later analysis.";
  return text;
}

PromptEnvelope build_function_prompt(std::string_view model_text, std::string_view instructions) {
  return PromptEnvelope(std::string(instructions),
                        {PromptResource{"architecture_model", std::string(model_text)}}, "", {});
}

FunctionCatalog catalog_from_reply(std::string_view raw) {
  json doc;
  try {
    doc = locate_json_value(raw);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, "catalog reply holds no JSON", {e.what()});
  }
  return FunctionCatalog::from_json(doc);
}

FunctionCatalog extract_catalog_llm(std::string_view model_text, LlmGateway& gateway,
                                    std::string_view instructions) {
  auto prompt = assemble_prompt(build_function_prompt(model_text, instructions));
  auto result = gateway.send(prompt);
  return catalog_from_reply(result.raw_text);
}

double catalog_accuracy(const FunctionCatalog& extracted, const FunctionCatalog& reference) {
  std::size_t total = 0, matched = 0;
  for (const auto& ref : reference.entries()) {
    if (ref.alias == kOtherFunction) continue;
    ++total;
    const CatalogEntry* got = extracted.find(ref.alias);
    if (got && lower(collapse_ws(got->leaf())) == lower(collapse_ws(ref.leaf()))) ++matched;
  }
  if (total == 0) throw Error(ErrorCode::EmptyGold, "reference catalog has no functions");
  return text::round2(100.0 * static_cast<double>(matched) / static_cast<double>(total));
}

}  // namespace safer
