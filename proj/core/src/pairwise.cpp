#include "safer/pairwise.hpp"

#include "safer/csv.hpp"
#include "safer/error.hpp"
#include "safer/gateway.hpp"
#include "safer/prompt.hpp"
#include "safer/text.hpp"

#include <algorithm>
#include <cctype>
#include <functional>

namespace safer {

using json = nlohmann::ordered_json;

std::string_view to_string(PairKind k) noexcept {
  switch (k) {
    case PairKind::Duplicate: return "Duplicate";
    case PairKind::Complementary: return "Complementary";
    case PairKind::Refinement: return "Refinement";
    case PairKind::Contradiction: return "Contradiction";
  }
  return "Duplicate";
}

std::optional<PairKind> parse_pair_kind(std::string_view s) {
  const std::string up = text::to_upper(text::trim(s));
  if (up == "DUPLICATE" || up == "DUPLICATES") return PairKind::Duplicate;
  if (up == "COMPLEMENTARY") return PairKind::Complementary;
  if (up == "REFINEMENT") return PairKind::Refinement;
  if (up == "CONTRADICTION" || up == "CONTRADICTING" || up == "CONTRADICTORY" || up == "CONFLICT") {
    return PairKind::Contradiction;
  }
  return std::nullopt;
}

std::string_view to_string(PromptVersion v) noexcept {
  switch (v) {
    case PromptVersion::V1: return "V1";
    case PromptVersion::V2: return "V2";
    case PromptVersion::V3: return "V3";
  }
  return "V3";
}

std::optional<PromptVersion> parse_prompt_version(std::string_view s) {
  const std::string up = text::to_upper(text::trim(s));
  if (up == "V1") return PromptVersion::V1;
  if (up == "V2") return PromptVersion::V2;
  if (up == "V3") return PromptVersion::V3;
  return std::nullopt;
}

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string_view strip_zeros(std::string_view s) {
  while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);
  return s;
}

}  // namespace

bool req_id_less(std::string_view a, std::string_view b) noexcept {
  const bool da = all_digits(a), db = all_digits(b);
  if (da != db) return da;
  if (da) {
    auto na = strip_zeros(a), nb = strip_zeros(b);
    if (na.size() != nb.size()) return na.size() < nb.size();
    if (na != nb) return na < nb;
  }
  return a < b;
}

ReqPair canonical_pair(std::string a, std::string b) {
  if (req_id_less(b, a)) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------- clusters

std::vector<Cluster> cluster_by_function(const std::vector<ClassifiedRequirement>& classified,
                                         const FunctionCatalog* catalog) {
  std::vector<std::string> order;
  if (catalog) order = catalog->aliases();
  for (const auto& r : classified) {
    if (std::find(order.begin(), order.end(), r.function) == order.end()) order.push_back(r.function);
  }
  std::vector<Cluster> out;
  for (const auto& alias : order) {
    Cluster c{alias, {}};
    for (const auto& r : classified) {
      if (r.function == alias) c.items.push_back(r);
    }
    if (!c.items.empty()) out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------- prompts

std::string pair_instructions(PairTask task, PromptVersion version) {
  std::string out;
  if (task == PairTask::Contradictions) {
    out = "For all the requirements in the list, mark the contradicting requirements.\n";
  } else {
    out = "For all the requirements in the list, mark the duplicate requirements.\n";
    if (version == PromptVersion::V2) {
      out += "If two requirements are similar but refer to two different functions it is not considered duplicate.\n";
    } else if (version == PromptVersion::V3) {
      out +=
          "If two requirements are similar but refer to two different functions it means that they are "
          "complementary.\n"
          "If two requirements are similar and refer to the same function it means that they are duplicate.\n"
          "If one of the requirements refers to the function \"_OF_\" (\"Other Function\") it could mean that the "
          "requirement refers to a system-level functionality or to each one of the functions. In this case the "
          "specific function's requirement might be a refinement of the top level requirement.\n";
    }
  }
  out +=
      "Each requirement is given with its ReqID and Function alias.\n"
      "Return your results in a JSON structure with the root node \"results\" holding a list of records with the "
      "fields ReqID_A, ReqID_B, Relation, Rationale.";
  if (task == PairTask::Contradictions) {
    out += " Relation is \"Contradiction\".";
  } else if (version == PromptVersion::V3) {
    out += " Relation is one of \"Duplicate\", \"Complementary\", \"Refinement\".";
  } else {
    out += " Relation is \"Duplicate\".";
  }
  return out;
}

std::vector<PairPrompt> build_pair_prompts(const std::vector<Cluster>& clusters, PairTask task,
                                           PromptVersion version, const std::string& dataset_name) {
  const Cluster* other = nullptr;
  for (const auto& c : clusters) {
    if (c.alias == kOtherFunction) other = &c;
  }
  const bool co_submit = task == PairTask::Duplicates && version == PromptVersion::V3 && other != nullptr;
  const std::string instructions = pair_instructions(task, version);

  std::vector<PairPrompt> out;
  for (const auto& c : clusters) {
    PairPrompt p;
    p.source_cluster = c.alias;
    p.members = c.items;
    if (co_submit && &c != other) p.members.insert(p.members.end(), other->items.begin(), other->items.end());
    if (p.members.size() < 2) continue;
    std::vector<PromptRow> rows;
    for (const auto& m : p.members) {
      rows.push_back(PromptRow{m.req_id, "Function: " + m.function + "\nRequirement: " + m.system_requirement});
    }
    p.prompt = assemble_prompt(PromptEnvelope(instructions, {}, dataset_name, std::move(rows)));
    p.index = out.size();
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------- validation

const FieldSchema& pair_schema() {
  static const FieldSchema schema = {
      {"ReqID_A", FieldType::Id, true, 0, -1, {"ReqA", "req_a", "ReqID1", "A"}},
      {"ReqID_B", FieldType::Id, true, 0, -1, {"ReqB", "req_b", "ReqID2", "B"}},
      {"Relation", FieldType::String, false, 0, -1, {"Kind", "Type"}},
      {"Rationale", FieldType::String, false, 0, -1, {"Reason", "Explanation"}},
  };
  return schema;
}

void check_kind_exclusivity(const std::vector<PairFinding>& findings) {
  std::map<ReqPair, std::set<PairKind>> kinds;
  for (const auto& f : findings) kinds[f.pair()].insert(f.kind);
  std::vector<std::string> conflicts;
  for (const auto& [pair, ks] : kinds) {
    if (ks.size() > 1 && ks.count(PairKind::Contradiction)) {
      std::vector<std::string> names;
      for (auto k : ks) names.emplace_back(to_string(k));
      conflicts.push_back(pair.first + "/" + pair.second + " labelled " + text::join(names, " and "));
    }
  }
  if (!conflicts.empty()) throw Error(ErrorCode::KindConflict, "pairs carry mutually exclusive kinds", conflicts);
}

namespace {

// Keeps the first finding per pair; later ones with a different kind leave a note.
std::vector<PairFinding> dedupe(std::vector<PairFinding> findings) {
  check_kind_exclusivity(findings);
  std::vector<PairFinding> out;
  std::map<ReqPair, std::size_t> seen;
  for (auto& f : findings) {
    auto [it, inserted] = seen.emplace(f.pair(), out.size());
    if (inserted) {
      out.push_back(std::move(f));
      continue;
    }
    auto& kept = out[it->second];
    if (kept.kind != f.kind) {
      std::string note = "also reported as " + std::string(to_string(f.kind)) + " in " + f.source_chunk;
      kept.validator_note += kept.validator_note.empty() ? note : "; " + note;
    }
  }
  return out;
}

}  // namespace

PairAnalysis validate_pair_reply(const PairPrompt& prompt, std::string_view reply, PairTask task,
                                 PromptVersion version) {
  ParsedResults parsed = parse_results_json(reply, pair_schema());
  PairAnalysis out;
  for (auto& rej : parsed.rejected) {
    out.quarantine.push_back(QuarantinedRecord{prompt.index, std::move(rej.record), std::move(rej.reasons)});
  }

  std::map<std::string, const ClassifiedRequirement*> members;
  for (const auto& m : prompt.members) members.emplace(m.req_id, &m);

  std::vector<PairFinding> findings;
  for (auto& rec : parsed.records) {
    std::string a = rec["ReqID_A"].get<std::string>();
    std::string b = rec["ReqID_B"].get<std::string>();
    std::vector<std::string> reasons;
    if (a == b) reasons.push_back("pair names ReqID '" + a + "' twice");
    for (const auto& id : {a, b}) {
      if (!members.count(id)) reasons.push_back("ReqID '" + id + "' was not submitted in this prompt");
    }
    if (!reasons.empty()) {
      out.quarantine.push_back(QuarantinedRecord{prompt.index, rec, std::move(reasons)});
      continue;
    }

    PairFinding f;
    const PairKind fallback = task == PairTask::Contradictions ? PairKind::Contradiction : PairKind::Duplicate;
    f.kind = rec.contains("Relation") ? parse_pair_kind(rec["Relation"].get<std::string>()).value_or(fallback)
                                      : fallback;
    auto [ca, cb] = canonical_pair(a, b);
    f.req_a = ca;
    f.req_b = cb;
    f.function_a = members.at(ca)->function;
    f.function_b = members.at(cb)->function;
    f.rationale = rec.contains("Rationale") ? rec["Rationale"].get<std::string>() : std::string{};
    f.source_chunk = prompt.source_cluster;

    if (f.kind == PairKind::Duplicate && version != PromptVersion::V1 && f.function_a != f.function_b &&
        f.function_a != kOtherFunction && f.function_b != kOtherFunction) {
      f.kind = PairKind::Complementary;
      f.validator_note = "duplicate across functions " + f.function_a + " and " + f.function_b +
                         " downgraded to Complementary";
    }
    findings.push_back(std::move(f));
  }
  out.findings = dedupe(std::move(findings));
  return out;
}

PairAnalysis merge_analyses(std::vector<PairAnalysis> parts) {
  PairAnalysis out;
  std::vector<PairFinding> all;
  for (auto& p : parts) {
    for (auto& f : p.findings) all.push_back(std::move(f));
    for (auto& q : p.quarantine) out.quarantine.push_back(std::move(q));
  }
  out.findings = dedupe(std::move(all));
  return out;
}

namespace {

PairAnalysis run_prompts(const std::vector<PairPrompt>& prompts, LlmGateway& gateway, PairTask task,
                         PromptVersion version) {
  std::vector<std::string> texts;
  for (const auto& p : prompts) texts.push_back(p.prompt);
  auto replies = gateway.send_batch(texts);
  std::vector<PairAnalysis> parts;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (replies[i].error) std::rethrow_exception(replies[i].error);
    parts.push_back(validate_pair_reply(prompts[i], replies[i].result->raw_text, task, version));
  }
  return merge_analyses(std::move(parts));
}

}  // namespace

PairAnalysis detect_duplicates(const std::vector<Cluster>& clusters, LlmGateway& gateway, PromptVersion version,
                               const std::string& dataset_name) {
  auto prompts = build_pair_prompts(clusters, PairTask::Duplicates, version, dataset_name);
  return run_prompts(prompts, gateway, PairTask::Duplicates, version);
}

PairAnalysis detect_contradictions(const std::vector<Cluster>& clusters, LlmGateway& gateway,
                                   const std::string& dataset_name) {
  auto prompts = build_pair_prompts(clusters, PairTask::Contradictions, PromptVersion::V3, dataset_name);
  return run_prompts(prompts, gateway, PairTask::Contradictions, PromptVersion::V3);
}

Consolidation consolidate(const std::vector<ClassifiedRequirement>& classified,
                          const std::vector<PairFinding>& duplicates) {
  std::map<std::string, std::string> parent;
  for (const auto& r : classified) parent[r.req_id] = r.req_id;
  std::function<std::string(const std::string&)> root = [&](const std::string& x) -> std::string {
    auto& p = parent.at(x);
    if (p != x) p = root(p);
    return p;
  };
  for (const auto& f : duplicates) {
    if (f.kind != PairKind::Duplicate || !parent.count(f.req_a) || !parent.count(f.req_b)) continue;
    auto ra = root(f.req_a), rb = root(f.req_b);
    if (ra == rb) continue;
    if (req_id_less(rb, ra)) std::swap(ra, rb);
    parent[rb] = ra;
  }
  Consolidation out;
  for (const auto& r : classified) {
    auto rep = root(r.req_id);
    if (rep == r.req_id) {
      out.survivors.push_back(r);
    } else {
      out.representative[r.req_id] = rep;
    }
  }
  return out;
}

// ---------------------------------------------------------------- serialization

json PairAnalysis::to_json(PairTask task) const {
  json out{{"kind", task == PairTask::Duplicates ? "duplicates" : "contradictions"}, {"findings", json::array()}};
  for (const auto& f : findings) {
    out["findings"].push_back(json{{"kind", to_string(f.kind)},
                                   {"req_a", f.req_a},
                                   {"req_b", f.req_b},
                                   {"function_a", f.function_a},
                                   {"function_b", f.function_b},
                                   {"rationale", f.rationale},
                                   {"source_chunk", f.source_chunk},
                                   {"validator_note", f.validator_note}});
  }
  out["quarantine"] = json::array();
  for (const auto& q : quarantine) {
    out["quarantine"].push_back(json{{"chunk", q.chunk_index}, {"record", q.record}, {"reasons", q.reasons}});
  }
  return out;
}

PairAnalysis PairAnalysis::from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("findings")) {
    throw Error(ErrorCode::SchemaViolation, "not a pair analysis document");
  }
  PairAnalysis out;
  try {
    for (const auto& j : doc.at("findings")) {
      PairFinding f;
      f.kind = parse_pair_kind(j.at("kind").get<std::string>()).value_or(PairKind::Duplicate);
      f.req_a = j.at("req_a").get<std::string>();
      f.req_b = j.at("req_b").get<std::string>();
      f.function_a = j.value("function_a", "");
      f.function_b = j.value("function_b", "");
      f.rationale = j.value("rationale", "");
      f.source_chunk = j.value("source_chunk", "");
      f.validator_note = j.value("validator_note", "");
      out.findings.push_back(std::move(f));
    }
    if (doc.contains("quarantine")) {
      for (const auto& q : doc["quarantine"]) {
        out.quarantine.push_back(QuarantinedRecord{q.value("chunk", std::size_t{0}), q.value("record", json{}),
                                                   q.value("reasons", std::vector<std::string>{})});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "malformed pair analysis", {e.what()});
  }
  return out;
}

std::string PairAnalysis::to_csv() const {
  std::string out = csv::format_row({"kind", "req_a", "req_b", "functions", "rationale", "validator_notes"});
  for (const auto& f : findings) {
    out += csv::format_row({std::string(to_string(f.kind)), f.req_a, f.req_b, f.function_a + "/" + f.function_b,
                            f.rationale, f.validator_note});
  }
  return out;
}

// ---------------------------------------------------------------- gold + score

GoldPairs GoldPairs::parse(std::string_view csv_text, PairKind kind) {
  auto rows = csv::parse(csv_text);
  GoldPairs g;
  g.kind = kind;
  std::vector<std::string> problems;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& cells = rows[i].cells;
    std::string a = cells.size() > 0 ? std::string(text::trim(cells[0])) : std::string{};
    std::string b = cells.size() > 1 ? std::string(text::trim(cells[1])) : std::string{};
    if (a.empty() || b.empty()) {
      problems.push_back("line " + std::to_string(rows[i].line) + ": needs two req_ids");
    } else if (a == b) {
      problems.push_back("line " + std::to_string(rows[i].line) + ": pair names '" + a + "' twice");
    } else {
      g.pairs.insert(canonical_pair(a, b));
    }
  }
  if (!problems.empty()) throw Error(ErrorCode::SchemaViolation, "malformed gold pairs", problems);
  return g;
}

GoldPairs GoldPairs::load(const std::filesystem::path& path, PairKind kind) {
  return parse(text::read_file(path), kind);
}

std::vector<std::string> GoldPairs::unknown_ids(const std::set<std::string>& ids) const {
  std::set<std::string> out;
  for (const auto& [a, b] : pairs) {
    if (!ids.count(a)) out.insert(a);
    if (!ids.count(b)) out.insert(b);
  }
  return {out.begin(), out.end()};
}

PairScore score(const std::vector<PairFinding>& findings, const GoldPairs& gold, double threshold) {
  if (gold.pairs.empty()) throw Error(ErrorCode::EmptyGold, "gold pair set is empty");
  std::set<ReqPair> found;
  for (const auto& f : findings) {
    if (f.kind == gold.kind) found.insert(canonical_pair(f.req_a, f.req_b));
  }
  PairScore s;
  s.gold_total = gold.pairs.size();
  for (const auto& p : found) {
    if (gold.pairs.count(p)) {
      ++s.detected_true;
    } else {
      ++s.false_positive;
    }
  }
  s.rate = text::round2(100.0 * static_cast<double>(s.detected_true) / static_cast<double>(s.gold_total));
  s.threshold = threshold;
  s.pass = s.rate > threshold;
  return s;
}

}  // namespace safer
