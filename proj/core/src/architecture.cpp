#include "safer/architecture.hpp"

#include "safer/error.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace safer {

std::string_view to_string(ThingKind k) noexcept {
  return k == ThingKind::Object ? "object" : "process";
}

std::string_view to_string(RelationKind k) noexcept {
  switch (k) {
    case RelationKind::Exhibition: return "exhibition";
    case RelationKind::Aggregation: return "aggregation";
    case RelationKind::Specialization: return "specialization";
    case RelationKind::Instantiation: return "instantiation";
    case RelationKind::Requires: return "requires";
    case RelationKind::Yields: return "yields";
    case RelationKind::Handles: return "handles";
    case RelationKind::StateChange: return "state-change";
  }
  return "unknown";
}

bool ArchitectureGraph::declare(OplThing thing) {
  auto it = things_.find(thing.name);
  if (it == things_.end()) {
    order_.push_back(thing.name);
    things_.emplace(thing.name, std::move(thing));
    return true;
  }
  auto& existing = it->second;
  bool consistent = existing.kind == thing.kind && existing.essence == thing.essence &&
                    existing.affiliation == thing.affiliation;
  if (!existing.qualifier && thing.qualifier) existing.qualifier = thing.qualifier;
  if (!existing.alias && thing.alias) existing.alias = thing.alias;
  for (auto& s : thing.states) {
    if (std::find(existing.states.begin(), existing.states.end(), s) == existing.states.end()) {
      existing.states.push_back(std::move(s));
    }
  }
  return consistent;
}

void ArchitectureGraph::add_relation(OplRelation relation) {
  relations_.push_back(std::move(relation));
}

bool ArchitectureGraph::add_states(std::string_view name, const std::vector<std::string>& states) {
  auto it = things_.find(name);
  if (it == things_.end()) return false;
  auto& existing = it->second.states;
  for (const auto& s : states) {
    if (std::find(existing.begin(), existing.end(), s) == existing.end()) existing.push_back(s);
  }
  return true;
}

const OplThing* ArchitectureGraph::find(std::string_view name) const {
  auto it = things_.find(name);
  return it == things_.end() ? nullptr : &it->second;
}

std::vector<const OplThing*> ArchitectureGraph::things() const {
  std::vector<const OplThing*> out;
  out.reserve(order_.size());
  for (const auto& n : order_) out.push_back(&things_.at(n));
  return out;
}

std::size_t ArchitectureGraph::count(ThingKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      things_.begin(), things_.end(), [kind](const auto& kv) { return kv.second.kind == kind; }));
}

void ArchitectureGraph::link() const {
  std::vector<std::string> unresolved;
  auto check = [&](const std::string& name, const OplRelation& r) {
    if (!find(name)) {
      std::string where = r.line ? " (line " + std::to_string(r.line) + ")" : std::string{};
      unresolved.push_back("'" + name + "' in " + std::string(to_string(r.kind)) + where);
    }
  };
  for (const auto& r : relations_) {
    check(r.source, r);
    for (const auto& t : r.targets) check(t, r);
    if (r.kind == RelationKind::StateChange && (!r.state_from || !r.state_to)) {
      unresolved.push_back("state change on '" + r.source + "' lacks from/to states");
    }
  }
  if (!unresolved.empty()) {
    throw Error(ErrorCode::UnresolvedName, "relation endpoints name undeclared things", unresolved);
  }

  // Containment (aggregation + exhibition) must be a DAG.
  std::map<std::string_view, std::vector<std::string_view>> children;
  for (const auto& r : relations_) {
    if (r.kind != RelationKind::Aggregation && r.kind != RelationKind::Exhibition) continue;
    for (const auto& t : r.targets) children[r.source].push_back(t);
  }
  enum class Mark { White, Grey, Black };
  std::map<std::string_view, Mark> mark;
  std::vector<std::string> cycle;
  std::function<bool(std::string_view)> visit = [&](std::string_view n) {
    mark[n] = Mark::Grey;
    for (auto c : children[n]) {
      auto m = mark[c];
      if (m == Mark::Grey) {
        cycle.emplace_back(std::string(n) + " -> " + std::string(c));
        return true;
      }
      if (m == Mark::White && visit(c)) {
        cycle.emplace_back(std::string(n) + " -> " + std::string(c));
        return true;
      }
    }
    mark[n] = Mark::Black;
    return false;
  };
  for (const auto& n : order_) {
    if (mark[n] == Mark::White && visit(n)) {
      std::reverse(cycle.begin(), cycle.end());
      throw Error(ErrorCode::CyclicContainment, "aggregation/exhibition edges form a cycle", cycle);
    }
  }
}

}  // namespace safer
