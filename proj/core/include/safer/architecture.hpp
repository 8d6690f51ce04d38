#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace safer {

enum class ThingKind { Object, Process };
enum class Essence { Informatical, Physical };
enum class Affiliation { Systemic, Environmental };

enum class RelationKind {
  Exhibition,      ///< owner exhibits feature (attribute or operation)
  Aggregation,     ///< whole consists of parts
  Specialization,  ///< general specializes into specifics
  Instantiation,   ///< class has instances
  Requires,        ///< process consumes/uses objects
  Yields,          ///< process produces objects
  Handles,         ///< agent handles process
  StateChange,     ///< process changes an object's state
};

enum class SourceFormat { Opl, Xmi };

[[nodiscard]] std::string_view to_string(ThingKind k) noexcept;
[[nodiscard]] std::string_view to_string(RelationKind k) noexcept;

struct OplThing {
  std::string name;
  ThingKind kind = ThingKind::Object;
  Essence essence = Essence::Informatical;
  Affiliation affiliation = Affiliation::Systemic;
  std::optional<std::string> qualifier;  ///< owner phrase from "X of Y"
  std::optional<std::string> alias;      ///< model-supplied short name, e.g. "NAV"
  std::vector<std::string> states;

  bool operator==(const OplThing&) const = default;
};

struct OplRelation {
  RelationKind kind = RelationKind::Exhibition;
  std::string source;
  std::vector<std::string> targets;
  std::optional<std::string> state_from;  ///< StateChange only
  std::optional<std::string> state_to;    ///< StateChange only
  std::size_t line = 0;                   ///< source line (0 when not text-derived)

  bool operator==(const OplRelation&) const = default;
};

/// Things keyed by name (declaration order kept separately) plus relations.
/// Immutable once produced by a parser; share freely across threads.
class ArchitectureGraph {
 public:
  ArchitectureGraph() = default;
  explicit ArchitectureGraph(SourceFormat format) : format_(format) {}

  /// Adds or merges a declaration. Returns false when an existing thing has a
  /// conflicting kind/essence/affiliation (the first declaration is kept).
  bool declare(OplThing thing);
  void add_relation(OplRelation relation);
  /// Appends states to a declared thing; false when the thing is unknown.
  bool add_states(std::string_view name, const std::vector<std::string>& states);

  /// Verifies every relation endpoint names a declared thing and that
  /// Aggregation/Exhibition edges form no cycle. Throws UnresolvedName or
  /// CyclicContainment.
  void link() const;

  [[nodiscard]] const OplThing* find(std::string_view name) const;
  [[nodiscard]] const std::vector<std::string>& declaration_order() const noexcept { return order_; }
  [[nodiscard]] std::vector<const OplThing*> things() const;
  [[nodiscard]] const std::vector<OplRelation>& relations() const noexcept { return relations_; }
  [[nodiscard]] SourceFormat source_format() const noexcept { return format_; }
  [[nodiscard]] std::size_t size() const noexcept { return things_.size(); }
  [[nodiscard]] std::size_t count(ThingKind kind) const;

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  void warn(std::string message) { warnings_.push_back(std::move(message)); }

  bool operator==(const ArchitectureGraph& other) const {
    return format_ == other.format_ && things_ == other.things_ && order_ == other.order_ &&
           relations_ == other.relations_;
  }

 private:
  SourceFormat format_ = SourceFormat::Opl;
  std::map<std::string, OplThing, std::less<>> things_;
  std::vector<std::string> order_;
  std::vector<OplRelation> relations_;
  std::vector<std::string> warnings_;
};

}  // namespace safer
