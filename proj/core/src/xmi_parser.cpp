#include "safer/xmi_parser.hpp"

#include "safer/error.hpp"
#include "safer/text.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <map>
#include <sstream>

namespace safer {

namespace pt = boost::property_tree;

namespace {

struct Composition {
  std::string owner_name;
  std::string type_id;
  std::string part_name;
};

class XmiReader {
 public:
  ArchitectureGraph run(const pt::ptree& root) {
    for (const auto& [tag, node] : root) visit_container(tag, node);
    for (const auto& c : compositions_) {
      auto it = classes_.find(c.type_id);
      if (it == classes_.end()) {
        unresolved_.push_back(c.owner_name + "." + (c.part_name.empty() ? "<part>" : c.part_name) +
                              " typed by unknown id '" + c.type_id + "'");
        continue;
      }
      graph_.add_relation(OplRelation{RelationKind::Aggregation, c.owner_name, {it->second}, {}, {}, 0});
    }
    if (!unresolved_.empty()) {
      throw Error(ErrorCode::UnresolvedName, "composite parts reference unknown types", unresolved_);
    }
    if (graph_.size() == 0) throw Error(ErrorCode::EmptyModel, "XMI document declares no blocks");
    graph_.link();
    return std::move(graph_);
  }

 private:
  static std::string attr(const pt::ptree& node, const char* name) {
    return node.get<std::string>(pt::ptree::path_type(std::string("<xmlattr>.") + name, '.'), "");
  }

  static std::string type_of(const std::string& tag, const pt::ptree& node) {
    std::string t = attr(node, "xmi:type");
    return t.empty() ? tag : t;
  }

  static bool ignorable(const std::string& tag) {
    return tag == "<xmlattr>" || tag == "<xmlcomment>" || tag == "<xmltext>";
  }

  void unsupported(const std::string& type, const pt::ptree& node) {
    std::string name = attr(node, "name");
    graph_.warn("UnsupportedElement: " + type + (name.empty() ? "" : " '" + name + "'"));
  }

  // document root, models, packages
  void visit_container(const std::string& tag, const pt::ptree& node) {
    if (ignorable(tag)) return;
    const std::string type = type_of(tag, node);
    if (type == "uml:Class" || (type == "sysml:Block" && !attr(node, "name").empty())) {
      visit_class(node);
    } else if (type == "xmi:XMI" || type == "uml:Model" || type == "uml:Package") {
      for (const auto& [t, child] : node) visit_container(t, child);
    } else if (tag.rfind("sysml:", 0) == 0 && !attr(node, "base_Class").empty()) {
      // stereotype application on a class already read
    } else if (tag == "xmi:Documentation" || tag == "xmi:Extension") {
      // tool metadata
    } else {
      unsupported(type, node);
    }
  }

  void visit_class(const pt::ptree& node) {
    std::string id = attr(node, "xmi:id");
    std::string name{text::trim(attr(node, "name"))};
    if (name.empty()) name = id;
    if (!id.empty()) classes_[id] = name;
    graph_.declare(OplThing{name, ThingKind::Object, Essence::Physical, Affiliation::Systemic, {}, {}, {}});

    std::vector<std::string> operations;
    for (const auto& [tag, child] : node) {
      if (ignorable(tag)) continue;
      const std::string type = type_of(tag, child);
      if (tag == "ownedAttribute") {
        if (attr(child, "aggregation") != "composite") {
          unsupported(type + " (non-composite)", child);
          continue;
        }
        std::string type_id = attr(child, "type");
        if (type_id.empty()) {
          if (auto t = child.get_child_optional("type")) type_id = attr(*t, "xmi:idref");
        }
        if (type_id.empty()) {
          unsupported(type + " (untyped part)", child);
          continue;
        }
        compositions_.push_back(Composition{name, type_id, attr(child, "name")});
      } else if (tag == "ownedOperation" || tag == "ownedBehavior") {
        std::string op{text::trim(attr(child, "name"))};
        if (op.empty()) {
          unsupported(type + " (unnamed)", child);
          continue;
        }
        graph_.declare(OplThing{op, ThingKind::Process, Essence::Physical, Affiliation::Systemic, {}, {}, {}});
        operations.push_back(op);
      } else if (tag == "nestedClassifier" && type == "uml:Class") {
        visit_class(child);
      } else {
        unsupported(type, child);
      }
    }
    if (!operations.empty()) {
      graph_.add_relation(OplRelation{RelationKind::Exhibition, name, std::move(operations), {}, {}, 0});
    }
  }

  ArchitectureGraph graph_{SourceFormat::Xmi};
  std::map<std::string, std::string> classes_;  // xmi:id -> name
  std::vector<Composition> compositions_;
  std::vector<std::string> unresolved_;
};

}  // namespace

ArchitectureGraph parse_xmi_bdd(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_xml(in, tree, pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::MalformedXml, "XMI is not well-formed XML",
                {e.message() + " at line " + std::to_string(e.line())});
  }
  if (tree.empty()) throw Error(ErrorCode::MalformedXml, "XMI document has no root element");
  return XmiReader{}.run(tree);
}

}  // namespace safer
