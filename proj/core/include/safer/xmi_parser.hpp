#pragma once

#include "safer/architecture.hpp"

#include <string_view>

namespace safer {

/// Reads the block-definition subset of a SysML/UML XMI document.
///
///   uml:Class (or sysml:Block-stereotyped class)  -> Object
///   ownedAttribute aggregation="composite"        -> Aggregation(owner -> part type)
///   ownedOperation / ownedBehavior                -> Process + Exhibition(owner -> process)
///
/// Models and packages are descended into. Any other element is reported as
/// an "UnsupportedElement" graph warning. Throws MalformedXml, EmptyModel, or
/// UnresolvedName (composite part typed by an unknown id).
[[nodiscard]] ArchitectureGraph parse_xmi_bdd(std::string_view text);

}  // namespace safer
