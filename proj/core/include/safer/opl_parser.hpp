#pragma once

#include "safer/architecture.hpp"

#include <string_view>

namespace safer {

/// Parses line-oriented OPL text into a linked architecture graph.
///
/// Accepted sentence forms (one per line; `**bold**` markers and leading
/// "12." numbering are ignored):
///
///   X [of Y] is a(n) <informatical|physical> and <systemic|environmental> <object|process>.
///   X [of Y] can be s1, s2 or s3.
///   X exhibits A, B, as well as C.          X consists of A and B.
///   X is a Y.   A and B are Ys.             A, B, and C are instances of D.
///   X requires A.  X yields A.  X handles P. P changes X of Y from s1 to s2.
///   X from SD specialization-unfolds in SD1 into A and B.
///   X from SD part-unfolds in SD2 into A, B, and C.
///
/// A declaration may carry a parenthesised alias after the name, e.g.
/// "Navigating (NAV) is a physical and systemic process.".
///
/// List items are matched against declared names first, so a declared name
/// that itself contains "and" stays whole. Unrecognized sentences become
/// graph warnings. Throws EmptyModel, UnresolvedName, or CyclicContainment.
[[nodiscard]] ArchitectureGraph parse_opl(std::string_view text);

}  // namespace safer
