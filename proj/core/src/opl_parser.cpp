#include "safer/opl_parser.hpp"

#include "safer/error.hpp"
#include "safer/text.hpp"

#include <map>
#include <optional>
#include <regex>

namespace safer {
namespace {

struct Sentence {
  std::size_t line;
  std::string text;
};

std::string normalize(std::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '*' && i + 1 < raw.size() && raw[i + 1] == '*') {
      ++i;
      continue;
    }
    s += raw[i];
  }
  static const std::regex numbering(R"(^\s*(?:\d+[.)]|[-*])\s+)");
  s = std::regex_replace(s, numbering, "", std::regex_constants::format_first_only);
  std::string out{text::trim(s)};
  while (!out.empty() && (out.back() == '.' || out.back() == ' ')) out.pop_back();
  // Collapse runs of whitespace.
  static const std::regex spaces(R"(\s+)");
  return std::regex_replace(out, spaces, " ");
}

// Splits "Name of Owner" at the first lower-case " of ".
std::pair<std::string, std::optional<std::string>> split_qualifier(const std::string& subject) {
  auto pos = subject.find(" of ");
  if (pos == std::string::npos) return {subject, std::nullopt};
  return {subject.substr(0, pos), subject.substr(pos + 4)};
}

std::pair<std::string, std::optional<std::string>> split_alias(const std::string& name) {
  static const std::regex alias_re(R"(^(.*?)\s*\(([A-Za-z0-9_]+)\)$)");
  std::smatch m;
  if (std::regex_match(name, m, alias_re)) return {m[1].str(), m[2].str()};
  return {name, std::nullopt};
}

bool is_placeholder(const std::string& item) {
  static const std::regex re(R"(^(?:one|two|three|\d+) more (?:operations?|attributes?)$)");
  return std::regex_match(item, re);
}

class Parser {
 public:
  ArchitectureGraph run(std::string_view input) {
    std::vector<Sentence> sentences;
    auto lines = text::split_lines(input);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      auto s = normalize(lines[i]);
      if (s.empty() || s.front() == '#') continue;
      sentences.push_back({i + 1, std::move(s)});
    }

    std::vector<const Sentence*> relational;
    std::vector<std::pair<const Sentence*, std::pair<std::string, std::vector<std::string>>>> states;
    for (const auto& s : sentences) {
      if (try_declaration(s)) continue;
      if (auto st = try_states(s)) {
        states.emplace_back(&s, std::move(*st));
        continue;
      }
      relational.push_back(&s);
    }
    if (graph_.size() == 0) throw Error(ErrorCode::EmptyModel, "no things declared in OPL text");

    for (auto& [s, st] : states) {
      auto name = resolve(st.first);
      if (!graph_.add_states(name, st.second)) {
        graph_.warn("line " + std::to_string(s->line) + ": states for undeclared thing '" + st.first + "'");
      }
    }
    for (const auto* s : relational) {
      if (!try_relation(*s)) {
        graph_.warn("line " + std::to_string(s->line) + ": unrecognized sentence: " + s->text);
      }
    }
    graph_.link();
    return std::move(graph_);
  }

 private:
  bool try_declaration(const Sentence& s) {
    static const std::regex re(
        R"(^(.+?) (?:is|are) an? (informatical|physical) and (systemic|environmental) (object|process)$)");
    std::smatch m;
    if (!std::regex_match(s.text, m, re)) return false;
    auto [head, qualifier] = split_qualifier(m[1].str());
    auto [name, alias] = split_alias(head);
    OplThing t;
    t.name = std::move(name);
    t.alias = std::move(alias);
    t.qualifier = std::move(qualifier);
    t.essence = m[2] == "informatical" ? Essence::Informatical : Essence::Physical;
    t.affiliation = m[3] == "systemic" ? Affiliation::Systemic : Affiliation::Environmental;
    t.kind = m[4] == "object" ? ThingKind::Object : ThingKind::Process;
    std::string nm = t.name;
    if (!graph_.declare(std::move(t))) {
      graph_.warn("line " + std::to_string(s.line) + ": conflicting redeclaration of '" + nm +
                  "' ignored");
    }
    return true;
  }

  std::optional<std::pair<std::string, std::vector<std::string>>> try_states(const Sentence& s) {
    static const std::regex re(R"(^(.+?) can be (.+)$)");
    std::smatch m;
    if (!std::regex_match(s.text, m, re)) return std::nullopt;
    static const std::regex sep(R"(,? or |, )");
    std::vector<std::string> states;
    std::string list = m[2].str();
    for (std::sregex_token_iterator it(list.begin(), list.end(), sep, -1), end; it != end; ++it) {
      std::string v{text::trim(it->str())};
      if (!v.empty()) states.push_back(v);
    }
    return std::make_pair(m[1].str(), std::move(states));
  }

  // Resolves a phrase to a declared name when possible; otherwise returns the
  // phrase unchanged so linking reports it.
  std::optional<std::string> lookup(const std::string& phrase) const {
    auto attempt = [&](const std::string& n) -> std::optional<std::string> {
      if (graph_.find(n)) return n;
      if (n.size() > 3 && n.ends_with("es") && graph_.find(n.substr(0, n.size() - 2))) {
        return n.substr(0, n.size() - 2);
      }
      if (n.size() > 1 && n.back() == 's' && graph_.find(n.substr(0, n.size() - 1))) {
        return n.substr(0, n.size() - 1);
      }
      return std::nullopt;
    };
    if (auto r = attempt(phrase)) return r;
    auto [head, qualifier] = split_qualifier(phrase);
    if (qualifier) return attempt(head);
    return std::nullopt;
  }

  std::string resolve(const std::string& phrase) const {
    auto r = lookup(phrase);
    return r ? *r : split_qualifier(phrase).first;
  }

  // Splits "A, B and C, as well as D" into names, greedily preferring the
  // longest run of pieces that forms a declared name.
  std::vector<std::string> resolve_list(const std::string& list) const {
    static const std::regex sep(R"(, as well as |, and |, or | and | or |, )");
    std::vector<std::string> pieces;
    std::vector<std::string> seps;
    auto begin = std::sregex_iterator(list.begin(), list.end(), sep);
    std::size_t last = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      pieces.push_back(list.substr(last, static_cast<std::size_t>(it->position()) - last));
      seps.push_back(it->str());
      last = static_cast<std::size_t>(it->position() + it->length());
    }
    pieces.push_back(list.substr(last));

    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < pieces.size()) {
      std::size_t taken = 1;
      std::optional<std::string> hit;
      for (std::size_t j = pieces.size(); j-- > i;) {
        std::string candidate = pieces[i];
        for (std::size_t k = i; k < j; ++k) candidate += seps[k] + pieces[k + 1];
        if (auto r = lookup(candidate)) {
          hit = r;
          taken = j - i + 1;
          break;
        }
      }
      std::string item{text::trim(pieces[i])};
      if (hit) {
        out.push_back(*hit);
      } else if (!is_placeholder(item) && !item.empty()) {
        out.push_back(split_qualifier(item).first);
      }
      i += taken;
    }
    return out;
  }

  void add(RelationKind kind, const std::string& source, std::vector<std::string> targets,
           const Sentence& s) {
    OplRelation r;
    r.kind = kind;
    r.source = source;
    r.targets = std::move(targets);
    r.line = s.line;
    if (r.targets.empty()) {
      graph_.warn("line " + std::to_string(s.line) + ": relation without named targets: " + s.text);
      return;
    }
    graph_.add_relation(std::move(r));
  }

  bool try_relation(const Sentence& s) {
    std::smatch m;
    const std::string& t = s.text;

    static const std::regex unfold(R"(^(.+?) from \S+ (specialization|part)-unfolds in \S+ into (.+)$)");
    if (std::regex_match(t, m, unfold)) {
      auto kind = m[2] == "part" ? RelationKind::Aggregation : RelationKind::Specialization;
      add(kind, resolve(m[1].str()), resolve_list(m[3].str()), s);
      return true;
    }
    static const std::regex change(R"(^(.+?) changes (.+?) from (.+?) to (.+)$)");
    if (std::regex_match(t, m, change)) {
      OplRelation r;
      r.kind = RelationKind::StateChange;
      r.source = resolve(m[1].str());
      r.targets = {resolve(m[2].str())};
      r.state_from = m[3].str();
      r.state_to = m[4].str();
      r.line = s.line;
      if (const auto* obj = graph_.find(r.targets.front()); obj && !obj->states.empty()) {
        for (const auto& st : {*r.state_from, *r.state_to}) {
          if (std::find(obj->states.begin(), obj->states.end(), st) == obj->states.end()) {
            graph_.warn("line " + std::to_string(s.line) + ": state '" + st + "' not declared for '" +
                        obj->name + "'");
          }
        }
      }
      graph_.add_relation(std::move(r));
      return true;
    }
    static const std::regex instances(R"(^(.+?) (?:is an instance|are instances) of (.+)$)");
    if (std::regex_match(t, m, instances)) {
      add(RelationKind::Instantiation, resolve(m[2].str()), resolve_list(m[1].str()), s);
      return true;
    }
    struct Verb {
      std::regex re;
      RelationKind kind;
    };
    static const std::vector<Verb> verbs = {
        {std::regex(R"(^(.+?) exhibits? (.+)$)"), RelationKind::Exhibition},
        {std::regex(R"(^(.+?) consists? of (.+)$)"), RelationKind::Aggregation},
        {std::regex(R"(^(.+?) requires? (.+)$)"), RelationKind::Requires},
        {std::regex(R"(^(.+?) yields? (.+)$)"), RelationKind::Yields},
        {std::regex(R"(^(.+?) handles? (.+)$)"), RelationKind::Handles},
    };
    for (const auto& v : verbs) {
      if (std::regex_match(t, m, v.re)) {
        add(v.kind, resolve(m[1].str()), resolve_list(m[2].str()), s);
        return true;
      }
    }
    static const std::regex is_a(R"(^(.+?) (?:is an?|are) (.+)$)");
    // An unknown general thing usually means a malformed declaration.
    if (std::regex_match(t, m, is_a) && lookup(m[2].str())) {
      add(RelationKind::Specialization, resolve(m[2].str()), resolve_list(m[1].str()), s);
      return true;
    }
    return false;
  }

  ArchitectureGraph graph_{SourceFormat::Opl};
};

}  // namespace

ArchitectureGraph parse_opl(std::string_view text) {
  return Parser{}.run(text);
}

}  // namespace safer
