#include "safer/coverage.hpp"

#include "safer/csv.hpp"
#include "safer/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace safer {

using json = nlohmann::ordered_json;

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Complete ? "Complete" : "Missing"; }

long shortfall(long n_func, long n_prob) noexcept {
  return std::max(0L, kMinFunctional - n_func) + std::max(0L, kMinProbabilistic - n_prob);
}

const CoverageRow* CoverageMatrix::find(std::string_view alias) const {
  for (const auto& r : rows) {
    if (r.function == alias) return &r;
  }
  return nullptr;
}

std::vector<CoverageRow> CoverageMatrix::gap_ranking() const {
  std::vector<CoverageRow> out;
  for (const auto& r : rows) {
    if (r.verdict == Verdict::Missing && !r.catch_all()) out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(), [](const CoverageRow& a, const CoverageRow& b) {
    return shortfall(a.n_func, a.n_prob) > shortfall(b.n_func, b.n_prob);
  });
  return out;
}

std::string CoverageMatrix::to_csv() const {
  std::string out = csv::format_row({"Function", "N Reqs FUNC", "PROB", "Result", "Other", "Note"});
  for (const auto& r : rows) {
    std::string note;
    if (r.catch_all()) {
      note = "triage bucket";
    } else if (r.minimal_prob()) {
      note = "minimal PROB";
    }
    out += csv::format_row({r.function, std::to_string(r.n_func), std::to_string(r.n_prob),
                            std::string(to_string(r.verdict)), std::to_string(r.n_other), note});
  }
  out += csv::format_row({"TOTAL", std::to_string(totals.n_func), std::to_string(totals.n_prob), "",
                          std::to_string(totals.n_other), ""});
  return out;
}

json CoverageMatrix::to_json() const {
  auto row_json = [](const CoverageRow& r) {
    return json{{"Function", r.function}, {"FUNC", r.n_func}, {"PROB", r.n_prob},
                {"Other", r.n_other},     {"Result", to_string(r.verdict)}};
  };
  json out{{"kind", "coverage"}, {"rows", json::array()}};
  for (const auto& r : rows) out["rows"].push_back(row_json(r));
  out["totals"] = row_json(totals);
  return out;
}

CoverageMatrix CoverageMatrix::from_json(const json& doc) {
  if (!doc.is_object() || doc.value("kind", "") != "coverage") {
    throw Error(ErrorCode::SchemaViolation, "not a coverage matrix document");
  }
  auto row_from = [](const json& j) {
    CoverageRow r;
    r.function = j.at("Function").get<std::string>();
    r.n_func = j.at("FUNC").get<long>();
    r.n_prob = j.at("PROB").get<long>();
    r.n_other = j.at("Other").get<long>();
    r.verdict = j.at("Result").get<std::string>() == "Complete" ? Verdict::Complete : Verdict::Missing;
    return r;
  };
  CoverageMatrix m;
  try {
    for (const auto& j : doc.at("rows")) m.rows.push_back(row_from(j));
    m.totals = row_from(doc.at("totals"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "malformed coverage matrix", {e.what()});
  }
  return m;
}

CoverageMatrix build_matrix(const std::vector<ClassifiedRequirement>& classified, const FunctionCatalog& catalog) {
  CoverageMatrix m;
  std::map<std::string, std::size_t, std::less<>> index;
  for (const auto& e : catalog.entries()) {
    index.emplace(e.alias, m.rows.size());
    m.rows.push_back(CoverageRow{e.alias, 0, 0, 0, Verdict::Missing});
  }

  std::set<std::string> outside;
  for (const auto& c : classified) {
    auto it = index.find(c.function);
    if (it == index.end()) {
      outside.insert(c.function);
      continue;
    }
    auto& row = m.rows[it->second];
    switch (c.rtype) {
      case ReqType::Func: ++row.n_func; break;
      case ReqType::Prob: ++row.n_prob; break;
      case ReqType::Other: ++row.n_other; break;
    }
  }
  if (!outside.empty()) {
    throw Error(ErrorCode::AliasClosureViolation, "classified rows name aliases outside the catalog",
                std::vector<std::string>(outside.begin(), outside.end()));
  }

  m.totals.function = "TOTAL";
  for (auto& row : m.rows) {
    row.verdict = verdict(row.n_func, row.n_prob);
    m.totals.n_func += row.n_func;
    m.totals.n_prob += row.n_prob;
    m.totals.n_other += row.n_other;
  }
  m.totals.verdict = verdict(m.totals.n_func, m.totals.n_prob);
  return m;
}

}  // namespace safer
