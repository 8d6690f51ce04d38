#include "safer/reporting.hpp"

#include "safer/csv.hpp"
#include "safer/error.hpp"
#include "safer/text.hpp"

#include <sstream>

namespace safer {

using json = nlohmann::ordered_json;

std::vector<MetricRow> metrics_summary(const MetricScores& scores, const MetricsThresholds& thresholds) {
  std::vector<MetricRow> rows;
  auto add = [&](const char* name, const std::optional<double>& value, double threshold) {
    if (!value) return;
    rows.push_back(MetricRow{name, *value, threshold, *value > threshold});
  };
  add("subsystem_identification", scores.subsystem_identification, thresholds.subsystem_identification);
  add("classification", scores.classification, thresholds.classification);
  add("duplicates", scores.duplicates, thresholds.duplicates);
  add("contradictions", scores.contradictions, thresholds.contradictions);
  add("stability", scores.stability, thresholds.stability);
  if (rows.empty()) throw Error(ErrorCode::NoScores, "no scores to summarize");
  return rows;
}

std::vector<AllocationRow> allocation_rows(const ClassificationTable& table, const FunctionCatalog* catalog) {
  std::vector<AllocationRow> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    AllocationRow a{r.req_id, r.function, "", "", r.original_text};
    if (catalog) {
      if (const CatalogEntry* e = catalog->find(r.function)) {
        a.lineage = e->lineage_string();
        a.primary_system = e->primary_system;
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

json envelope(const ReportInputs& in, const char* report, const std::string& tag, bool ran) {
  json j{{"report", report},
         {"version_tag", tag},
         {"dataset", json{{"name", in.dataset_name}, {"id", in.dataset_id}}},
         {"status", ran ? "complete" : "not run"}};
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json score_json(const PairScore& s) {
  return json{{"detected_true", s.detected_true}, {"gold_total", s.gold_total},
              {"false_positive", s.false_positive}, {"rate", s.rate},
              {"threshold", s.threshold},           {"pass", s.pass}};
}

std::string pair_section(const char* title, const std::optional<PairAnalysis>& analysis,
                         const std::optional<PairScore>& score) {
  std::ostringstream md;
  md << "## " << title << "\n\n";
  if (!analysis) {
    md << "_not run_\n\n";
    return md.str();
  }
  if (analysis->findings.empty()) {
    md << "No pairs reported.\n\n";
  } else {
    md << "| Kind | ReqID A | ReqID B | Functions | Rationale | Note |\n|---|---|---|---|---|---|\n";
    for (const auto& f : analysis->findings) {
      md << "| " << to_string(f.kind) << " | " << f.req_a << " | " << f.req_b << " | " << f.function_a << "/"
         << f.function_b << " | " << f.rationale << " | " << f.validator_note << " |\n";
    }
    md << "\n";
  }
  if (!analysis->quarantine.empty()) {
    md << analysis->quarantine.size() << " reply record(s) quarantined.\n\n";
  }
  if (score) {
    md << "Recall against gold: " << text::format2(score->rate) << "% (" << score->detected_true << " of "
       << score->gold_total << ", " << score->false_positive << " false positive).\n\n";
  }
  return md.str();
}

}  // namespace

ReportSet render_report_set(const ReportInputs& in, const std::string& tag) {
  ReportSet set;
  const FunctionCatalog* catalog = in.catalog ? &*in.catalog : nullptr;
  auto name = [&](const char* stem, const char* ext) { return std::string(stem) + "_" + tag + "." + ext; };

  // allocation
  {
    json j = envelope(in, "allocation", tag, in.classification.has_value());
    std::string csv_text = csv::format_row({"ReqID", "Function", "Lineage", "Primary System", "Requirement"});
    if (in.classification) {
      set.allocation = allocation_rows(*in.classification, catalog);
      j["rows"] = json::array();
      for (const auto& a : set.allocation) {
        j["rows"].push_back(json{{"ReqID", a.req_id},
                                 {"Function", a.function},
                                 {"Lineage", a.lineage},
                                 {"Primary_System", a.primary_system},
                                 {"Requirement", a.requirement}});
        csv_text += csv::format_row({a.req_id, a.function, a.lineage, a.primary_system, a.requirement});
      }
    }
    set.documents.emplace_back(name("allocation", "csv"), csv_text);
    set.documents.emplace_back(name("allocation", "json"), dump(j));
  }

  // classification
  {
    json j = envelope(in, "classification", tag, in.classification.has_value());
    std::string csv_text;
    if (in.classification) {
      json t = in.classification->to_json();
      j["rows"] = t["rows"];
      j["quarantine"] = t["quarantine"];
      csv_text = in.classification->to_csv();
    } else {
      csv_text = ClassificationTable{}.to_csv();
    }
    set.documents.emplace_back(name("classification", "csv"), csv_text);
    set.documents.emplace_back(name("classification", "json"), dump(j));
  }

  // duplicates / contradictions
  auto pair_docs = [&](const char* stem, PairTask task, const std::optional<PairAnalysis>& a,
                       const std::optional<PairScore>& s) {
    json j = envelope(in, stem, tag, a.has_value());
    if (a) {
      json body = a->to_json(task);
      j["findings"] = body["findings"];
      j["quarantine"] = body["quarantine"];
    }
    if (s) j["score"] = score_json(*s);
    set.documents.emplace_back(name(stem, "csv"), a ? a->to_csv() : PairAnalysis{}.to_csv());
    set.documents.emplace_back(name(stem, "json"), dump(j));
  };
  pair_docs("duplicates", PairTask::Duplicates, in.duplicates, in.duplicate_score);
  pair_docs("contradictions", PairTask::Contradictions, in.contradictions, in.contradiction_score);

  // coverage
  set.documents.emplace_back(name("coverage", "csv"),
                             in.coverage ? in.coverage->to_csv()
                                         : csv::format_row({"Function", "N Reqs FUNC", "PROB", "Result", "Other", "Note"}));

  // metrics
  MetricScores scores = in.scores;
  if (!scores.duplicates && in.duplicate_score) scores.duplicates = in.duplicate_score->rate;
  if (!scores.contradictions && in.contradiction_score) scores.contradictions = in.contradiction_score->rate;
  json metrics = envelope(in, "metrics", tag, false);
  try {
    set.metrics = metrics_summary(scores, in.thresholds);
    metrics["status"] = "complete";
    metrics["metrics"] = json::array();
    for (const auto& m : set.metrics) {
      metrics["metrics"].push_back(json{{"metric", m.metric},
                                        {"value", m.value},
                                        {"threshold", m.threshold},
                                        {"comparison", ">"},
                                        {"result", m.pass ? "pass" : "fail"}});
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoScores) throw;
  }

  // summary
  std::ostringstream md;
  md << "# Safety requirements report (" << tag << ")\n\n";
  md << "Dataset: " << (in.dataset_name.empty() ? "(unnamed)" : in.dataset_name);
  if (!in.dataset_id.empty()) md << " [" << in.dataset_id << "]";
  md << "\n\n";

  md << "## Coverage\n\n";
  if (!in.coverage) {
    md << "_not run_\n\n";
  } else {
    md << "| Function | FUNC | PROB | Other | Result | Note |\n|---|---|---|---|---|---|\n";
    for (const auto& r : in.coverage->rows) {
      md << "| " << r.function << " | " << r.n_func << " | " << r.n_prob << " | " << r.n_other << " | "
         << to_string(r.verdict) << " | "
         << (r.catch_all() ? "triage bucket, not a function" : r.minimal_prob() ? "minimal PROB" : "") << " |\n";
    }
    md << "| TOTAL | " << in.coverage->totals.n_func << " | " << in.coverage->totals.n_prob << " | "
       << in.coverage->totals.n_other << " |  |  |\n\n";
  }

  md << "## Coverage gaps\n\n";
  if (!in.coverage) {
    md << "_not run_\n\n";
  } else {
    auto gaps = in.coverage->gap_ranking();
    if (gaps.empty()) {
      md << "Every function meets the sufficiency rule.\n\n";
    } else {
      int rank = 1;
      for (const auto& g : gaps) {
        md << rank++ << ". " << g.function << ": shortfall " << shortfall(g.n_func, g.n_prob) << " (needs "
           << std::max(0L, kMinFunctional - g.n_func) << " FUNC, " << std::max(0L, kMinProbabilistic - g.n_prob)
           << " PROB)\n";
      }
      md << "\n";
    }
  }

  md << pair_section("Duplicate requirements", in.duplicates, in.duplicate_score);
  md << pair_section("Contradicting requirements", in.contradictions, in.contradiction_score);

  md << "## Triage\n\n";
  if (!in.classification) {
    md << "_not run_\n\n";
  } else {
    std::size_t listed = 0;
    for (const auto& r : in.classification->rows) {
      if (r.function != kOtherFunction && !r.has(kLowConfidence) && r.flags == 0) continue;
      if (listed++ == 0) md << "| ReqID | Function | Type | Confidence | Flags |\n|---|---|---|---|---|\n";
      md << "| " << r.req_id << " | " << r.function << " | " << to_string(r.rtype) << " | " << r.confidence << " | "
         << flags_to_string(r.flags) << " |\n";
    }
    md << (listed == 0 ? std::string("Nothing to triage.\n\n") : std::string("\n"));
    if (!in.classification->quarantine.empty()) {
      md << in.classification->quarantine.size() << " reply record(s) quarantined.\n\n";
    }
  }

  md << "## Metrics\n\n";
  if (set.metrics.empty()) {
    md << "_not run_\n";
  } else {
    md << "| Metric | Value | Threshold | Result |\n|---|---|---|---|\n";
    for (const auto& m : set.metrics) {
      md << "| " << m.metric << " | " << text::format2(m.value) << " | >" << text::format2(m.threshold) << " | "
         << (m.pass ? "pass" : "fail") << " |\n";
    }
  }
  set.summary_markdown = md.str();
  set.documents.emplace_back(name("summary", "md"), set.summary_markdown);
  set.documents.emplace_back(name("metrics", "json"), dump(metrics));
  return set;
}

ReportSet emit_report_set(const ReportInputs& inputs, const std::filesystem::path& out_dir,
                          const std::string& version_tag) {
  ReportSet set = render_report_set(inputs, version_tag);
  const auto dir = out_dir / "reports";
  for (const auto& [file, content] : set.documents) {
    text::write_file(dir / file, content);
    set.files.push_back(dir / file);
  }
  return set;
}

}  // namespace safer
