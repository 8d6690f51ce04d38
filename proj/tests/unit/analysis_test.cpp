#include "safer/catalog.hpp"
#include "safer/classify.hpp"
#include "safer/coverage.hpp"
#include "safer/error.hpp"
#include "safer/pairwise.hpp"
#include "safer/reporting.hpp"
#include "safer/requirements.hpp"
#include "safer/text.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <map>
#include <set>

using namespace safer;
using json = nlohmann::ordered_json;
using safer::testing::Gen;
using safer::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no safer::Error thrown";
  return ErrorCode::IoFailure;
}

FunctionCatalog drone_catalog() {
  return FunctionCatalog::from_json(json::parse(safer::testing::read_fixture("catalogs/drone_safety.json")));
}

ClassifiedRequirement row(std::string id, std::string fn, ReqType t = ReqType::Func, std::string text = "t") {
  ClassifiedRequirement r;
  r.req_id = std::move(id);
  r.function = std::move(fn);
  r.rtype = t;
  r.original_text = text;
  r.system_requirement = text;
  r.confidence = 90;
  return r;
}

RequirementChunk make_chunk(const std::vector<std::string>& ids, std::size_t index = 0) {
  RequirementChunk c;
  c.index = index;
  for (const auto& id : ids) c.items.push_back({id, "requirement " + id, {}});
  return c;
}

std::string reply_of(const std::vector<json>& records) {
  json doc{{"results", json::array()}};
  for (const auto& r : records) doc["results"].push_back(r);
  return doc.dump();
}

json cls(const std::string& id, const std::string& fn, const std::string& type, int conf = 90) {
  return json{{"ReqID", id}, {"Function", fn}, {"Type", type}, {"Confidence", conf}};
}

}  // namespace

// ------------------------------------------------------------ classification

TEST(Classify, Sample10ReplayMatchesExpectedRows) {
  const auto set = load_requirements(safer::testing::fixture("sample10/requirements.csv"), "ReqID", {"Requirements"});
  const auto chunks = chunk(set.items, 10);
  ASSERT_EQ(chunks.size(), 1u);
  const auto table = join_classification(chunks[0], safer::testing::read_fixture("sample10/mock/sample10_reply.json"),
                                         drone_catalog());
  struct Expect {
    const char* id;
    const char* fn;
    const char* type;
    int conf;
  };
  const std::vector<Expect> printed{{"1000", "NAV", "FUNC", 90}, {"1001", "NAV", "FUNC", 85}, {"1002", "EN", "PROB", 80},
                                    {"1003", "EN", "_OT_", 70},  {"1004", "TD", "FUNC", 85},  {"1005", "TD", "FUNC", 90},
                                    {"1006", "_OF_", "_OT_", 75}, {"1007", "SUP", "FUNC", 85}, {"1008", "TD", "FUNC", 80},
                                    {"1009", "TD", "PROB", 90}};
  ASSERT_EQ(table.rows.size(), printed.size());
  EXPECT_TRUE(table.quarantine.empty());
  for (std::size_t i = 0; i < printed.size(); ++i) {
    const auto& r = table.rows[i];
    EXPECT_EQ(r.req_id, printed[i].id);
    EXPECT_EQ(r.function, printed[i].fn);
    EXPECT_EQ(to_string(r.rtype), printed[i].type);
    EXPECT_EQ(r.confidence, printed[i].conf);
    EXPECT_EQ(r.has(kLowConfidence), printed[i].conf < 80) << r.req_id;
    EXPECT_EQ(r.original_text, set.items[i].text);
  }
  EXPECT_NE(table.rows[0].system_requirement.find("shall"), std::string::npos);
}

TEST(Classify, PromptCarriesCatalogAndTypes) {
  const auto env = build_classification_prompt(make_chunk({"1", "2"}), drone_catalog());
  ASSERT_GE(env.resources().size(), 2u);
  EXPECT_EQ(env.resources()[0].tag, "ARCHITECTURE");
  EXPECT_EQ(env.resources()[0].body["NAV"], "Drone/Navigation/Navigating");
  EXPECT_EQ(env.resources()[1].tag, "safety_function_type");
  EXPECT_EQ(env.dataset_name(), "Safety Requirements");
  EXPECT_EQ(env.rows().size(), 2u);
}

TEST(Classify, JoinBehaviours) {
  const auto chunk = make_chunk({"a1", "a2", "a3", "a4", "a5"}, 4);
  const auto table = join_classification(chunk,
                                         reply_of({cls("a2", "NAV", "FUNC"), cls("a1", "XYZ", "PROB"), cls("a3", "EN", "MAYBE"),
                                                   cls("a2", "EN", "FUNC"), cls("zz", "EN", "FUNC"),
                                                   json{{"ReqID", "a5"}, {"Type", "FUNC"}}}),
                                         drone_catalog());
  ASSERT_EQ(table.rows.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(table.rows[i].req_id, chunk.items[i].req_id);
  EXPECT_EQ(table.rows[0].function, "_OF_");
  EXPECT_TRUE(table.rows[0].has(kRemappedToOF));
  EXPECT_EQ(table.rows[0].rtype, ReqType::Prob);
  EXPECT_EQ(table.rows[1].function, "NAV");
  EXPECT_EQ(table.rows[1].flags, 0u);
  EXPECT_EQ(table.rows[2].rtype, ReqType::Other);
  EXPECT_TRUE(table.rows[2].has(kRemappedToOT));
  EXPECT_TRUE(table.rows[3].has(kUnreturned));
  EXPECT_EQ(table.rows[3].function, "_OF_");
  EXPECT_TRUE(table.rows[4].has(kUnreturned));
  // repeated a2, fabricated zz, and a5 without a Function
  ASSERT_EQ(table.quarantine.size(), 3u);
  for (const auto& q : table.quarantine) EXPECT_EQ(q.chunk_index, 4u);
  EXPECT_EQ(code_of([&] { (void)join_classification(chunk, "no json here", drone_catalog()); }), ErrorCode::NoJsonFound);
}

TEST(Classify, PropertyJoinIsTotal) {
  Gen gen(31337);
  const auto catalog = drone_catalog();
  std::vector<std::string> aliases = catalog.aliases();
  aliases.push_back("BOGUS");
  const std::vector<std::string> types{"FUNC", "PROB", "_OT_", "??"};
  for (int round = 0; round < 200; ++round) {
    std::vector<std::string> ids;
    for (long i = 0, n = gen.range(1, 12); i < n; ++i) ids.push_back(std::to_string(100 + i));
    const auto chunk = make_chunk(ids);
    std::vector<json> records;
    for (const auto& id : ids) {
      if (gen.coin(0.8)) records.push_back(cls(id, gen.pick(aliases), gen.pick(types), static_cast<int>(gen.range(0, 100))));
      if (gen.coin(0.1)) records.push_back(cls(id, gen.pick(aliases), "FUNC"));
    }
    if (gen.coin(0.3)) records.push_back(cls("999" + std::to_string(round), "NAV", "FUNC"));
    gen.shuffle(records);
    const auto table = join_classification(chunk, reply_of(records), catalog);
    ASSERT_EQ(table.rows.size(), ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      EXPECT_EQ(table.rows[i].req_id, ids[i]);
      EXPECT_TRUE(catalog.contains(table.rows[i].function));
    }
    std::size_t used = 0;
    for (const auto& r : table.rows) used += r.has(kUnreturned) ? 0 : 1;
    EXPECT_EQ(used + table.quarantine.size(), records.size());
  }
}

TEST(Classify, TableRoundTripsThroughJson) {
  ClassificationTable t;
  t.rows = {row("1", "NAV"), row("2", "_OF_", ReqType::Other, "a, \"quoted\"\nline")};
  t.rows[1].flags = kUnreturned | kRemappedToOF;
  t.quarantine.push_back({2, json{{"ReqID", "x"}}, {"why"}});
  EXPECT_EQ(ClassificationTable::from_json(t.to_json()), t);
  EXPECT_EQ(flags_from_string(flags_to_string(t.rows[1].flags)), t.rows[1].flags);
  const auto lines = text::split_lines(t.to_csv());
  EXPECT_EQ(lines.front(),
            "ReqID,Function,Type,Confidence,System Requirement,Requirement,Flags,Function_Explanation,Type_Explanation");
}

TEST(Classify, ConsistencyOfThreeRuns) {
  // 42 requirements; run 2 and run 3 each relabel six different ids.
  Gen gen(11);
  const std::vector<std::string> fns{"NAV", "EN", "TD", "SUP"};
  ClassificationTable base;
  for (int i = 0; i < 42; ++i) base.rows.push_back(row("R" + std::to_string(i), gen.pick(fns)));
  std::vector<ClassificationTable> runs(3, base);
  for (int i = 0; i < 6; ++i) runs[1].rows[static_cast<std::size_t>(i)].function = "_OF_";
  for (int i = 6; i < 12; ++i) runs[2].rows[static_cast<std::size_t>(i)].function = "_OF_";
  std::reverse(runs[2].rows.begin(), runs[2].rows.end());

  // oracle: count ids whose label agrees across every run
  std::map<std::string, std::set<std::string>> labels;
  for (const auto& r : runs) {
    for (const auto& x : r.rows) labels[x.req_id].insert(x.function);
  }
  std::size_t agree = 0;
  for (const auto& [id, s] : labels) agree += s.size() == 1 ? 1 : 0;
  ASSERT_EQ(agree, 30u);
  EXPECT_DOUBLE_EQ(consistency(runs), 71.43);

  // against a reference: mean of 100, 36/42, 36/42
  EXPECT_DOUBLE_EQ(consistency(runs, &base), text::round2((100.0 + 2 * 100.0 * 36 / 42) / 3));

  // strict mode also compares the type
  runs[0].rows[20].rtype = ReqType::Prob;
  EXPECT_DOUBLE_EQ(consistency(runs), 71.43);
  EXPECT_DOUBLE_EQ(consistency(runs, nullptr, true), text::round2(100.0 * 29 / 42));

  runs[1].rows.pop_back();
  EXPECT_EQ(code_of([&] { (void)consistency(runs); }), ErrorCode::MismatchedIdSets);
  EXPECT_EQ(code_of([] { (void)consistency({}); }), ErrorCode::MismatchedIdSets);
}

// ------------------------------------------------------------ coverage

TEST(Coverage, VerdictMatchesEnumeration) {
  // every (n_func, n_prob) in [0,5] x [0,3] against the rule written out longhand
  int complete = 0;
  for (long f = 0; f <= 5; ++f) {
    for (long p = 0; p <= 3; ++p) {
      const bool enough_func = f == 3 || f == 4 || f == 5;
      const bool enough_prob = p != 0;
      EXPECT_EQ(verdict(f, p) == Verdict::Complete, enough_func && enough_prob) << f << "," << p;
      EXPECT_EQ(shortfall(f, p), (f < 3 ? 3 - f : 0) + (p < 1 ? 1 : 0));
      complete += verdict(f, p) == Verdict::Complete;
    }
  }
  EXPECT_EQ(complete, 9);
  static_assert(verdict(3, 1) == Verdict::Complete);
  static_assert(verdict(2, 5) == Verdict::Missing);
}

TEST(Coverage, MatrixCountsAndGaps) {
  const auto catalog = drone_catalog();
  std::vector<ClassifiedRequirement> rows;
  for (int i = 0; i < 3; ++i) rows.push_back(row("n" + std::to_string(i), "NAV"));
  rows.push_back(row("np", "NAV", ReqType::Prob));
  rows.push_back(row("e1", "EN"));
  rows.push_back(row("e2", "EN", ReqType::Prob));
  rows.push_back(row("o1", "_OF_", ReqType::Other));
  const auto m = build_matrix(rows, catalog);
  ASSERT_EQ(m.rows.size(), catalog.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) EXPECT_EQ(m.rows[i].function, catalog.entries()[i].alias);
  EXPECT_EQ(m.find("NAV")->verdict, Verdict::Complete);
  EXPECT_TRUE(m.find("NAV")->minimal_prob());
  EXPECT_EQ(m.find("EN")->verdict, Verdict::Missing);
  EXPECT_EQ(m.find("_OF_")->n_other, 1);
  EXPECT_EQ(m.totals.n_func, 4);
  EXPECT_EQ(m.totals.n_prob, 2);
  EXPECT_EQ(m.classified_count(), 7);

  const auto gaps = m.gap_ranking();
  ASSERT_FALSE(gaps.empty());
  for (const auto& g : gaps) EXPECT_FALSE(g.catch_all());
  // EN needs 2 more FUNC; the empty functions need 4 each and come first in catalog order
  EXPECT_EQ(gaps.front().function, "DM");
  EXPECT_EQ(gaps.back().function, "EN");
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    EXPECT_GE(shortfall(gaps[i - 1].n_func, gaps[i - 1].n_prob), shortfall(gaps[i].n_func, gaps[i].n_prob));
  }

  EXPECT_EQ(CoverageMatrix::from_json(m.to_json()), m);
  const auto lines = text::split_lines(m.to_csv());
  EXPECT_EQ(lines.size(), catalog.size() + 2);
  EXPECT_EQ(lines.back().rfind("TOTAL", 0), 0u);

  rows.push_back(row("bad", "XYZ"));
  EXPECT_EQ(code_of([&] { (void)build_matrix(rows, catalog); }), ErrorCode::AliasClosureViolation);
}

TEST(Coverage, PropertyTotalsMatchRowCount) {
  Gen gen(77);
  const auto catalog = drone_catalog();
  const auto aliases = catalog.aliases();
  for (int round = 0; round < 100; ++round) {
    std::vector<ClassifiedRequirement> rows;
    std::map<std::string, std::array<long, 3>> tally;
    for (long i = 0, n = gen.range(0, 80); i < n; ++i) {
      const auto t = static_cast<ReqType>(gen.range(0, 2));
      rows.push_back(row(std::to_string(i), gen.pick(aliases), t));
      ++tally[rows.back().function][static_cast<std::size_t>(t)];
    }
    const auto m = build_matrix(rows, catalog);
    EXPECT_EQ(m.classified_count(), static_cast<long>(rows.size()));
    for (const auto& r : m.rows) {
      const auto t = tally[r.function];
      EXPECT_EQ(r.n_func, t[0]);
      EXPECT_EQ(r.n_prob, t[1]);
      EXPECT_EQ(r.n_other, t[2]);
      EXPECT_EQ(r.verdict, verdict(t[0], t[1]));
    }
  }
}

// ------------------------------------------------------------ pairwise

TEST(Pairwise, CanonicalIdOrder) {
  EXPECT_TRUE(req_id_less("9", "10"));
  EXPECT_FALSE(req_id_less("10", "9"));
  EXPECT_TRUE(req_id_less("10", "A"));
  EXPECT_TRUE(req_id_less("1_1", "86_0"));
  EXPECT_EQ(canonical_pair("3025", "3011"), (ReqPair{"3011", "3025"}));
}

TEST(Pairwise, InstructionsPerVersion) {
  const auto v1 = pair_instructions(PairTask::Duplicates, PromptVersion::V1);
  const auto v2 = pair_instructions(PairTask::Duplicates, PromptVersion::V2);
  const auto v3 = pair_instructions(PairTask::Duplicates, PromptVersion::V3);
  const auto c = pair_instructions(PairTask::Contradictions, PromptVersion::V3);
  EXPECT_NE(v1.find("mark the duplicate requirements"), std::string::npos);
  EXPECT_EQ(v1.find("different functions"), std::string::npos);
  EXPECT_NE(v2.find("not considered duplicate"), std::string::npos);
  EXPECT_NE(v3.find("complementary"), std::string::npos);
  EXPECT_NE(v3.find("refinement"), std::string::npos);
  EXPECT_NE(c.find("mark the contradicting requirements"), std::string::npos);
}

TEST(Pairwise, ClustersFollowCatalogOrder) {
  const auto catalog = drone_catalog();
  const std::vector<ClassifiedRequirement> rows{row("5", "TD"), row("1", "NAV"), row("2", "ZZZ"), row("3", "TD"),
                                                row("4", "_OF_")};
  const auto clusters = cluster_by_function(rows, &catalog);
  std::vector<std::string> order;
  for (const auto& c : clusters) order.push_back(c.alias);
  EXPECT_EQ(order, (std::vector<std::string>{"NAV", "TD", "_OF_", "ZZZ"}));
  ASSERT_EQ(clusters[1].items.size(), 2u);
  EXPECT_EQ(clusters[1].items[0].req_id, "5");
  EXPECT_EQ(cluster_by_function(rows).front().alias, "TD");
}

TEST(Pairwise, V3CoSubmitsOtherFunctionRows) {
  const std::vector<Cluster> clusters{{"NAV", {row("1", "NAV"), row("2", "NAV")}},
                                      {"EN", {row("3", "EN")}},
                                      {"_OF_", {row("9", "_OF_")}}};
  const auto v3 = build_pair_prompts(clusters, PairTask::Duplicates, PromptVersion::V3);
  ASSERT_EQ(v3.size(), 2u);  // the lone _OF_ row gives no prompt of its own
  EXPECT_EQ(v3[0].members.size(), 3u);
  EXPECT_EQ(v3[1].source_cluster, "EN");
  EXPECT_NE(v3[1].prompt.find("ReqID: 9\nFunction: _OF_"), std::string::npos);
  const auto v1 = build_pair_prompts(clusters, PairTask::Duplicates, PromptVersion::V1);
  ASSERT_EQ(v1.size(), 1u);
  EXPECT_EQ(v1[0].members.size(), 2u);
  EXPECT_EQ(build_pair_prompts(clusters, PairTask::Contradictions, PromptVersion::V3).size(), 1u);
}

TEST(Pairwise, ValidationRules) {
  PairPrompt p;
  p.index = 3;
  p.source_cluster = "NAV";
  p.members = {row("10", "NAV"), row("9", "NAV"), row("20", "EN"), row("30", "_OF_")};
  const std::string reply = reply_of({json{{"ReqID_A", "10"}, {"ReqID_B", "9"}, {"Relation", "Duplicate"}},
                                      json{{"ReqID_A", "9"}, {"ReqID_B", "20"}, {"Relation", "Duplicate"}},
                                      json{{"ReqID_A", "9"}, {"ReqID_B", "30"}, {"Relation", "Duplicate"}},
                                      json{{"ReqID_A", "9"}, {"ReqID_B", "9"}},
                                      json{{"ReqID_A", "9"}, {"ReqID_B", "77"}},
                                      json{{"ReqID_A", 9}, {"ReqID_B", 10}, {"Relation", "Refinement"}}});
  const auto v2 = validate_pair_reply(p, reply, PairTask::Duplicates, PromptVersion::V2);
  ASSERT_EQ(v2.findings.size(), 3u);
  EXPECT_EQ(v2.findings[0].pair(), (ReqPair{"9", "10"}));
  EXPECT_EQ(v2.findings[0].kind, PairKind::Duplicate);
  EXPECT_NE(v2.findings[0].validator_note.find("Refinement"), std::string::npos);
  EXPECT_EQ(v2.findings[1].kind, PairKind::Complementary);
  EXPECT_FALSE(v2.findings[1].validator_note.empty());
  EXPECT_EQ(v2.findings[2].kind, PairKind::Duplicate);  // _OF_ side keeps Duplicate
  EXPECT_EQ(v2.quarantine.size(), 2u);
  for (const auto& q : v2.quarantine) EXPECT_EQ(q.chunk_index, 3u);

  const auto v1 = validate_pair_reply(p, reply, PairTask::Duplicates, PromptVersion::V1);
  EXPECT_EQ(v1.findings[1].kind, PairKind::Duplicate);

  const std::string conflict = reply_of({json{{"ReqID_A", "10"}, {"ReqID_B", "9"}, {"Relation", "Contradiction"}},
                                         json{{"ReqID_A", "9"}, {"ReqID_B", "10"}, {"Relation", "Duplicate"}}});
  EXPECT_EQ(code_of([&] { (void)validate_pair_reply(p, conflict, PairTask::Duplicates, PromptVersion::V3); }),
            ErrorCode::KindConflict);
}

TEST(Pairwise, MergeDropsRepeatsAndRoundTrips) {
  PairFinding f{PairKind::Duplicate, "1", "2", "NAV", "NAV", "same", "NAV", ""};
  PairFinding g{PairKind::Contradiction, "3", "4", "EN", "EN", "opposite", "EN", ""};
  auto merged = merge_analyses({PairAnalysis{{f, g}, {}}, PairAnalysis{{f}, {}}});
  ASSERT_EQ(merged.findings.size(), 2u);
  const auto back = PairAnalysis::from_json(merged.to_json(PairTask::Duplicates));
  EXPECT_EQ(back.findings, merged.findings);
  EXPECT_EQ(merged.to_json(PairTask::Contradictions)["kind"], "contradictions");
}

TEST(Pairwise, PropertyConsolidateKeepsOneSurvivorPerGroup) {
  Gen gen(4242);
  for (int round = 0; round < 200; ++round) {
    const long n = gen.range(1, 30);
    std::vector<ClassifiedRequirement> rows;
    for (long i = 0; i < n; ++i) rows.push_back(row(std::to_string(gen.range(0, 3) * 100 + i), "NAV"));
    gen.shuffle(rows);
    std::vector<PairFinding> findings;
    for (long k = 0, m = gen.range(0, n); k < m; ++k) {
      const auto& a = gen.pick(rows).req_id;
      const auto& b = gen.pick(rows).req_id;
      if (a == b) continue;
      auto [x, y] = canonical_pair(a, b);
      const auto kind = gen.coin(0.8) ? PairKind::Duplicate : PairKind::Complementary;
      findings.push_back({kind, x, y, "NAV", "NAV", "", "NAV", ""});
    }

    // oracle: repeated relabelling until groups stop changing
    std::map<std::string, std::string> group;
    for (const auto& r : rows) group[r.req_id] = r.req_id;
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& f : findings) {
        if (f.kind != PairKind::Duplicate) continue;
        auto& ga = group[f.req_a];
        auto& gb = group[f.req_b];
        if (ga == gb) continue;
        const std::string low = req_id_less(ga, gb) ? ga : gb;
        const std::string high = low == ga ? gb : ga;
        for (auto& [id, g] : group) {
          if (g == high) g = low;
        }
        changed = true;
      }
    }

    const auto c = consolidate(rows, findings);
    std::vector<std::string> expected_survivors;
    for (const auto& r : rows) {
      if (group[r.req_id] == r.req_id) expected_survivors.push_back(r.req_id);
    }
    std::vector<std::string> survivors;
    for (const auto& r : c.survivors) survivors.push_back(r.req_id);
    EXPECT_EQ(survivors, expected_survivors);
    for (const auto& [id, g] : group) {
      if (id == g) {
        EXPECT_EQ(c.representative.count(id), 0u);
      } else {
        EXPECT_EQ(c.representative.at(id), g);
      }
    }
  }
}

TEST(Pairwise, ScoreAgainstGold) {
  const auto gold = GoldPairs::load(safer::testing::fixture("pairs/gold_contradictions.csv"), PairKind::Contradiction);
  ASSERT_EQ(gold.pairs.size(), 9u);
  std::vector<PairFinding> findings;
  int taken = 0;
  for (const auto& [a, b] : gold.pairs) {
    if (taken++ < 7) findings.push_back({PairKind::Contradiction, b, a, "", "", "", "", ""});
  }
  findings.push_back({PairKind::Contradiction, "3023", "3027", "", "", "", "", ""});
  findings.push_back({PairKind::Duplicate, "3001", "3002", "", "", "", "", ""});
  const auto s = score(findings, gold);
  EXPECT_EQ(s.detected_true, 7u);
  EXPECT_EQ(s.gold_total, 9u);
  EXPECT_EQ(s.false_positive, 1u);
  EXPECT_DOUBLE_EQ(s.rate, 77.78);
  EXPECT_FALSE(s.pass);
  EXPECT_TRUE(score(findings, gold, 77.0).pass);
  EXPECT_FALSE(score(findings, gold, 77.78).pass);

  EXPECT_EQ(gold.unknown_ids({"3006", "3007"}).size(), 15u);
  const auto empty = GoldPairs::parse("ReqID_A,ReqID_B\n", PairKind::Duplicate);
  EXPECT_TRUE(empty.pairs.empty());
  EXPECT_EQ(code_of([&] { (void)score(findings, empty); }), ErrorCode::EmptyGold);
  EXPECT_EQ(code_of([] { (void)score({}, GoldPairs{}); }), ErrorCode::EmptyGold);
}

// ------------------------------------------------------------ reporting

TEST(Reporting, MetricsUseStrictThresholds) {
  MetricScores scores;
  scores.classification = 82.72;
  scores.stability = 71.43;
  scores.duplicates = 80.0;
  scores.subsystem_identification = 100.0;
  const auto rows = metrics_summary(scores);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].metric, "subsystem_identification");
  EXPECT_TRUE(rows[0].pass);
  EXPECT_EQ(rows[1].metric, "classification");
  EXPECT_TRUE(rows[1].pass);
  EXPECT_EQ(rows[2].metric, "duplicates");
  EXPECT_FALSE(rows[2].pass);  // equal to the threshold is not enough
  EXPECT_EQ(rows[3].metric, "stability");
  EXPECT_FALSE(rows[3].pass);
  EXPECT_DOUBLE_EQ(rows[3].threshold, 80.0);
  EXPECT_EQ(code_of([] { (void)metrics_summary({}); }), ErrorCode::NoScores);
}

TEST(Reporting, EmitIsDeterministic) {
  ReportInputs in;
  in.dataset_name = "Safety Requirements";
  in.dataset_id = "abc123";
  in.catalog = drone_catalog();
  ClassificationTable t;
  t.rows = {row("1", "NAV", ReqType::Func, "The drone shall hold, \"steady\""), row("2", "EN", ReqType::Prob)};
  in.classification = t;
  in.coverage = build_matrix(t.rows, *in.catalog);
  in.scores.classification = 90.0;

  const auto rendered = render_report_set(in, "v1");
  ASSERT_EQ(rendered.allocation.size(), 2u);
  EXPECT_EQ(rendered.allocation[0].lineage, "Drone/Navigation/Navigating");
  EXPECT_EQ(rendered.allocation[0].primary_system, "Drone");
  EXPECT_NE(rendered.summary_markdown.find("not run"), std::string::npos);

  TempDir a, b;
  const auto ra = emit_report_set(in, a.path(), "v1");
  const auto rb = emit_report_set(in, b.path(), "v1");
  ASSERT_EQ(ra.files.size(), rb.files.size());
  ASSERT_FALSE(ra.files.empty());
  for (std::size_t i = 0; i < ra.files.size(); ++i) {
    EXPECT_EQ(ra.files[i].filename(), rb.files[i].filename());
    EXPECT_EQ(text::read_file(ra.files[i]), text::read_file(rb.files[i])) << ra.files[i];
    EXPECT_EQ(ra.files[i].parent_path(), a.path() / "reports");
  }
  std::set<std::string> names;
  for (const auto& f : ra.files) names.insert(f.filename().string());
  for (const char* want : {"allocation_v1.csv", "coverage_v1.csv", "summary_v1.md", "metrics_v1.json"}) {
    EXPECT_TRUE(names.count(want)) << want;
  }
}
