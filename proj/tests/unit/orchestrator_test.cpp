#include "safer/backends.hpp"
#include "safer/config.hpp"
#include "safer/error.hpp"
#include "safer/gateway.hpp"
#include "safer/orchestrator.hpp"
#include "safer/text.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace safer;
using json = nlohmann::ordered_json;
using safer::testing::fixture;
using safer::testing::TempDir;
using safer::testing::write_config;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<LlmGateway> mock_gateway(const fs::path& dir) {
  return std::make_shared<LlmGateway>(std::make_shared<MockBackend>(dir), LlmRequestParams{},
                                      [](std::chrono::milliseconds) {});
}

// Every regular file under `root`, relative path -> bytes.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = text::read_file(e.path());
  }
  return out;
}

json pairs_pipeline(const fs::path& out, bool delta) {
  json task_defaults{{"type", "GENERATIVE_ANALYSIS_TASK"}, {"delta", delta}, {"output_path", out.string()},
                     {"version_tag", "t1"}};
  return json{
      {"defaults", task_defaults},
      {"classify",
       {{"analysis_function", "analyze_requirement_classification"},
        {"input_file", fixture("pairs/requirements.csv").string()},
        {"catalog", fixture("catalogs/drone_safety.json").string()},
        {"chunk_size", 10}}},
      {"coverage", {{"analysis_function", "analyze_coverage"}, {"input_file", out.string()}}},
      {"duplicates",
       {{"analysis_function", "analyze_duplicates"},
        {"input_file", out.string()},
        {"prompt_version", "V3"},
        {"gold_file", fixture("pairs/gold_duplicates.csv").string()}}},
      {"contradictions",
       {{"analysis_function", "analyze_contradictions"},
        {"input_file", out.string()},
        {"gold_file", fixture("pairs/gold_contradictions.csv").string()}}},
  };
}

ErrorCode code_of(const std::function<void()>& fn, std::string* message = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (message) {
      *message = e.what();
      for (const auto& d : e.details()) *message += "\n" + d;
    }
    return e.code();
  }
  ADD_FAILURE() << "no safer::Error thrown";
  return ErrorCode::IoFailure;
}

}  // namespace

// ------------------------------------------------------------ config

TEST(Config, TaskBlockWithDefaults) {
  const json doc = json::parse(R"({
    "analyze_safety_requirements": {
      "type": "GENERATIVE_ANALYSIS_TASK",
      "run": true,
      "delta": true,
      "project_dir": "proj",
      "readme": "README.md",
      "input_file": "data/requirements.csv",
      "dataset_name": "Drone Safety Requirements",
      "dataset_id_column": "ReqID",
      "dataset_columns": ["Requirements"],
      "result_columns": ["Function", "Type"],
      "instructions": "prompts/instructions.txt",
      "resources": "prompts/resources.json",
      "output_path": "output",
      "chunk_size": 10,
      "max_items": -1,
      "execute": true,
      "analyze": true,
      "analysis_function": "analyze_requirement_completeness",
      "verbose": false
    }
  })");
  const auto cfgs = parse_config(doc, "/base");
  ASSERT_EQ(cfgs.size(), 1u);
  const auto& c = cfgs[0];
  EXPECT_EQ(c.task_name, "analyze_safety_requirements");
  EXPECT_EQ(c.chunk_size, 10);
  EXPECT_EQ(c.max_items, -1);
  EXPECT_TRUE(c.delta);
  EXPECT_EQ(c.dataset_name, "Drone Safety Requirements");
  EXPECT_EQ(c.resolve(c.input_file), fs::path("/base/proj/data/requirements.csv"));
  EXPECT_EQ(c.resolve("/abs/x"), fs::path("/abs/x"));
  EXPECT_TRUE(c.warnings.empty());
}

TEST(Config, DefaultsMergeUnderTasksInFileOrder) {
  const json doc = json::parse(R"({
    "defaults": {"output_path": "out", "chunk_size": 5, "analysis_function": "analyze_coverage"},
    "zeta": {"input_file": "a.csv", "surprise": 1},
    "alpha": {"input_file": "b.csv", "chunk_size": 7}
  })");
  const auto cfgs = parse_config(doc, ".");
  ASSERT_EQ(cfgs.size(), 2u);
  EXPECT_EQ(cfgs[0].task_name, "zeta");
  EXPECT_EQ(cfgs[0].chunk_size, 5);
  ASSERT_EQ(cfgs[0].warnings.size(), 1u);
  EXPECT_NE(cfgs[0].warnings[0].find("surprise"), std::string::npos);
  EXPECT_EQ(cfgs[1].chunk_size, 7);
}

TEST(Config, ReportsEveryProblem) {
  std::string msg;
  const json doc = json::parse(R"({
    "t": {"output_path": "o", "analysis_function": "analyze_coverage", "chunk_size": 0, "delta": "yes",
          "prompt_version": "V9"}
  })");
  EXPECT_EQ(code_of([&] { (void)parse_config(doc, "."); }, &msg), ErrorCode::InvalidConfig);
  for (const char* field : {"t.input_file", "t.chunk_size", "t.delta", "t.prompt_version"}) {
    EXPECT_NE(msg.find(field), std::string::npos) << field << "\n" << msg;
  }
  EXPECT_EQ(code_of([] {
              (void)parse_config(json::parse(R"({"t":{"input_file":"a","output_path":"o","analysis_function":"nope"}})"),
                                 ".");
            }),
            ErrorCode::UnknownAnalysisFunction);
  EXPECT_EQ(code_of([] { (void)parse_config(json::array(), "."); }), ErrorCode::InvalidConfig);
}

TEST(Config, EmptyFileGivesNoTasks) {
  TempDir dir;
  text::write_file(dir / "empty.json", "  \n");
  EXPECT_TRUE(load_config(dir / "empty.json").empty());
  EXPECT_TRUE(parse_config(json(), ".").empty());
  EXPECT_TRUE(load_config(write_config(dir.path(), json::object())).empty());
  text::write_file(dir / "bad.json", "{ nope");
  EXPECT_EQ(code_of([&] { (void)load_config(dir / "bad.json"); }), ErrorCode::InvalidConfig);
}

TEST(Config, LoadResolvesAgainstFileDirectory) {
  TempDir dir;
  const auto p = write_config(dir.path(), json{{"t", {{"input_file", "in.csv"}, {"output_path", "out"},
                                                      {"analysis_function", "analyze_coverage"}}}});
  const auto cfgs = load_config(p);
  ASSERT_EQ(cfgs.size(), 1u);
  EXPECT_EQ(cfgs[0].resolve(cfgs[0].output_path), dir / "out");
}

TEST(Config, VersionTagPrecedence) {
  TaskConfig c;
  RunOptions o;
  EXPECT_EQ(resolve_version_tag(c, o), text::today_iso());
  c.version_tag = "cfg";
  EXPECT_EQ(resolve_version_tag(c, o), "cfg");
  o.version_tag = "cli";
  EXPECT_EQ(resolve_version_tag(c, o), "cli");
}

// ------------------------------------------------------------ orchestrator

TEST(Orchestrator, EmptyConfigRunsNothing) {
  Orchestrator o(AnalysisRegistry::builtin(), nullptr);
  EXPECT_TRUE(o.run_all({}).empty());
  EXPECT_TRUE(o.report_files().empty());
}

TEST(Orchestrator, RunFalseIsSkipped) {
  TempDir dir;
  auto doc = pairs_pipeline(dir / "out", false);
  doc["classify"]["run"] = false;
  const auto cfgs = parse_config(doc, dir.path());
  Orchestrator o(AnalysisRegistry::builtin(), nullptr);
  const auto out = o.run_task(cfgs[0]);
  EXPECT_EQ(out.status, TaskStatus::SkippedRunFalse);
  EXPECT_EQ(out.backend_calls, 0u);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Orchestrator, FullPipelineWritesOutputsAndReports) {
  TempDir dir;
  const auto cfgs = parse_config(pairs_pipeline(dir / "out", false), dir.path());
  Orchestrator o(AnalysisRegistry::builtin(), mock_gateway(fixture("pairs/mock")));
  const auto outcomes = o.run_all(cfgs);
  ASSERT_EQ(outcomes.size(), 4u);
  for (const auto& oc : outcomes) {
    EXPECT_EQ(oc.status, TaskStatus::Executed) << oc.task_name << ": " << text::join(oc.diagnostics, "; ");
  }
  EXPECT_EQ(outcomes[0].backend_calls, 3u);
  EXPECT_EQ(outcomes[1].backend_calls, 0u);
  EXPECT_EQ(outcomes[2].backend_calls, 5u);
  EXPECT_EQ(outcomes[3].backend_calls, 5u);

  const auto paths = task_paths(cfgs[0], "t1");
  EXPECT_TRUE(fs::exists(paths.raw));
  EXPECT_TRUE(fs::exists(paths.joined_json));
  EXPECT_TRUE(fs::exists(paths.joined_csv));
  EXPECT_FALSE(fs::exists(paths.partial));

  const auto& dup = o.artifacts().at("duplicates");
  ASSERT_TRUE(dup.duplicate_score);
  EXPECT_DOUBLE_EQ(dup.duplicate_score->rate, 87.5);
  const auto& con = o.artifacts().at("contradictions");
  ASSERT_TRUE(con.contradiction_score);
  EXPECT_DOUBLE_EQ(con.contradiction_score->rate, 77.78);
  EXPECT_EQ(con.contradiction_score->false_positive, 1u);

  ASSERT_FALSE(o.report_files().empty());
  EXPECT_TRUE(fs::exists(dir / "out/reports/summary_t1.md"));
  const auto metrics = json::parse(text::read_file(dir / "out/reports/metrics_t1.json"));
  EXPECT_FALSE(metrics.empty());

  // a joined file reads back to the same artifacts
  const auto joined = Artifacts::from_json(json::parse(text::read_file(paths.joined_json)));
  ASSERT_TRUE(joined.classification);
  EXPECT_EQ(*joined.classification, *o.artifacts().at("classify").classification);
}

TEST(Orchestrator, DeltaSkipsAndForceReruns) {
  TempDir dir;
  const auto cfgs = parse_config(pairs_pipeline(dir / "out", true), dir.path());
  {
    Orchestrator o(AnalysisRegistry::builtin(), mock_gateway(fixture("pairs/mock")));
    for (const auto& oc : o.run_all(cfgs)) ASSERT_EQ(oc.status, TaskStatus::Executed) << oc.task_name;
  }
  const auto before = snapshot(dir / "out");

  auto gw = mock_gateway(fixture("pairs/mock"));
  Orchestrator again(AnalysisRegistry::builtin(), gw);
  for (const auto& oc : again.run_all(cfgs)) {
    EXPECT_EQ(oc.status, TaskStatus::SkippedDeltaHit) << oc.task_name;
    EXPECT_EQ(oc.backend_calls, 0u);
  }
  EXPECT_EQ(gw->backend_calls(), 0u);
  EXPECT_EQ(snapshot(dir / "out"), before);

  RunOptions force;
  force.force = true;
  auto gw2 = mock_gateway(fixture("pairs/mock"));
  Orchestrator forced(AnalysisRegistry::builtin(), gw2, force);
  for (const auto& oc : forced.run_all(cfgs)) EXPECT_EQ(oc.status, TaskStatus::Executed) << oc.task_name;
  EXPECT_EQ(gw2->backend_calls(), 13u);
  EXPECT_EQ(snapshot(dir / "out"), before);
}

TEST(Orchestrator, FailedChunkLeavesPartialRawFile) {
  TempDir dir;
  // drone110 rules minus the sixth chunk
  std::string rules;
  for (const auto& line : text::split_lines(safer::testing::read_fixture("drone110/mock/rules.tsv"))) {
    if (line.empty() || line.find("chunk_05") != std::string::npos) continue;
    const auto tab = line.rfind('\t');
    rules += line.substr(0, tab + 1) + fixture("drone110/mock/fixtures").string() + "/" + line.substr(tab + 1) + "\n";
  }
  text::write_file(dir / "mock/rules.tsv", rules);

  const json doc{{"classify",
                  {{"analysis_function", "analyze_requirement_classification"},
                   {"input_file", fixture("drone110/requirements.csv").string()},
                   {"catalog", fixture("catalogs/drone_safety.json").string()},
                   {"output_path", "out"},
                   {"version_tag", "p"}}}};
  const auto cfgs = parse_config(doc, dir.path());
  Orchestrator o(AnalysisRegistry::builtin(), mock_gateway(dir / "mock"));
  const auto out = o.run_task(cfgs[0]);
  EXPECT_EQ(out.status, TaskStatus::Failed);
  const auto paths = task_paths(cfgs[0], "p");
  EXPECT_FALSE(fs::exists(paths.raw));
  EXPECT_FALSE(fs::exists(paths.joined_json));
  ASSERT_TRUE(fs::exists(paths.partial));
  const auto partial = json::parse(text::read_file(paths.partial));
  EXPECT_EQ(partial["units"].size(), 10u);
  for (const auto& u : partial["units"]) EXPECT_NE(u["label"], "chunk-5");
}

TEST(Orchestrator, DependentTaskFailsWhenUpstreamFails) {
  TempDir dir;
  auto doc = pairs_pipeline(dir / "out", false);
  doc.erase("duplicates");
  doc.erase("contradictions");
  const auto cfgs = parse_config(doc, dir.path());
  Orchestrator o(AnalysisRegistry::builtin(), nullptr);  // no backend: classification cannot run
  const auto outcomes = o.run_all(cfgs);
  ASSERT_EQ(outcomes.size(), 2u);
  EXPECT_EQ(outcomes[0].status, TaskStatus::Failed);
  EXPECT_EQ(outcomes[1].status, TaskStatus::Failed);
  const auto diag = text::join(outcomes[1].diagnostics, "\n");
  EXPECT_NE(diag.find("missing upstream output"), std::string::npos) << diag;
  EXPECT_TRUE(o.report_files().empty());
}

TEST(Orchestrator, DryRunPlansWithoutWriting) {
  TempDir dir;
  const auto cfgs = parse_config(pairs_pipeline(dir / "out", false), dir.path());
  RunOptions opts;
  opts.dry_run = true;
  Orchestrator o(AnalysisRegistry::builtin(), nullptr, opts);
  const auto out = o.run_task(cfgs[0]);
  EXPECT_EQ(out.status, TaskStatus::Planned);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Orchestrator, DeterministicCatalogTask) {
  TempDir dir;
  const json doc{{"functions",
                  {{"analysis_function", "identify_functions"},
                   {"catalog_method", "deterministic"},
                   {"input_file", fixture("drone.opl").string()},
                   {"output_path", "out"},
                   {"reference_catalog", fixture("catalogs/drone_functions.json").string()},
                   {"version_tag", "c"}}}};
  const auto cfgs = parse_config(doc, dir.path());
  Orchestrator o(AnalysisRegistry::builtin(), nullptr);
  const auto outcomes = o.run_all(cfgs);
  ASSERT_EQ(outcomes.size(), 1u);
  ASSERT_EQ(outcomes[0].status, TaskStatus::Executed) << text::join(outcomes[0].diagnostics, "; ");
  const auto& a = o.artifacts().at("functions");
  ASSERT_TRUE(a.catalog);
  EXPECT_TRUE(a.catalog->contains("NAV"));
  ASSERT_TRUE(a.scores.subsystem_identification);
  EXPECT_DOUBLE_EQ(*a.scores.subsystem_identification, 100.0);
  EXPECT_TRUE(fs::exists(dir / "out/joined/functions_c.csv"));
}

TEST(Orchestrator, UnknownFunctionInRegistryFails) {
  TaskConfig c;
  c.task_name = "x";
  c.analysis_function = "not_registered";
  c.input_file = "in";
  c.output_path = "out";
  Orchestrator o(AnalysisRegistry{}, nullptr);
  EXPECT_EQ(o.run_task(c).status, TaskStatus::Failed);
}
