// safer: command-line front end for the requirements analysis toolchain.

#include "safer/backends.hpp"
#include "safer/catalog.hpp"
#include "safer/classify.hpp"
#include "safer/config.hpp"
#include "safer/error.hpp"
#include "safer/gateway.hpp"
#include "safer/opl_parser.hpp"
#include "safer/orchestrator.hpp"
#include "safer/pairwise.hpp"
#include "safer/text.hpp"
#include "safer/xmi_parser.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct RunArgs {
  std::string config;
  std::string task;
  bool force = false;
  bool dry_run = false;
  bool verbose = false;
  std::string backend = "http";
  std::string mock_dir;
  std::string endpoint = "https://api.openai.com/v1";
  std::string api_key_file;
  std::string model = "gpt-4o";
  std::string version_tag;
  std::size_t max_in_flight = 1;
  int retries = 2;
};

std::shared_ptr<safer::LlmGateway> make_gateway(const RunArgs& args) {
  std::shared_ptr<safer::LlmBackend> backend;
  if (args.backend == "mock") {
    if (args.mock_dir.empty()) throw safer::Error(safer::ErrorCode::InvalidConfig, "--backend mock needs --mock-dir");
    backend = std::make_shared<safer::MockBackend>(args.mock_dir);
  } else {
    std::optional<fs::path> key_file;
    if (!args.api_key_file.empty()) key_file = args.api_key_file;
    safer::HttpBackendOptions opts;
    opts.endpoint = args.endpoint;
    try {
      opts.api_key = safer::resolve_api_key(key_file);
    } catch (const safer::Error& e) {
      std::cerr << "warning: " << e.what() << "\n  generative tasks will fail\n";
      return nullptr;
    }
    backend = std::make_shared<safer::HttpBackend>(std::move(opts));
  }
  safer::LlmRequestParams params;
  params.model_id = args.model;
  params.max_in_flight = args.max_in_flight;
  params.max_retries = args.retries;
  return std::make_shared<safer::LlmGateway>(std::move(backend), params);
}

int cmd_run(const RunArgs& args) {
  auto configs = safer::load_config(args.config);
  safer::RunOptions opts;
  opts.force = args.force;
  opts.dry_run = args.dry_run;
  opts.verbose = args.verbose;
  if (!args.version_tag.empty()) opts.version_tag = args.version_tag;
  if (!args.task.empty()) {
    bool known = false;
    for (const auto& c : configs) known = known || c.task_name == args.task;
    if (!known) throw safer::Error(safer::ErrorCode::InvalidConfig, "no task named '" + args.task + "'");
    opts.only_task = args.task;
  }
  if (args.verbose) opts.log = &std::cerr;

  std::shared_ptr<safer::LlmGateway> gateway;
  if (!args.dry_run) gateway = make_gateway(args);
  safer::Orchestrator orchestrator(safer::AnalysisRegistry::builtin(), gateway, opts);
  auto outcomes = orchestrator.run_all(configs);

  int failed = 0;
  for (const auto& o : outcomes) {
    std::cout << o.task_name << ": " << safer::to_string(o.status);
    if (o.backend_calls) std::cout << " (" << o.backend_calls << " backend calls)";
    std::cout << "\n";
    for (const auto& p : o.outputs) std::cout << "  wrote " << p.string() << "\n";
    if (args.verbose || o.status == safer::TaskStatus::Failed) {
      for (const auto& d : o.diagnostics) std::cout << "  note: " << d << "\n";
    }
    if (o.status == safer::TaskStatus::Failed) ++failed;
  }
  for (const auto& f : orchestrator.report_files()) std::cout << "report " << f.string() << "\n";
  return failed ? 1 : 0;
}

int cmd_catalog(const std::string& model, const std::vector<std::string>& hints, const std::string& out) {
  const std::string body = safer::text::read_file(model);
  const std::string ext = fs::path(model).extension().string();
  auto graph = (ext == ".xmi" || ext == ".xml") ? safer::parse_xmi_bdd(body) : safer::parse_opl(body);
  std::map<std::string, std::string> alias_hints;
  for (const auto& h : hints) {
    auto eq = h.find('=');
    if (eq == std::string::npos) throw safer::Error(safer::ErrorCode::InvalidConfig, "hint must be NAME=ALIAS: " + h);
    alias_hints[h.substr(0, eq)] = h.substr(eq + 1);
  }
  auto catalog = safer::extract_catalog(graph, alias_hints);
  for (const auto& w : graph.warnings()) std::cerr << "warning: " << w << "\n";
  for (const auto& w : catalog.warnings()) std::cerr << "warning: " << w << "\n";
  const std::string doc = catalog.to_json().dump(2) + "\n";
  if (out.empty()) {
    std::cout << doc;
  } else {
    safer::text::write_file(out, doc);
  }
  return 0;
}

safer::PairAnalysis load_findings(const fs::path& path, safer::PairKind kind) {
  json doc = json::parse(safer::text::read_file(path));
  if (doc.value("kind", "") == "joined") {
    const char* key = kind == safer::PairKind::Contradiction ? "contradictions" : "duplicates";
    if (!doc.contains(key)) throw safer::Error(safer::ErrorCode::SchemaViolation, std::string("no ") + key + " in " + path.string());
    return safer::PairAnalysis::from_json(doc[key]);
  }
  return safer::PairAnalysis::from_json(doc);
}

int cmd_score(const std::string& findings, const std::string& gold, const std::string& kind_name, double threshold) {
  auto kind = safer::parse_pair_kind(kind_name);
  if (!kind) throw safer::Error(safer::ErrorCode::InvalidConfig, "unknown pair kind '" + kind_name + "'");
  auto analysis = load_findings(findings, *kind);
  auto g = safer::GoldPairs::load(gold, *kind);
  auto s = safer::score(analysis.findings, g, threshold);
  std::cout << safer::to_string(*kind) << ": " << s.detected_true << "/" << s.gold_total << " = "
            << safer::text::format2(s.rate) << "% (" << s.false_positive << " false positive) "
            << (s.pass ? "PASS" : "FAIL") << " against >" << safer::text::format2(threshold) << "\n";
  return s.pass ? 0 : 1;
}

safer::ClassificationTable load_table(const fs::path& path) {
  if (path.extension() == ".csv") return safer::load_reference_classification(path);
  json doc = json::parse(safer::text::read_file(path));
  if (doc.value("kind", "") == "joined") return safer::ClassificationTable::from_json(doc.at("classification"));
  return safer::ClassificationTable::from_json(doc);
}

int cmd_consistency(const std::vector<std::string>& runs, const std::string& reference, bool strict) {
  std::vector<safer::ClassificationTable> tables;
  for (const auto& r : runs) tables.push_back(load_table(r));
  std::optional<safer::ClassificationTable> ref;
  if (!reference.empty()) ref = load_table(reference);
  double value = safer::consistency(tables, ref ? &*ref : nullptr, strict);
  std::cout << safer::text::format2(value) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety requirements analysis toolchain"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the tasks of a parameters file");
  run_cmd->add_option("--config", run.config, "Parameters file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--task", run.task, "Run only this task");
  run_cmd->add_flag("--force", run.force, "Regenerate outputs even when delta would skip them");
  run_cmd->add_option("--backend", run.backend, "http or mock")->check(CLI::IsMember({"http", "mock"}));
  run_cmd->add_option("--mock-dir", run.mock_dir, "Fixture directory for the mock backend");
  run_cmd->add_option("--endpoint", run.endpoint, "Chat-completions base URL");
  run_cmd->add_option("--api-key-file", run.api_key_file, "File holding the API key");
  run_cmd->add_option("--model", run.model, "Model id");
  run_cmd->add_option("--version-tag", run.version_tag, "Version tag for output file names");
  run_cmd->add_option("--max-in-flight", run.max_in_flight, "Concurrent requests per task")->check(CLI::PositiveNumber);
  run_cmd->add_option("--retries", run.retries, "Retries after a transient failure")->check(CLI::NonNegativeNumber);
  run_cmd->add_flag("--verbose", run.verbose, "Log progress and diagnostics");
  run_cmd->add_flag("--dry-run", run.dry_run, "Build prompts only");

  std::string model, catalog_out;
  std::vector<std::string> hints;
  auto* cat_cmd = app.add_subcommand("catalog", "Extract a function catalog from an OPL or XMI model");
  cat_cmd->add_option("--model", model, "OPL (.opl/.txt) or XMI (.xmi/.xml) file")->required()->check(CLI::ExistingFile);
  cat_cmd->add_option("--hint", hints, "NAME=ALIAS alias override (repeatable)");
  cat_cmd->add_option("--out", catalog_out, "Write the catalog here instead of stdout");

  std::string findings, gold, kind = "Duplicate";
  double threshold = 80.0;
  auto* score_cmd = app.add_subcommand("score", "Score pair findings against a gold list");
  score_cmd->add_option("--findings", findings, "Joined or pair-analysis JSON")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--gold", gold, "Gold pairs CSV")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--kind", kind, "Duplicate or Contradiction");
  score_cmd->add_option("--threshold", threshold, "Pass threshold in percent");

  std::vector<std::string> runs;
  std::string reference;
  bool strict = false;
  auto* cons_cmd = app.add_subcommand("consistency", "Agreement across repeated classification runs");
  cons_cmd->add_option("--runs", runs, "Classification JSON or CSV files")->required()->check(CLI::ExistingFile);
  cons_cmd->add_option("--reference", reference, "Reference classification")->check(CLI::ExistingFile);
  cons_cmd->add_flag("--strict", strict, "Compare function and type");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*cat_cmd) return cmd_catalog(model, hints, catalog_out);
    if (*score_cmd) return cmd_score(findings, gold, kind, threshold);
    if (*cons_cmd) return cmd_consistency(runs, reference, strict);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
