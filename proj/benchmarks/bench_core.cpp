#include "safer/catalog.hpp"
#include "safer/classify.hpp"
#include "safer/coverage.hpp"
#include "safer/opl_parser.hpp"
#include "safer/prompt.hpp"
#include "safer/requirements.hpp"
#include "safer/results_json.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

namespace {

// Synthetic OPL: one system exhibiting n functions, each with a few parts.
std::string make_opl(int functions) {
  std::string s = "Drone is a physical and systemic object.\n";
  std::string exhibits = "Drone exhibits ";
  for (int i = 0; i < functions; ++i) {
    const std::string f = "Function" + std::to_string(i) + " Handling";
    s += f + " is a physical and systemic process.\n";
    s += "Part" + std::to_string(i) + " is a physical and systemic object.\n";
    s += f + " requires Part" + std::to_string(i) + ".\n";
    exhibits += (i ? ", " : "") + f;
  }
  return s + exhibits + ".\n";
}

std::vector<safer::Requirement> make_reqs(int n) {
  std::vector<safer::Requirement> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({std::to_string(1000 + i), "The system shall keep item " + std::to_string(i) + " within limits.", {}});
  }
  return out;
}

void BM_ParseOpl(benchmark::State& state) {
  const std::string text = make_opl(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(safer::parse_opl(text));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseOpl)->Arg(10)->Arg(100);

void BM_Chunk(benchmark::State& state) {
  const auto reqs = make_reqs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(safer::chunk(reqs, 10));
}
BENCHMARK(BM_Chunk)->Arg(110)->Arg(10000);

void BM_BuildMatrix(benchmark::State& state) {
  std::vector<safer::CatalogEntry> entries;
  for (int i = 0; i < 10; ++i) entries.push_back({"F" + std::to_string(i), {"Drone", "Fn" + std::to_string(i)}, "Drone"});
  const safer::FunctionCatalog catalog(entries);
  const auto aliases = catalog.aliases();
  std::mt19937 rng(7);
  std::vector<safer::ClassifiedRequirement> rows(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].req_id = std::to_string(i);
    rows[i].function = aliases[rng() % aliases.size()];
    rows[i].rtype = static_cast<safer::ReqType>(rng() % 3);
  }
  for (auto _ : state) benchmark::DoNotOptimize(safer::build_matrix(rows, catalog));
}
BENCHMARK(BM_BuildMatrix)->Arg(110)->Arg(10000);

void BM_LenientParse(benchmark::State& state) {
  std::vector<safer::Record> records;
  for (int i = 0; i < state.range(0); ++i) {
    records.push_back({{"ReqID", std::to_string(1000 + i)}, {"Function", "NAV"}, {"Type", "FUNC"}, {"Confidence", 90}});
  }
  const std::string reply = "Here you go:\n```json\n" + safer::render_results_json(records) + "\n```\n";
  for (auto _ : state) benchmark::DoNotOptimize(safer::parse_results_json(reply, safer::classification_schema()));
}
BENCHMARK(BM_LenientParse)->Arg(10)->Arg(200);

void BM_AssemblePrompt(benchmark::State& state) {
  const auto reqs = make_reqs(static_cast<int>(state.range(0)));
  const safer::PromptEnvelope env(std::string(safer::default_classification_instructions()),
                                  {{"safety_function_type", safer::safety_function_types()}}, "Safety Requirements",
                                  safer::to_prompt_rows(reqs));
  for (auto _ : state) benchmark::DoNotOptimize(safer::assemble_prompt(env));
}
BENCHMARK(BM_AssemblePrompt)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
