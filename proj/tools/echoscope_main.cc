// echoscope: run the analysis, generate synthetic corpora, emit plot tables.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "echoscope/generator.h"
#include "echoscope/pipeline.h"
#include "echoscope/report.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitWindowFailed = 1;
constexpr int kExitError = 2;

struct RunArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string output;
  std::string records;
  std::string annotations;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

int Run(const RunArgs& args) {
  std::vector<std::string> overrides = args.overrides;
  // Dedicated flags are shorthands for --set and win over it.
  if (!args.output.empty()) overrides.push_back("output=" + json(args.output).dump());
  if (!args.records.empty()) overrides.push_back("input.records=" + json(args.records).dump());
  if (!args.annotations.empty()) {
    overrides.push_back("input.annotations=" + json(args.annotations).dump());
  }
  if (args.seed) overrides.push_back("seed=" + std::to_string(*args.seed));
  if (args.threads) overrides.push_back("threads=" + std::to_string(*args.threads));

  const echoscope::PipelineConfig config =
      args.config.empty()
          ? [&] {
              json doc = json::object();
              for (const auto& o : overrides) echoscope::ApplyOverride(doc, o);
              return echoscope::PipelineConfigFromJson(doc);
            }()
          : echoscope::LoadPipelineConfig(args.config, overrides);

  const auto result = echoscope::RunPipeline(config);
  std::cout << "records: " << result.rows << " rows, " << result.malformed << " malformed, "
            << result.outside_windows << " outside every window\n";
  for (const auto& w : result.windows) {
    std::cout << w.window << ": ";
    if (!w.ok) {
      std::cout << "FAILED (" << w.error << ")\n";
      continue;
    }
    std::cout << w.graph_nodes << " nodes, " << w.assignment->assigned_count() << " assigned";
    if (w.rwc) std::cout << ", rwc " << echoscope::FormatDouble(w.rwc->rwc);
    std::cout << "\n";
    for (const auto& note : w.notes) std::cout << "  note: " << note << "\n";
  }
  if (!result.ok()) {
    for (const auto& w : result.windows) {
      if (!w.ok) std::cerr << "window " << w.window << " failed: " << w.error << "\n";
    }
    return kExitWindowFailed;
  }
  std::cout << "bundle written to " << config.output.string() << "\n";
  return 0;
}

struct GenerateArgs {
  std::string spec;
  std::vector<std::string> overrides;
  std::string output;
  std::optional<std::uint64_t> seed;
};

int Generate(const GenerateArgs& args) {
  json doc = args.spec.empty() ? json::object()
                               : json::parse(echoscope::ReadTextFile(args.spec));
  for (const auto& o : args.overrides) echoscope::ApplyOverride(doc, o);
  if (args.seed) doc["seed"] = *args.seed;
  const echoscope::GeneratorSpec spec = echoscope::GeneratorSpecFromJson(doc);
  const auto corpus = echoscope::GenerateCorpus(spec);
  const fs::path dir = args.output;
  echoscope::WriteCorpus(corpus, spec, dir);
  echoscope::WriteTextFile(dir / "generator_spec.json",
                           echoscope::GeneratorSpecToJson(spec).dump(2) + "\n");

  // A ready-to-run pipeline config over the generated files.
  echoscope::PipelineConfig config;
  config.records = fs::absolute(dir / "records.tsv");
  config.annotations = fs::absolute(dir / "annotations.tsv");
  config.output = fs::absolute(dir / "bundle");
  config.windows = spec.windows;
  config.seed = spec.seed;
  json pipeline = echoscope::PipelineConfigToJson(config);
  pipeline["output"] = config.output.string();
  echoscope::WriteTextFile(dir / "pipeline.json", pipeline.dump(2) + "\n");

  std::cout << corpus.records.size() << " records, " << corpus.annotations.size()
            << " annotations, " << corpus.truth.users.size() << " users written to "
            << dir.string() << "\n";
  return 0;
}

int Plots(const std::string& bundle, std::string output) {
  if (output.empty()) output = (fs::path(bundle) / "plots").string();
  const auto manifest = echoscope::EmitPlotData(bundle, output);
  for (const auto& t : manifest.tables) std::cout << "wrote " << t << "\n";
  for (const auto& s : manifest.skipped) std::cout << "skipped " << s << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Endorsement-network polarization and topic analysis"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Analyse a corpus window by window");
  run_cmd->add_option("config", run.config, "Pipeline config (JSON)");
  run_cmd->add_option("--set", run.overrides, "Override a config field: key.path=value")
      ->allow_extra_args(false);
  run_cmd->add_option("-o,--output", run.output, "Bundle directory");
  run_cmd->add_option("--records", run.records, "Record file");
  run_cmd->add_option("--annotations", run.annotations, "Annotation file");
  run_cmd->add_option("--seed", run.seed, "Master seed");
  run_cmd->add_option("--threads", run.threads, "Worker threads per stage (0 = all cores)");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic corpus with ground truth");
  gen_cmd->add_option("spec", gen.spec, "Generator spec (JSON); defaults when omitted");
  gen_cmd->add_option("--set", gen.overrides, "Override a spec field: key.path=value")
      ->allow_extra_args(false);
  gen_cmd->add_option("-o,--output", gen.output, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");

  std::string bundle;
  std::string plots_output;
  auto* plots_cmd = app.add_subcommand("plots", "Turn a bundle into plot-ready tables");
  plots_cmd->add_option("bundle", bundle, "Bundle directory")->required();
  plots_cmd->add_option("-o,--output", plots_output, "Output directory (default bundle/plots)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return Run(run);
    if (*gen_cmd) return Generate(gen);
    if (*plots_cmd) return Plots(bundle, plots_output);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
