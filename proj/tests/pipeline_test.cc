#include <filesystem>
#include <fstream>
#include <map>

#include <gtest/gtest.h>

#include "echoscope/generator.h"
#include "echoscope/pipeline.h"
#include "echoscope/report.h"

namespace echoscope {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("echoscope_pipeline_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      files[fs::relative(entry.path(), root).string()] = ReadTextFile(entry.path());
    }
  }
  return files;
}

TEST(PipelineConfig, DefaultsAndRoundTrip) {
  const PipelineConfig c;
  EXPECT_EQ(c.runs, 100u);
  EXPECT_EQ(c.fraction, 0.5);
  EXPECT_EQ(c.rmca_threshold, 0.9);
  EXPECT_EQ(c.rwc_k, 100u);
  EXPECT_EQ(c.topics.k, 20u);
  EXPECT_EQ(c.topics.min_df, 10u);
  EXPECT_EQ(c.topics.max_df_ratio, 0.5);
  EXPECT_EQ(c.windows.size(), 6u);

  PipelineConfig custom;
  custom.records = "r.tsv";
  custom.output = "out";
  custom.seed = 9;
  custom.runs = 40;
  custom.topics.k = 7;
  const json doc = PipelineConfigToJson(custom);
  EXPECT_FALSE(doc.contains("output"));
  json with_output = doc;
  with_output["output"] = "elsewhere";
  EXPECT_EQ(PipelineConfigToJson(PipelineConfigFromJson(with_output)), doc);
  EXPECT_EQ(doc.at("ensemble").at("runs"), 40);
}

TEST(PipelineConfig, OverridesAndRejections) {
  json doc = {{"input", {{"records", "a.tsv"}}}, {"output", "out"}};
  ApplyOverride(doc, "ensemble.runs=25");
  ApplyOverride(doc, "ensemble.min_appearances=20");
  ApplyOverride(doc, "input.annotations=labels.tsv");
  ApplyOverride(doc, "rwc.follow_edge_direction=false");
  const auto c = PipelineConfigFromJson(doc);
  EXPECT_EQ(c.runs, 25u);
  EXPECT_EQ(c.annotations, fs::path("labels.tsv"));
  EXPECT_FALSE(c.rwc_follow_edge_direction);
  EXPECT_NO_THROW(ValidatePipelineConfig(c));

  EXPECT_THROW(ApplyOverride(doc, "novalue"), std::invalid_argument);
  json unknown = doc;
  unknown["rwc"]["walks"] = 5;
  EXPECT_THROW(PipelineConfigFromJson(unknown), std::invalid_argument);
  unknown = doc;
  unknown["colour"] = "blue";
  EXPECT_THROW(PipelineConfigFromJson(unknown), std::invalid_argument);

  PipelineConfig bad = c;
  bad.runs = 3;
  EXPECT_THROW(ValidatePipelineConfig(bad), std::invalid_argument);
  bad = c;
  bad.min_appearances = 26;
  EXPECT_THROW(ValidatePipelineConfig(bad), std::invalid_argument);
  bad = c;
  bad.topics.max_df_ratio = 0.0;
  EXPECT_THROW(ValidatePipelineConfig(bad), std::invalid_argument);
}

// The default population over its first two windows.
struct TwoWindowScenario {
  GeneratorSpec spec;
  fs::path corpus;

  explicit TwoWindowScenario(const std::string& name) : corpus(Scratch(name) / "corpus") {
    spec = DefaultGeneratorSpec();
    spec.seed = 17;
    spec.windows.resize(2);
    WriteCorpus(GenerateCorpus(spec), spec, corpus);
  }

  PipelineConfig Config(const fs::path& output) const {
    PipelineConfig c;
    c.records = corpus / "records.tsv";
    c.annotations = corpus / "annotations.tsv";
    c.output = output;
    c.windows = spec.windows;
    c.seed = 4;
    c.runs = 10;
    c.min_appearances = 5;
    c.rwc_k = 10;
    c.rwc_walks = 2000;
    c.topics.k = 6;
    c.topics.min_df = 5;
    c.topics.max_iter = 100;
    return c;
  }
};

TEST(RunPipeline, TwoWindowsEndToEnd) {
  const TwoWindowScenario scenario("small");
  const fs::path root = scenario.corpus.parent_path();
  const auto result = RunPipeline(scenario.Config(root / "a"));
  ASSERT_EQ(result.windows.size(), 2u);
  for (const auto& w : result.windows) {
    ASSERT_TRUE(w.ok) << w.window << ": " << w.error;
    EXPECT_TRUE(w.assignment.has_value());
    EXPECT_TRUE(w.rwc.has_value());
    EXPECT_GE(w.rwc->rwc, 0.9);
    EXPECT_TRUE(w.topics.has_value());
    EXPECT_EQ(w.topics->sets.size(), 3u);
  }
  ASSERT_TRUE(result.flow.has_value());
  EXPECT_EQ(result.flow->transitions.size(), 1u);

  // Every artifact kind for every window, plus the cross-window files.
  const auto manifest = json::parse(ReadTextFile(root / "a" / "manifest.json"));
  for (const auto& w : manifest.at("windows")) {
    const fs::path dir = root / "a" / w.at("directory").get<std::string>();
    for (const char* f :
         {"retweet_graph.tsv", "assignment.tsv", "rmca_histogram.tsv", "stance.tsv", "rwc.tsv",
          "mention_share.tsv", "domains.tsv", "posting_stats.tsv", "topics.tsv",
          "summary.json"}) {
      EXPECT_TRUE(fs::exists(dir / f)) << dir / f;
    }
  }
  for (const char* f : {"config.json", "flow.tsv", "daily_volume.tsv", "ingest.json"}) {
    EXPECT_TRUE(fs::exists(root / "a" / f)) << f;
  }
  // The bundle embeds the resolved config.
  EXPECT_EQ(json::parse(ReadTextFile(root / "a" / "config.json")),
            PipelineConfigToJson(scenario.Config(root / "a")));

  // Same inputs and config, different place and thread count: same bytes.
  PipelineConfig again = scenario.Config(root / "b");
  again.threads = 1;
  again.window_threads = 2;
  RunPipeline(again);
  const auto a = ReadTree(root / "a");
  const auto b = ReadTree(root / "b");
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [file, bytes] : a) {
    if (file == "config.json") continue;  // records the thread settings
    EXPECT_EQ(bytes, b.at(file)) << file;
  }
}

TEST(RunPipeline, EmptyWindowFailsAlone) {
  const TwoWindowScenario scenario("partial");
  const fs::path root = scenario.corpus.parent_path();
  PipelineConfig c = scenario.Config(root / "bundle");
  TimeWindow empty;
  empty.name = "before";
  empty.start = std::chrono::year{1999} / 1 / 1;
  empty.end = std::chrono::year{1999} / 1 / 31;
  c.windows.insert(c.windows.begin(), empty);
  const auto result = RunPipeline(c);
  ASSERT_EQ(result.windows.size(), 3u);
  EXPECT_FALSE(result.windows[0].ok);
  EXPECT_FALSE(result.windows[0].error.empty());
  EXPECT_TRUE(result.windows[1].ok);
  EXPECT_TRUE(result.windows[2].ok);
  EXPECT_FALSE(result.ok());
  const auto manifest = json::parse(ReadTextFile(root / "bundle" / "manifest.json"));
  EXPECT_EQ(manifest.at("windows").at(0).at("status"), "failed");
  EXPECT_EQ(manifest.at("ok"), false);
}

TEST(RunPipeline, UnreadableInputThrows) {
  PipelineConfig c;
  c.records = "/nonexistent/records.tsv";
  c.output = Scratch("missing") / "bundle";
  EXPECT_THROW(RunPipeline(c), std::exception);
}

TEST(PlotData, EmptyBundleGivesEmptyManifest) {
  const fs::path root = Scratch("plots_empty");
  fs::create_directories(root / "bundle");
  const auto manifest = EmitPlotData(root / "bundle", root / "plots");
  EXPECT_TRUE(manifest.tables.empty());
  EXPECT_FALSE(manifest.skipped.empty());
  EXPECT_TRUE(fs::exists(root / "plots" / "manifest.json"));
}

TEST(PlotData, FullBundleGivesSixTablesAndConservesFlow) {
  const TwoWindowScenario scenario("plots");
  const fs::path root = scenario.corpus.parent_path();
  RunPipeline(scenario.Config(root / "bundle"));
  const auto manifest = EmitPlotData(root / "bundle", root / "plots");
  EXPECT_EQ(manifest.tables.size(), 6u);
  EXPECT_TRUE(manifest.skipped.empty());

  // Sankey links carry exactly the nonzero flow cells.
  const TsvTable flow = ReadTsvFile(root / "bundle" / "flow.tsv");
  const TsvTable links = ReadTsvFile(root / "plots" / "flow_links.tsv");
  std::map<std::string, long> cells;
  long flow_total = 0;
  for (const auto& row : flow.rows()) {
    const long count = std::stol(row.at(4));
    flow_total += count;
    if (count > 0) cells[row.at(0) + ":" + row.at(2) + ">" + row.at(1) + ":" + row.at(3)] = count;
  }
  long link_total = 0;
  ASSERT_EQ(links.num_rows(), cells.size());
  for (const auto& row : links.rows()) {
    const long value = std::stol(row.at(2));
    link_total += value;
    EXPECT_EQ(cells.at(row.at(0) + ">" + row.at(1)), value);
  }
  EXPECT_EQ(link_total, flow_total);
}

}  // namespace
}  // namespace echoscope
