#ifndef ECHOSCOPE_PIPELINE_H_
#define ECHOSCOPE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "echoscope/communities.h"
#include "echoscope/ingest.h"
#include "echoscope/network.h"
#include "echoscope/polarization.h"
#include "echoscope/topics.h"

namespace echoscope {

struct PipelineConfig {
  std::filesystem::path records;
  std::optional<RecordFormat> record_format;  // guessed from the extension
  std::filesystem::path annotations;          // empty: no labels
  std::filesystem::path output;
  std::vector<TimeWindow> windows = DefaultWindows();
  std::uint64_t seed = 1;

  // Word lists replacing the built-in ones when set.
  std::filesystem::path stopwords;
  std::filesystem::path query_terms;
  std::filesystem::path extra_words;

  std::size_t runs = 100;
  double fraction = 0.5;
  double rmca_threshold = 0.9;
  std::size_t min_appearances = 30;
  double modularity_increase = 0.10;
  std::size_t max_level = 12;
  double rmca_bin_width = 0.05;

  std::size_t rwc_k = 100;
  std::size_t rwc_walks = 10000;
  bool rwc_follow_edge_direction = true;
  // Lower k to the smaller side when a side has fewer than rwc_k users.
  bool rwc_clamp_k = true;

  TopicOptions topics;
  std::size_t top_domains = 10;
  GraphFormat graph_format = GraphFormat::kEdgeList;

  unsigned threads = 0;         // per stage; 0 = hardware concurrency
  unsigned window_threads = 1;  // windows processed at once; 0 = all
};

// Throws std::invalid_argument on any parameter out of range.
void ValidatePipelineConfig(const PipelineConfig& config);

// Nested object with sections "input", "ensemble", "rwc", "topics" and
// "report"; missing keys keep their defaults. Unknown keys are rejected.
PipelineConfig PipelineConfigFromJson(const nlohmann::json& json);
// Fully resolved config. The output directory is left out so that bundles
// written to different places stay byte-identical.
nlohmann::json PipelineConfigToJson(const PipelineConfig& config);

// Applies "a.b.c=value" to a config object. The value is read as JSON when
// it parses, as a plain string otherwise.
void ApplyOverride(nlohmann::json& json, std::string_view assignment);

// Reads a JSON config and applies overrides in order.
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path,
                                  const std::vector<std::string>& overrides = {});

struct WindowResult {
  std::string window;
  bool ok = false;
  std::string error;  // stage and message when !ok
  std::vector<std::string> notes;

  std::size_t records = 0;
  std::size_t graph_nodes = 0;  // pruned largest component
  std::size_t graph_edges = 0;
  std::optional<EnsembleAssignment> assignment;
  std::vector<CommunityStance> stances;
  SideMap sides;
  std::optional<RwcResult> rwc;
  std::optional<MentionShare> mentions;
  std::optional<DomainRanking> domains;
  std::optional<PostingStats> posting;
  std::optional<TopicReport> topics;
};

struct AnnotatorAgreement {
  std::string annotator_a;
  std::string annotator_b;
  KappaResult kappa;
};

struct PipelineResult {
  std::size_t rows = 0;
  std::size_t malformed = 0;
  std::size_t outside_windows = 0;
  std::vector<AnnotatorAgreement> agreement;
  std::vector<WindowResult> windows;
  std::optional<FlowReport> flow;

  bool ok() const;
};

// Runs every window and the cross-window flow, writing the bundle under
// config.output. Failures inside a window are recorded in that window's
// result and the others proceed. Throws only when the inputs cannot be read
// or the config is invalid.
PipelineResult RunPipeline(const PipelineConfig& config);

struct PlotManifest {
  std::vector<std::string> tables;   // file names written
  std::vector<std::string> skipped;  // "table: reason"
};

// Turns a bundle directory into one plot-ready table per figure, plus
// manifest.json, inside `output`: daily volume, RMCA histogram, flow links,
// rwc by window, mention shares and the topic scatter.
PlotManifest EmitPlotData(const std::filesystem::path& bundle,
                          const std::filesystem::path& output);

}  // namespace echoscope

#endif  // ECHOSCOPE_PIPELINE_H_
