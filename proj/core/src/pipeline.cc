#include "echoscope/pipeline.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "echoscope/parallel.h"
#include "echoscope/random.h"
#include "echoscope/report.h"

namespace echoscope {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

void CheckKeys(const json& object, std::initializer_list<std::string_view> allowed,
               std::string_view where) {
  if (!object.is_object()) {
    throw std::invalid_argument("config section '" + std::string(where) + "' must be an object");
  }
  for (const auto& item : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw std::invalid_argument("unknown config key '" + std::string(where) +
                                  (where.empty() ? "" : ".") + item.key() + "'");
    }
  }
}

template <typename T>
void Read(const json& object, const char* key, T& field) {
  if (object.contains(key)) field = object.at(key).get<T>();
}

void ReadPath(const json& object, const char* key, fs::path& field) {
  if (object.contains(key)) field = object.at(key).get<std::string>();
}

std::string_view GraphFormatName(GraphFormat format) {
  return format == GraphFormat::kGraphMl ? "graphml" : "edgelist";
}

std::string_view GraphExtension(GraphFormat format) {
  return format == GraphFormat::kGraphMl ? ".graphml" : ".tsv";
}

std::string SafeName(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                      c == '.';
    out += keep ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

std::string WindowDirectory(std::size_t index, const TimeWindow& window) {
  std::string number = std::to_string(index + 1);
  if (number.size() < 2) number.insert(0, "0");
  return "windows/" + number + "_" + SafeName(window.name);
}

// Collects the relative paths written into one bundle.
class BundleWriter {
 public:
  explicit BundleWriter(fs::path root) : root_(std::move(root)) {}

  void Text(const std::string& relative, std::string_view contents) {
    WriteTextFile(root_ / relative, contents);
    Record(relative);
  }
  void Table(const std::string& relative, const TsvTable& table) {
    table.WriteFile(root_ / relative);
    Record(relative);
  }
  void Json(const std::string& relative, const json& value) {
    Text(relative, value.dump(2) + "\n");
  }
  void Graph(const std::string& relative, const Digraph& graph, GraphFormat format) {
    fs::create_directories((root_ / relative).parent_path());
    ExportGraph(graph, root_ / relative, format);
    Record(relative);
  }
  std::vector<std::string> files() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return {files_.begin(), files_.end()};
  }

 private:
  void Record(const std::string& relative) {
    std::lock_guard<std::mutex> lock(mutex_);
    files_.insert(relative);
  }

  fs::path root_;
  mutable std::mutex mutex_;
  std::set<std::string> files_;
};

Lexicons BuildLexicons(const PipelineConfig& config) {
  Lexicons lexicons = DefaultLexicons();
  if (!config.stopwords.empty()) lexicons.stopwords = LoadWordList(config.stopwords);
  if (!config.query_terms.empty()) lexicons.query_terms = LoadWordList(config.query_terms);
  if (!config.extra_words.empty()) lexicons.extra_words = LoadWordList(config.extra_words);
  return lexicons;
}

TsvTable AssignmentTable(const Digraph& graph, const EnsembleAssignment& assignment,
                         std::span<const CommunityStance> stances) {
  TsvTable table({"user_id", "community", "stance", "rmca", "appearances", "assigned"});
  for (NodeIndex v = 0; v < graph.num_nodes(); ++v) {
    const auto& node = assignment.nodes[v];
    std::string stance = "NA";
    if (node.assigned && node.community >= 0 &&
        static_cast<std::size_t>(node.community) < stances.size()) {
      stance = std::string(StanceName(stances[node.community].stance));
    }
    table.AddRow({graph.name(v), node.community < 0 ? "NA" : std::to_string(node.community),
                  stance, FormatDouble(node.rmca), std::to_string(node.appearances),
                  node.assigned ? "1" : "0"});
  }
  return table;
}

TsvTable CommunityTable(const EnsembleAssignment& assignment,
                        std::span<const CommunityStance> stances) {
  std::vector<std::size_t> size(stances.size(), 0);
  std::vector<std::size_t> assigned(stances.size(), 0);
  for (NodeIndex v = 0; v < assignment.reference.community.size(); ++v) {
    ++size[assignment.reference.community[v]];
    const auto& node = assignment.nodes[v];
    if (node.assigned && node.community >= 0 &&
        static_cast<std::size_t>(node.community) < stances.size()) {
      ++assigned[node.community];
    }
  }
  TsvTable table({"community", "reference_size", "assigned", "stance", "annotated", "purity",
                  "supporter", "hesitant", "other", "pets"});
  for (std::size_t c = 0; c < stances.size(); ++c) {
    const auto& s = stances[c];
    auto count = [&](Stance label) {
      const auto it = s.label_counts.find(label);
      return std::to_string(it == s.label_counts.end() ? 0 : it->second);
    };
    table.AddRow({std::to_string(c), std::to_string(size[c]), std::to_string(assigned[c]),
                  std::string(StanceName(s.stance)), std::to_string(s.annotated),
                  FormatOptional(s.purity), count(Stance::kSupporter), count(Stance::kHesitant),
                  count(Stance::kOther), count(Stance::kPets)});
  }
  return table;
}

TsvTable RwcTable(const RwcResult& r) {
  TsvTable table({"k", "walks", "restarts", "rwc", "rwc_stderr", "p_S_given_S", "p_H_given_S",
                  "p_S_given_H", "p_H_given_H", "stderr_S_given_S", "stderr_H_given_S",
                  "stderr_S_given_H", "stderr_H_given_H", "walks_S_to_S", "walks_S_to_H",
                  "walks_H_to_S", "walks_H_to_H"});
  const auto& p = r.p_start_given_end;
  const auto& e = r.p_start_given_end_stderr;
  const auto& n = r.walks_by_start_end;
  table.AddRow({std::to_string(r.k), std::to_string(r.walks), std::to_string(r.restarts),
                FormatDouble(r.rwc), FormatDouble(r.rwc_stderr), FormatDouble(p[0][0]),
                FormatDouble(p[1][0]), FormatDouble(p[0][1]), FormatDouble(p[1][1]),
                FormatDouble(e[0][0]), FormatDouble(e[1][0]), FormatDouble(e[0][1]),
                FormatDouble(e[1][1]), std::to_string(n[0][0]), std::to_string(n[0][1]),
                std::to_string(n[1][0]), std::to_string(n[1][1])});
  return table;
}

TsvTable PostingTable(const PostingStats& stats) {
  TsvTable table({"stance", "users", "posts", "mean_posts_per_user", "median_posts_per_user",
                  "mean_posts_per_user_per_day", "median_posts_per_user_per_day",
                  "mean_span_days", "median_span_days"});
  for (const auto& [stance, group] : stats.groups) {
    if (!group) {
      table.AddRow({std::string(StanceName(stance)), "0", "0", "NA", "NA", "NA", "NA", "NA",
                    "NA"});
      continue;
    }
    table.AddRow({std::string(StanceName(stance)), std::to_string(group->users),
                  std::to_string(group->posts), FormatDouble(group->mean_posts_per_user),
                  FormatDouble(group->median_posts_per_user),
                  FormatDouble(group->mean_posts_per_user_per_day),
                  FormatDouble(group->median_posts_per_user_per_day),
                  FormatDouble(group->mean_span_days), FormatDouble(group->median_span_days)});
  }
  return table;
}

TsvTable TopicTable(const TopicReport& report) {
  TsvTable table({"provenance", "topic", "importance", "side_share", "top_terms"});
  for (const auto& set : report.sets) {
    for (const auto& t : set.topics) {
      std::string terms;
      for (const auto& term : t.top_terms) {
        if (!terms.empty()) terms += ' ';
        terms += term;
      }
      table.AddRow({std::string(TopicProvenanceName(set.provenance)), std::to_string(t.topic),
                    FormatDouble(t.importance), FormatOptional(t.side_share), terms});
    }
  }
  return table;
}

json OptionalJson(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

WindowResult ProcessWindow(const PipelineConfig& config, const TimeWindow& window,
                           std::uint64_t window_seed_base,
                           std::span<const InteractionRecord> records,
                           const std::map<std::string, Stance>& annotations,
                           const Lexicons& lexicons, const std::string& dir,
                           BundleWriter& bundle) {
  WindowResult result;
  result.window = window.name;
  result.records = records.size();
  json summary = {{"window", window.name},
                  {"start", FormatIsoDate(window.start)},
                  {"end", FormatIsoDate(window.end)},
                  {"records", records.size()}};
  std::string stage = "network";
  try {
    const Digraph graph = LargestWcc(PruneWeightOne(BuildRetweetGraph(records)));
    const Digraph mentions = BuildMentionGraph(records);
    result.graph_nodes = graph.num_nodes();
    result.graph_edges = graph.num_edges();
    summary["retweet_graph"] = {{"nodes", graph.num_nodes()},
                                {"edges", graph.num_edges()},
                                {"total_weight", graph.total_weight()}};
    summary["mention_graph"] = {{"nodes", mentions.num_nodes()},
                                {"edges", mentions.num_edges()}};
    const auto ext = std::string(GraphExtension(config.graph_format));
    bundle.Graph(dir + "/retweet_graph" + ext, graph, config.graph_format);
    bundle.Graph(dir + "/mention_graph" + ext, mentions, config.graph_format);
    if (graph.empty()) throw std::runtime_error("no retweet edge of weight >= 2");

    stage = "communities";
    EnsembleOptions ensemble;
    ensemble.runs = config.runs;
    ensemble.fraction = config.fraction;
    ensemble.rmca_threshold = config.rmca_threshold;
    ensemble.min_appearances = config.min_appearances;
    ensemble.increase = config.modularity_increase;
    ensemble.k_max = config.max_level;
    ensemble.seed = DeriveSeed(window_seed_base, "ensemble");
    ensemble.threads = config.threads;
    result.assignment = EnsembleAssign(graph, ensemble);
    const auto& assignment = *result.assignment;
    result.stances = PropagateLabels(graph, assignment, annotations);
    result.sides = BuildSideMap(graph, assignment, result.stances);
    bundle.Table(dir + "/assignment.tsv", AssignmentTable(graph, assignment, result.stances));
    bundle.Table(dir + "/communities.tsv", CommunityTable(assignment, result.stances));
    TsvTable histogram({"lower", "upper", "count"});
    for (const auto& bin : RmcaDistribution(assignment, config.rmca_bin_width)) {
      histogram.AddRow({FormatDouble(bin.lower), FormatDouble(bin.upper),
                        std::to_string(bin.count)});
    }
    bundle.Table(dir + "/rmca_histogram.tsv", histogram);
    TsvTable stance_table({"user_id", "side"});
    std::array<std::size_t, 3> side_counts{};
    for (const auto& [user, side] : result.sides) {
      stance_table.AddRow({user, std::string(SideName(side))});
      ++side_counts[static_cast<int>(side)];
    }
    bundle.Table(dir + "/stance.tsv", stance_table);
    summary["communities"] = {{"reference_communities", assignment.reference.num_communities},
                              {"assigned", assignment.assigned_count()},
                              {"assigned_fraction", static_cast<double>(assignment.assigned_count()) /
                                                        static_cast<double>(graph.num_nodes())},
                              {"supporter_users", side_counts[0]},
                              {"hesitant_users", side_counts[1]},
                              {"unassigned_users", side_counts[2]}};

    stage = "posting";
    std::map<std::string, Stance> labels;
    for (NodeIndex v = 0; v < graph.num_nodes(); ++v) {
      const auto& node = assignment.nodes[v];
      if (!node.assigned || node.community < 0 ||
          static_cast<std::size_t>(node.community) >= result.stances.size()) {
        continue;
      }
      labels[graph.name(v)] = result.stances[node.community].stance;
    }
    result.posting = ComputePostingStats(records, labels, window);
    bundle.Table(dir + "/posting_stats.tsv", PostingTable(*result.posting));

    stage = "mentions";
    result.mentions = ComputeMentionShare(mentions, result.sides);
    TsvTable mention_table({"from", "to", "weight", "share"});
    for (int from = 0; from < 2; ++from) {
      for (int to = 0; to < 2; ++to) {
        const auto& row = result.mentions->rows[from];
        mention_table.AddRow({std::string(SideName(static_cast<Side>(from))),
                              std::string(SideName(static_cast<Side>(to))),
                              std::to_string(result.mentions->weights[from][to]),
                              row ? FormatDouble((*row)[to]) : "NA"});
      }
    }
    bundle.Table(dir + "/mention_share.tsv", mention_table);

    stage = "domains";
    result.domains = RankDomains(records, result.sides, config.top_domains);
    TsvTable domain_table({"side", "rank", "domain", "count", "share"});
    for (int s = 0; s < 2; ++s) {
      const auto& top = result.domains->top[s];
      for (std::size_t i = 0; i < top.size(); ++i) {
        const double share = static_cast<double>(top[i].count) /
                             static_cast<double>(result.domains->counted[s]);
        domain_table.AddRow({std::string(SideName(static_cast<Side>(s))), std::to_string(i + 1),
                             top[i].domain, std::to_string(top[i].count), FormatDouble(share)});
      }
    }
    bundle.Table(dir + "/domains.tsv", domain_table);
    summary["domains"] = {{"total_urls", result.domains->total_urls},
                          {"skipped", result.domains->skipped},
                          {"counted_supporter", result.domains->counted[0]},
                          {"counted_hesitant", result.domains->counted[1]}};

    stage = "rwc";
    const Digraph polar = RestrictToSides(graph, result.sides);
    RwcOptions rwc;
    rwc.k = config.rwc_k;
    if (config.rwc_clamp_k) {
      const std::size_t smaller = std::min(side_counts[0], side_counts[1]);
      if (smaller < rwc.k) {
        rwc.k = smaller;
        result.notes.push_back("rwc k lowered to " + std::to_string(smaller) +
                               " (smaller side size)");
      }
    }
    rwc.walks_per_side = config.rwc_walks;
    rwc.follow_edge_direction = config.rwc_follow_edge_direction;
    rwc.seed = DeriveSeed(window_seed_base, "rwc");
    rwc.threads = config.threads;
    result.rwc = RandomWalkControversy(polar, result.sides, rwc);
    bundle.Table(dir + "/rwc.tsv", RwcTable(*result.rwc));
    TsvTable authorities({"side", "rank", "user_id"});
    for (int s = 0; s < 2; ++s) {
      const auto& list = result.rwc->authorities[s];
      for (std::size_t i = 0; i < list.size(); ++i) {
        authorities.AddRow({std::string(SideName(static_cast<Side>(s))), std::to_string(i + 1),
                            list[i]});
      }
    }
    bundle.Table(dir + "/rwc_authorities.tsv", authorities);
    summary["rwc"] = {{"k", result.rwc->k},
                      {"rwc", result.rwc->rwc},
                      {"rwc_stderr", result.rwc->rwc_stderr}};

    stage = "topics";
    TopicOptions topics = config.topics;
    topics.threads = config.threads;
    result.topics = AnalyzeTopics(records, result.sides, lexicons, topics,
                                  DeriveSeed(window_seed_base, "topics"));
    bundle.Table(dir + "/topics.tsv", TopicTable(*result.topics));
    json sets = json::array();
    for (const auto& set : result.topics->sets) {
      sets.push_back({{"provenance", TopicProvenanceName(set.provenance)},
                      {"iterations", set.iterations},
                      {"converged", set.converged}});
    }
    summary["topics"] = {{"documents", result.topics->documents},
                         {"empty_documents", result.topics->empty_documents},
                         {"hesitant_documents", result.topics->hesitant_documents},
                         {"supporter_documents", result.topics->supporter_documents},
                         {"vocabulary_size", result.topics->vocabulary_size},
                         {"fits", sets}};
    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = stage + ": " + e.what();
  }
  summary["status"] = result.ok ? "ok" : "failed";
  if (!result.ok) summary["error"] = result.error;
  summary["notes"] = result.notes;
  try {
    bundle.Json(dir + "/summary.json", summary);
  } catch (const std::exception& e) {
    if (result.ok) {
      result.ok = false;
      result.error = std::string("report: ") + e.what();
    }
  }
  return result;
}

void WriteFlow(const FlowReport& flow, BundleWriter& bundle) {
  static constexpr std::array<std::string_view, 3> kStates{"S", "H", "absent"};
  TsvTable cells({"from_window", "to_window", "from_side", "to_side", "count"});
  TsvTable transitions({"from_window", "to_window", "on_side_in_both", "switched",
                        "switch_fraction"});
  json doc = {{"transitions", json::array()}, {"retention", json::array()}};
  for (const auto& t : flow.transitions) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        cells.AddRow({t.from_window, t.to_window, std::string(kStates[a]),
                      std::string(kStates[b]), std::to_string(t.counts[a][b])});
      }
    }
    const std::size_t switched = t.counts[0][1] + t.counts[1][0];
    transitions.AddRow({t.from_window, t.to_window, std::to_string(t.on_side_in_both),
                        std::to_string(switched), FormatOptional(t.switch_fraction)});
    doc["transitions"].push_back({{"from_window", t.from_window},
                                  {"to_window", t.to_window},
                                  {"counts", t.counts},
                                  {"on_side_in_both", t.on_side_in_both},
                                  {"switched", switched},
                                  {"switch_fraction", OptionalJson(t.switch_fraction)}});
  }
  TsvTable retention({"side", "early_users", "retained", "fraction"});
  for (const auto& r : flow.retention) {
    retention.AddRow({std::string(SideName(r.side)), std::to_string(r.early_users),
                      std::to_string(r.retained), FormatOptional(r.fraction)});
    doc["retention"].push_back({{"side", SideName(r.side)},
                                {"early_users", r.early_users},
                                {"retained", r.retained},
                                {"fraction", OptionalJson(r.fraction)}});
  }
  bundle.Table("flow.tsv", cells);
  bundle.Table("flow_transitions.tsv", transitions);
  bundle.Table("retention.tsv", retention);
  bundle.Json("flow.json", doc);
}

}  // namespace

bool PipelineResult::ok() const {
  return std::all_of(windows.begin(), windows.end(), [](const auto& w) { return w.ok; });
}

void ValidatePipelineConfig(const PipelineConfig& c) {
  auto require = [](bool condition, const char* message) {
    if (!condition) throw std::invalid_argument(message);
  };
  require(!c.records.empty(), "input.records is required");
  require(!c.output.empty(), "output is required");
  require(!c.windows.empty(), "at least one window is required");
  ValidateWindows(c.windows);
  require(c.runs >= 10, "ensemble.runs must be >= 10");
  require(c.fraction > 0.0 && c.fraction <= 1.0, "ensemble.fraction must lie in (0, 1]");
  require(c.rmca_threshold >= 0.0 && c.rmca_threshold <= 1.0,
          "ensemble.rmca_threshold must lie in [0, 1]");
  require(c.min_appearances >= 1 && c.min_appearances <= c.runs,
          "ensemble.min_appearances must lie in [1, runs]");
  require(c.modularity_increase >= 0.0, "ensemble.modularity_increase must be >= 0");
  require(c.max_level >= 2, "ensemble.max_level must be >= 2");
  require(c.rmca_bin_width > 0.0 && c.rmca_bin_width <= 1.0,
          "ensemble.rmca_bin_width must lie in (0, 1]");
  require(c.rwc_k >= 1, "rwc.k must be >= 1");
  require(c.rwc_walks >= 1, "rwc.walks_per_side must be >= 1");
  require(c.topics.k >= 1, "topics.k must be >= 1");
  require(c.topics.min_df >= 1, "topics.min_df must be >= 1");
  require(c.topics.max_df_ratio > 0.0 && c.topics.max_df_ratio <= 1.0,
          "topics.max_df_ratio must lie in (0, 1]");
  require(c.topics.phrase_delta >= 0.0, "topics.phrase_delta must be >= 0");
  require(c.topics.phrase_threshold > 0.0, "topics.phrase_threshold must be > 0");
  require(c.topics.max_iter >= 1, "topics.max_iter must be >= 1");
  require(c.topics.tol > 0.0, "topics.tol must be > 0");
  require(c.topics.top_terms >= 1, "topics.top_terms must be >= 1");
  require(c.top_domains >= 1, "report.top_domains must be >= 1");
}

PipelineConfig PipelineConfigFromJson(const json& doc) {
  CheckKeys(doc,
            {"input", "output", "windows", "seed", "ensemble", "rwc", "topics", "report",
             "threads", "window_threads"},
            "");
  PipelineConfig c;
  if (doc.contains("input")) {
    const json& in = doc.at("input");
    CheckKeys(in, {"records", "format", "annotations", "stopwords", "query_terms", "extra_words"},
              "input");
    ReadPath(in, "records", c.records);
    if (in.contains("format") && !in.at("format").is_null()) {
      c.record_format = ParseRecordFormat(in.at("format").get<std::string>());
    }
    ReadPath(in, "annotations", c.annotations);
    ReadPath(in, "stopwords", c.stopwords);
    ReadPath(in, "query_terms", c.query_terms);
    ReadPath(in, "extra_words", c.extra_words);
  }
  ReadPath(doc, "output", c.output);
  if (doc.contains("windows")) c.windows = WindowsFromJson(doc.at("windows"));
  Read(doc, "seed", c.seed);
  Read(doc, "threads", c.threads);
  Read(doc, "window_threads", c.window_threads);
  if (doc.contains("ensemble")) {
    const json& e = doc.at("ensemble");
    CheckKeys(e,
              {"runs", "fraction", "rmca_threshold", "min_appearances", "modularity_increase",
               "max_level", "rmca_bin_width"},
              "ensemble");
    Read(e, "runs", c.runs);
    Read(e, "fraction", c.fraction);
    Read(e, "rmca_threshold", c.rmca_threshold);
    Read(e, "min_appearances", c.min_appearances);
    Read(e, "modularity_increase", c.modularity_increase);
    Read(e, "max_level", c.max_level);
    Read(e, "rmca_bin_width", c.rmca_bin_width);
  }
  if (doc.contains("rwc")) {
    const json& r = doc.at("rwc");
    CheckKeys(r, {"k", "walks_per_side", "follow_edge_direction", "clamp_k"}, "rwc");
    Read(r, "k", c.rwc_k);
    Read(r, "walks_per_side", c.rwc_walks);
    Read(r, "follow_edge_direction", c.rwc_follow_edge_direction);
    Read(r, "clamp_k", c.rwc_clamp_k);
  }
  if (doc.contains("topics")) {
    const json& t = doc.at("topics");
    CheckKeys(t,
              {"k", "min_df", "max_df_ratio", "phrase_delta", "phrase_threshold", "phrase_passes",
               "max_iter", "tol", "top_terms"},
              "topics");
    Read(t, "k", c.topics.k);
    Read(t, "min_df", c.topics.min_df);
    Read(t, "max_df_ratio", c.topics.max_df_ratio);
    Read(t, "phrase_delta", c.topics.phrase_delta);
    Read(t, "phrase_threshold", c.topics.phrase_threshold);
    Read(t, "phrase_passes", c.topics.phrase_passes);
    Read(t, "max_iter", c.topics.max_iter);
    Read(t, "tol", c.topics.tol);
    Read(t, "top_terms", c.topics.top_terms);
  }
  if (doc.contains("report")) {
    const json& r = doc.at("report");
    CheckKeys(r, {"top_domains", "graph_format"}, "report");
    Read(r, "top_domains", c.top_domains);
    if (r.contains("graph_format")) {
      c.graph_format = ParseGraphFormat(r.at("graph_format").get<std::string>());
    }
  }
  ValidatePipelineConfig(c);
  return c;
}

json PipelineConfigToJson(const PipelineConfig& c) {
  return {
      {"input",
       {{"records", c.records.string()},
        {"format", c.record_format ? json(RecordFormatName(*c.record_format)) : json(nullptr)},
        {"annotations", c.annotations.string()},
        {"stopwords", c.stopwords.string()},
        {"query_terms", c.query_terms.string()},
        {"extra_words", c.extra_words.string()}}},
      {"windows", WindowsToJson(c.windows)},
      {"seed", c.seed},
      {"threads", c.threads},
      {"window_threads", c.window_threads},
      {"ensemble",
       {{"runs", c.runs},
        {"fraction", c.fraction},
        {"rmca_threshold", c.rmca_threshold},
        {"min_appearances", c.min_appearances},
        {"modularity_increase", c.modularity_increase},
        {"max_level", c.max_level},
        {"rmca_bin_width", c.rmca_bin_width}}},
      {"rwc",
       {{"k", c.rwc_k},
        {"walks_per_side", c.rwc_walks},
        {"follow_edge_direction", c.rwc_follow_edge_direction},
        {"clamp_k", c.rwc_clamp_k}}},
      {"topics",
       {{"k", c.topics.k},
        {"min_df", c.topics.min_df},
        {"max_df_ratio", c.topics.max_df_ratio},
        {"phrase_delta", c.topics.phrase_delta},
        {"phrase_threshold", c.topics.phrase_threshold},
        {"phrase_passes", c.topics.phrase_passes},
        {"max_iter", c.topics.max_iter},
        {"tol", c.topics.tol},
        {"top_terms", c.topics.top_terms}}},
      {"report",
       {{"top_domains", c.top_domains}, {"graph_format", GraphFormatName(c.graph_format)}}},
  };
}

void ApplyOverride(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw std::invalid_argument("override must look like key=value: " + std::string(assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw std::invalid_argument("empty key segment in " + key);
    if (!node->is_object()) {
      if (!node->is_null()) throw std::invalid_argument(key + " does not name a config section");
      *node = json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

PipelineConfig LoadPipelineConfig(const fs::path& path, const std::vector<std::string>& overrides) {
  json doc = json::parse(ReadTextFile(path));
  for (const auto& o : overrides) ApplyOverride(doc, o);
  return PipelineConfigFromJson(doc);
}

PipelineResult RunPipeline(const PipelineConfig& config) {
  ValidatePipelineConfig(config);
  PipelineResult result;
  const RecordFormat format = config.record_format.value_or(GuessRecordFormat(config.records));
  LoadResult loaded = LoadRecords(config.records, format);
  result.rows = loaded.rows;
  result.malformed = loaded.malformed;
  std::vector<StanceLabel> labels;
  if (!config.annotations.empty()) labels = LoadAnnotations(config.annotations);
  const auto annotations = ResolveAnnotations(labels);
  const Lexicons lexicons = BuildLexicons(config);
  const Segmentation segments = Segment(loaded.records, config.windows);
  result.outside_windows = segments.dropped;

  fs::create_directories(config.output);
  BundleWriter bundle(config.output);
  bundle.Json("config.json", PipelineConfigToJson(config));

  // Annotation agreement, per pair of annotators over their common users.
  const auto by_annotator = LabelsByAnnotator(labels);
  TsvTable kappa({"annotator_a", "annotator_b", "items", "observed_agreement",
                  "expected_agreement", "kappa"});
  for (auto a = by_annotator.begin(); a != by_annotator.end(); ++a) {
    for (auto b = std::next(a); b != by_annotator.end(); ++b) {
      std::map<std::string, Stance> left;
      std::map<std::string, Stance> right;
      for (const auto& [user, label] : a->second) {
        const auto it = b->second.find(user);
        if (it == b->second.end()) continue;
        left[user] = label;
        right[user] = it->second;
      }
      if (left.empty()) continue;
      const KappaResult k = CohenKappa(left, right);
      result.agreement.push_back({a->first, b->first, k});
      kappa.AddRow({a->first, b->first, std::to_string(k.items),
                    FormatDouble(k.observed_agreement), FormatDouble(k.expected_agreement),
                    FormatDouble(k.kappa)});
    }
  }
  bundle.Table("annotation_agreement.tsv", kappa);

  // Daily volume over everything that was loaded.
  std::map<Timestamp, std::array<std::size_t, 2>> daily;
  for (const auto& r : loaded.records) {
    ++daily[r.timestamp - ((r.timestamp % kSecondsPerDay) + kSecondsPerDay) % kSecondsPerDay]
           [r.is_retweet() ? 1 : 0];
  }
  TsvTable volume({"date", "posts", "originals", "retweets", "window"});
  for (const auto& [day, counts] : daily) {
    std::string window;
    for (const auto& w : config.windows) {
      if (w.Contains(day)) window = w.name;
    }
    volume.AddRow({FormatIsoDate(DateOf(day)), std::to_string(counts[0] + counts[1]),
                   std::to_string(counts[0]), std::to_string(counts[1]), window});
  }
  bundle.Table("daily_volume.tsv", volume);

  const std::size_t n = config.windows.size();
  result.windows.resize(n);
  std::vector<std::string> dirs(n);
  for (std::size_t w = 0; w < n; ++w) dirs[w] = WindowDirectory(w, config.windows[w]);
  const unsigned window_threads =
      config.window_threads == 0 ? static_cast<unsigned>(n) : config.window_threads;
  ParallelFor(n, window_threads, [&](std::size_t w) {
    const auto& window = config.windows[w];
    result.windows[w] =
        ProcessWindow(config, window, DeriveSeed(config.seed, "window/" + window.name),
                      segments.per_window[w], annotations, lexicons, dirs[w], bundle);
  });

  json ingest = {{"records_file", config.records.string()},
                 {"format", RecordFormatName(format)},
                 {"rows", loaded.rows},
                 {"records", loaded.records.size()},
                 {"malformed", loaded.malformed},
                 {"malformed_examples", loaded.diagnostics},
                 {"outside_windows", segments.dropped},
                 {"annotation_rows", labels.size()},
                 {"annotated_users", annotations.size()}};
  bundle.Json("ingest.json", ingest);

  json notes = json::array();
  if (n >= 2) {
    std::vector<std::string> names;
    std::vector<SideMap> maps;
    for (const auto& w : result.windows) {
      names.push_back(w.window);
      maps.push_back(w.sides);
    }
    result.flow = MembershipFlow(names, maps);
    WriteFlow(*result.flow, bundle);
  } else {
    notes.push_back("flow needs at least two windows");
  }

  json windows = json::array();
  for (std::size_t w = 0; w < n; ++w) {
    const auto& r = result.windows[w];
    json entry = {{"name", r.window},
                  {"directory", dirs[w]},
                  {"status", r.ok ? "ok" : "failed"},
                  {"notes", r.notes}};
    if (!r.ok) entry["error"] = r.error;
    windows.push_back(entry);
  }
  auto files = bundle.files();
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  bundle.Json("manifest.json", {{"ok", result.ok()},
                                {"windows", windows},
                                {"notes", notes},
                                {"files", files}});
  return result;
}

}  // namespace echoscope
