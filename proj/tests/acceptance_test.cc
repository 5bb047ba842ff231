// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails. Runs without gtest so the lines stay readable.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "echoscope/communities.h"
#include "echoscope/generator.h"
#include "echoscope/ingest.h"
#include "echoscope/network.h"
#include "echoscope/pipeline.h"
#include "echoscope/polarization.h"
#include "echoscope/random.h"
#include "echoscope/report.h"
#include "echoscope/topics.h"
#include "test_graphs.h"

namespace echoscope {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a sub-check; the criterion passes only if all of them do.
  void Check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string Fmt(const char* format, double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, format, value);
  return buffer;
}

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// ---------------------------------------------------------------------------

Outcome ModularityOracle() {
  const auto start = Clock::now();
  Outcome out;
  Rng rng(20240601);
  double worst = 0.0;
  std::size_t partitions = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + UniformIndex(rng, 7);  // 2..8 nodes
    std::vector<std::tuple<NodeIndex, NodeIndex, double>> edges;
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (NodeIndex i = 0; i < n; ++i) {
      for (NodeIndex j = i + 1; j < n; ++j) {
        if (UniformUnit(rng) >= 0.5) continue;
        const double w = 1.0 + static_cast<double>(UniformIndex(rng, 5));
        edges.emplace_back(i, j, w);
        a[i][j] = a[j][i] = w;
      }
    }
    if (edges.empty()) {
      edges.emplace_back(0, n - 1, 1.0);
      a[0][n - 1] = a[n - 1][0] = 1.0;
    }
    const UndirectedGraph g(n, edges);
    testing::ForEachSetPartition(n, [&](const std::vector<int>& labels) {
      const double q = Modularity(g, Partition::FromLabels(labels));
      worst = std::max(worst, std::abs(q - testing::DoubleSumModularity(a, labels)));
      ++partitions;
    });
  }
  const double elapsed = Seconds(start);
  out.Check(worst <= 1e-12, "max |Q - oracle| = " + Fmt("%.3g", worst) + " over " +
                                std::to_string(partitions) + " partitions");
  out.Check(elapsed < 10.0, Fmt("%.2f s", elapsed) + " (limit 10 s)");
  return out;
}

// Share of nodes in a community whose planted block is that community's
// most common block.
double NodePurity(const Partition& p, const std::vector<int>& truth) {
  std::map<int, std::map<int, std::size_t>> tally;
  for (std::size_t i = 0; i < truth.size(); ++i) ++tally[p.community[i]][truth[i]];
  std::size_t pure = 0;
  for (const auto& [c, blocks] : tally) {
    std::size_t best = 0;
    for (const auto& [b, count] : blocks) best = std::max(best, count);
    pure += best;
  }
  return static_cast<double>(pure) / static_cast<double>(truth.size());
}

bool SameGrouping(const Partition& p, const std::vector<int>& truth) {
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      if ((p.community[i] == p.community[j]) != (truth[i] == truth[j])) return false;
    }
  }
  return true;
}

Partition Recover(const Digraph& g) {
  const auto u = UndirectedGraph::Symmetrize(g);
  return SelectPartition(ParisCluster(u), u).partition;
}

Outcome ParisRecovery() {
  const auto start = Clock::now();
  Outcome out;
  {
    const Digraph g = testing::BridgedCliques(4);
    const std::vector<int> truth = {0, 0, 0, 0, 1, 1, 1, 1};
    const Partition p = Recover(g);
    out.Check(SameGrouping(p, truth), "bridged 4-cliques purity " + Fmt("%.3f", NodePurity(p, truth)) +
                                          ", " + std::to_string(p.num_communities) + " communities");
  }
  std::size_t exact = 0;
  double min_purity = 1.0;
  std::string misses;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Digraph g = testing::PlantedBlocks(60, 3, 0.3, 0.01, seed);
    std::vector<int> truth(60);
    for (std::size_t i = 0; i < 60; ++i) truth[i] = static_cast<int>(i * 3 / 60);
    const Partition p = Recover(g);
    const double purity = NodePurity(p, truth);
    min_purity = std::min(min_purity, purity);
    if (SameGrouping(p, truth)) {
      ++exact;
    } else {
      misses += (misses.empty() ? "" : ",") + std::to_string(seed);
    }
  }
  const double elapsed = Seconds(start);
  out.Check(exact == 20, "planted 3-block: " + std::to_string(exact) +
                             "/20 seeds exact, min node purity " + Fmt("%.4f", min_purity) +
                             (misses.empty() ? "" : " (missed seeds " + misses + ")"));
  out.Check(elapsed < 5.0, Fmt("%.2f s", elapsed) + " (limit 5 s)");
  return out;
}

// ---------------------------------------------------------------------------
// Shared state for the generator-based criteria.

struct Scenario {
  GeneratorSpec spec = DefaultGeneratorSpec();
  GeneratedCorpus corpus;
  Digraph graph;  // largest component of the pruned full-corpus retweet graph
  std::optional<EnsembleAssignment> assignment;
  double ensemble_seconds = 0.0;
  std::string ensemble_error;
};

Scenario& Shared() {
  static Scenario s = [] {
    Scenario s;
    s.corpus = GenerateCorpus(s.spec);
    s.graph = LargestWcc(PruneWeightOne(BuildRetweetGraph(s.corpus.records)));
    const auto start = Clock::now();
    try {
      EnsembleOptions options;
      options.runs = 100;
      options.fraction = 0.5;
      options.rmca_threshold = 0.9;
      s.assignment = EnsembleAssign(s.graph, options);
    } catch (const std::exception& e) {
      s.ensemble_error = e.what();
    }
    s.ensemble_seconds = Seconds(start);
    return s;
  }();
  return s;
}

Outcome RmcaStability() {
  Outcome out;
  Scenario& s = Shared();
  if (!s.assignment) {
    out.Check(false, "ensemble threw: " + s.ensemble_error);
    return out;
  }
  // Users whose true side never changes.
  std::map<std::string, Side> stable;
  for (const auto& u : s.corpus.truth.users) {
    if (std::all_of(u.side.begin(), u.side.end(), [&](Side x) { return x == u.side.front(); })) {
      stable[u.id] = u.side.front();
    }
  }
  const std::size_t n = s.graph.num_nodes();
  std::size_t assigned = 0;
  std::map<int, std::array<std::size_t, 2>> tally;
  for (NodeIndex v = 0; v < n; ++v) {
    const auto& a = s.assignment->nodes[v];
    if (!a.assigned) continue;
    ++assigned;
    const auto it = stable.find(s.graph.name(v));
    if (it != stable.end()) ++tally[a.community][static_cast<int>(it->second)];
  }
  std::size_t pure = 0;
  std::size_t judged = 0;
  for (const auto& [c, counts] : tally) {
    pure += std::max(counts[0], counts[1]);
    judged += counts[0] + counts[1];
  }
  const double share = static_cast<double>(assigned) / static_cast<double>(n);
  const double purity = judged ? static_cast<double>(pure) / static_cast<double>(judged) : 0.0;
  out.Check(share >= 0.85, "assigned " + std::to_string(assigned) + "/" + std::to_string(n) +
                               " = " + Fmt("%.4f", share) + " (>= 0.85)");
  out.Check(purity >= 0.99, "side purity " + Fmt("%.4f", purity) + " over " +
                                std::to_string(judged) + " stable users (>= 0.99)");
  out.Check(s.ensemble_seconds < 120.0, Fmt("%.1f s", s.ensemble_seconds) + " (limit 120 s)");
  return out;
}

std::string Name(char side, std::size_t i) { return side + std::to_string(1000 + i); }

SideMap SidesByPrefix(const Digraph& g) {
  SideMap sides;
  for (const auto& name : g.names()) sides[name] = name[0] == 's' ? Side::kSupporter : Side::kHesitant;
  return sides;
}

Outcome RwcCases() {
  Outcome out;
  auto start = Clock::now();
  {
    // Two separate cliques, one per side.
    DigraphBuilder b;
    for (char side : {'s', 'h'}) {
      for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
          if (i != j) b.AddEdge(Name(side, i), Name(side, j), 1 + (i + j) % 3);
        }
      }
    }
    const Digraph g = b.Build();
    RwcOptions options;
    options.k = 4;
    options.walks_per_side = 20000;
    const auto r = RandomWalkControversy(g, SidesByPrefix(g), options);
    out.Check(r.rwc == 1.0, "disconnected sides rwc = " + Fmt("%.17g", r.rwc));
  }
  {
    const std::size_t n = 200;
    DigraphBuilder b;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) b.AddEdge(Name(i % 2 ? 'h' : 's', i), Name(j % 2 ? 'h' : 's', j), 1);
      }
    }
    const Digraph g = b.Build();
    RwcOptions options;
    options.k = n / 2;
    options.walks_per_side = 50000;  // 1e5 walks in all
    options.seed = 5;
    const auto r = RandomWalkControversy(g, SidesByPrefix(g), options);
    out.Check(std::abs(r.rwc) <= 0.02, "complete mixed graph rwc = " + Fmt("%.4f", r.rwc) +
                                           " at " + std::to_string(r.walks) + " walks");
  }
  const double analytic_seconds = Seconds(start);

  Scenario& s = Shared();
  if (!s.assignment) {
    out.Check(false, "ensemble threw: " + s.ensemble_error);
    return out;
  }
  start = Clock::now();
  const auto stances =
      PropagateLabels(s.graph, *s.assignment, ResolveAnnotations(s.corpus.annotations));
  const SideMap sides = BuildSideMap(s.graph, *s.assignment, stances);
  std::array<std::size_t, 2> counts{};
  for (const auto& [user, side] : sides) {
    if (side != Side::kUnassigned) ++counts[static_cast<int>(side)];
  }
  RwcOptions options;
  options.k = std::min<std::size_t>(100, std::min(counts[0], counts[1]));
  options.walks_per_side = 10000;
  const auto r = RandomWalkControversy(RestrictToSides(s.graph, sides), sides, options);
  const double elapsed = analytic_seconds + Seconds(start);
  out.Check(r.rwc >= 0.90 && r.rwc <= 1.0,
            "generator rwc = " + Fmt("%.4f", r.rwc) + " (k " + std::to_string(options.k) + ")");
  out.Check(elapsed < 60.0, Fmt("%.1f s", elapsed) + " (limit 60 s)");
  return out;
}

// ---------------------------------------------------------------------------
// Full pipeline runs, shared by the flow and end-to-end criteria.

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      files[fs::relative(entry.path(), root).string()] = ReadTextFile(entry.path());
    }
  }
  return files;
}

struct PipelineRuns {
  fs::path root;
  std::optional<PipelineResult> first;
  double first_seconds = 0.0;
  bool identical = false;
  std::string difference;
  std::string error;
};

PipelineRuns& Runs() {
  static PipelineRuns runs = [] {
    PipelineRuns p;
    Scenario& s = Shared();
    p.root = fs::temp_directory_path() / "echoscope_acceptance";
    fs::remove_all(p.root);
    try {
      WriteCorpus(s.corpus, s.spec, p.root / "corpus");
      PipelineConfig config;
      config.records = p.root / "corpus" / "records.tsv";
      config.annotations = p.root / "corpus" / "annotations.tsv";
      config.windows = s.spec.windows;
      config.output = p.root / "run1";
      auto start = Clock::now();
      p.first = RunPipeline(config);
      p.first_seconds = Seconds(start);
      config.output = p.root / "run2";
      RunPipeline(config);
      const auto a = ReadTree(p.root / "run1");
      const auto b = ReadTree(p.root / "run2");
      p.identical = a == b;
      if (!p.identical) {
        if (a.size() != b.size()) {
          p.difference = std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " files";
        }
        for (const auto& [file, bytes] : a) {
          const auto it = b.find(file);
          if (it == b.end() || it->second != bytes) {
            p.difference = file;
            break;
          }
        }
      }
    } catch (const std::exception& e) {
      p.error = e.what();
    }
    return p;
  }();
  return runs;
}

Outcome FlowBand() {
  Outcome out;
  PipelineRuns& p = Runs();
  if (!p.first || !p.first->flow) {
    out.Check(false, "pipeline produced no flow: " + p.error);
    return out;
  }
  const auto& windows = p.first->windows;
  const auto& transitions = p.first->flow->transitions;
  std::size_t switched = 0;
  std::size_t both = 0;
  bool conserved = transitions.size() + 1 == windows.size();
  auto on_side = [](const SideMap& m, const std::string& u) {
    const auto it = m.find(u);
    return it != m.end() && it->second != Side::kUnassigned;
  };
  for (std::size_t t = 0; t < transitions.size() && conserved; ++t) {
    const auto& tr = transitions[t];
    const SideMap& from = windows[t].sides;
    const SideMap& to = windows[t + 1].sides;
    // Every user on a side in either window lands in exactly one cell, and
    // each row and column adds up to that side's head count.
    std::set<std::string> users;
    std::array<std::size_t, 2> from_count{};
    std::array<std::size_t, 2> to_count{};
    for (const auto& [u, side] : from) {
      if (!on_side(from, u)) continue;
      users.insert(u);
      ++from_count[static_cast<int>(side)];
    }
    for (const auto& [u, side] : to) {
      if (!on_side(to, u)) continue;
      users.insert(u);
      ++to_count[static_cast<int>(side)];
    }
    std::size_t total = 0;
    for (const auto& row : tr.counts) total += std::accumulate(row.begin(), row.end(), std::size_t{0});
    conserved = conserved && total == users.size() && tr.counts[2][2] == 0;
    for (int s = 0; s < 2; ++s) {
      conserved = conserved && tr.counts[s][0] + tr.counts[s][1] + tr.counts[s][2] == from_count[s];
      conserved = conserved && tr.counts[0][s] + tr.counts[1][s] + tr.counts[2][s] == to_count[s];
    }
    conserved = conserved && tr.on_side_in_both == tr.counts[0][0] + tr.counts[0][1] +
                                                       tr.counts[1][0] + tr.counts[1][1];
    switched += tr.counts[0][1] + tr.counts[1][0];
    both += tr.on_side_in_both;
  }
  const double fraction = both ? static_cast<double>(switched) / static_cast<double>(both) : -1.0;
  out.Check(conserved, "cell conservation over " + std::to_string(transitions.size()) + " transitions");
  out.Check(fraction >= 0.007 && fraction <= 0.044,
            "pooled switch fraction " + std::to_string(switched) + "/" + std::to_string(both) +
                " = " + Fmt("%.4f", fraction) + " (band 0.007-0.044)");
  return out;
}

std::vector<std::size_t> Range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out(end - begin);
  std::iota(out.begin(), out.end(), begin);
  return out;
}

Eigen::MatrixXd RandomNonnegative(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = UniformUnit(rng);
  }
  return m;
}

Outcome SideShareProperties() {
  Outcome out;
  Rng rng(66);
  std::size_t exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nh = 1 + UniformIndex(rng, 200);
    const std::size_t ns = 1 + UniformIndex(rng, 200);
    const Eigen::MatrixXd row = RandomNonnegative(rng, 1, 6);
    const Eigen::MatrixXd w = row.replicate(static_cast<Eigen::Index>(nh + ns), 1);
    const auto rho = SideShare(w, Range(0, nh), Range(nh, nh + ns));
    exact += std::all_of(rho.begin(), rho.end(), [](const auto& r) { return r && *r == 0.5; });
  }
  out.Check(exact == 100, std::to_string(exact) + "/100 identical-group configurations give 0.5");

  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd w = RandomNonnegative(rng, 40, 8);
    const auto base = SideShare(w, Range(0, 15), Range(15, 40));
    const double scale = std::exp(20.0 * UniformUnit(rng) - 10.0);
    const auto scaled = SideShare(w * scale, Range(0, 15), Range(15, 40));
    for (std::size_t k = 0; k < base.size(); ++k) worst = std::max(worst, std::abs(*scaled[k] - *base[k]));
  }
  out.Check(worst <= 1e-12, "rescaling moves shares by at most " + Fmt("%.3g", worst));

  // Four hesitant rows summing to 2 against two supporter rows summing to 4.
  Eigen::MatrixXd w(6, 1);
  w << 0.5, 0.5, 0.5, 0.5, 2, 2;
  const auto hand = SideShare(w, Range(0, 4), Range(4, 6));
  out.Check(hand[0] && *hand[0] == 0.2, "hand case " + Fmt("%.17g", hand[0].value_or(-1.0)));
  return out;
}

Outcome HalsProperties() {
  Outcome out;
  std::size_t monotone = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 100);
    const Eigen::MatrixXd x = RandomNonnegative(rng, 50, 35);
    NmfOptions options;
    options.k = 7;
    options.seed = seed;
    options.init = seed % 2 ? NmfInit::kRandom : NmfInit::kSvd;
    options.tol = 0.0;
    options.max_iter = 150;
    const auto r = NmfHals(x, options);
    bool ok = true;
    for (std::size_t i = 1; i < r.objective.size(); ++i) {
      ok = ok && r.objective[i] <= r.objective[i - 1] + 1e-12 * x.squaredNorm();
    }
    monotone += ok;
  }
  out.Check(monotone == 20, std::to_string(monotone) + "/20 seeds with a non-increasing objective");

  Rng rng(4);
  const Eigen::MatrixXd planted = RandomNonnegative(rng, 80, 6) * RandomNonnegative(rng, 6, 50);
  NmfOptions options;
  options.k = 6;
  options.tol = 1e-14;
  options.max_iter = 5000;
  const auto fit = NmfHals(planted, options);
  const double relative = (planted - fit.w * fit.h).squaredNorm() / planted.squaredNorm();
  out.Check(relative <= 1e-8, "planted rank-6 relative objective " + Fmt("%.3g", relative));

  // Projecting the fitted matrix onto its own basis must not move.
  const Eigen::MatrixXd x = RandomNonnegative(rng, 60, 5) * RandomNonnegative(rng, 5, 40) +
                            0.05 * RandomNonnegative(rng, 60, 40);
  NmfOptions project;
  project.k = 5;
  const auto base = NmfHals(x, project);
  const auto p = ProjectOntoBasis(SparseRowMatrix(x.sparseView()), base.h, project);
  const double before = (x - base.w * base.h).squaredNorm();
  const double after = (x - p.w * base.h).squaredNorm();
  out.Check(after <= before * (1.0 + project.tol),
            "projection objective " + Fmt("%.6g", after) + " vs fit " + Fmt("%.6g", before));
  return out;
}

Outcome EndToEnd() {
  Outcome out;
  PipelineRuns& p = Runs();
  if (!p.first) {
    out.Check(false, "pipeline threw: " + p.error);
    return out;
  }
  std::size_t ok_windows = 0;
  for (const auto& w : p.first->windows) ok_windows += w.ok;
  out.Check(ok_windows == p.first->windows.size(),
            std::to_string(ok_windows) + "/" + std::to_string(p.first->windows.size()) + " windows ok");
  out.Check(p.first_seconds < 300.0, Fmt("%.1f s", p.first_seconds) + " (limit 300 s)");
  out.Check(p.identical, p.identical ? "bundles byte-identical" : "bundles differ at " + p.difference);

  // A fitted topic belongs to a planted topic when most of its top terms
  // come from that topic's words. Phrases count through their parts.
  const GroundTruth& truth = Shared().corpus.truth;
  std::map<std::string, std::set<std::string>> words;
  for (const auto& [name, list] : truth.topic_words) words[name] = {list.begin(), list.end()};
  auto planted_side = [&](const std::string& name) -> std::optional<Side> {
    auto has = [&](const std::vector<std::string>& v) { return std::find(v.begin(), v.end(), name) != v.end(); };
    if (has(truth.hesitant_topics)) return Side::kHesitant;
    if (has(truth.supporter_topics)) return Side::kSupporter;
    return std::nullopt;
  };
  double min_hesitant = 2.0;
  double max_supporter = -1.0;
  std::size_t hesitant_matched = 0;
  std::size_t supporter_matched = 0;
  for (const auto& w : p.first->windows) {
    if (!w.topics) continue;
    for (const auto& set : w.topics->sets) {
      if (set.provenance != TopicProvenance::kAll) continue;
      for (const auto& topic : set.topics) {
        std::map<std::string, std::size_t> hits;
        for (const auto& term : topic.top_terms) {
          std::set<std::string> parts{term};
          std::stringstream split(term);
          for (std::string part; std::getline(split, part, '_');) parts.insert(part);
          for (const auto& [name, list] : words) {
            if (std::any_of(parts.begin(), parts.end(), [&](const auto& x) { return list.count(x); })) {
              ++hits[name];
            }
          }
        }
        std::string best;
        std::size_t best_hits = 0;
        for (const auto& [name, h] : hits) {
          if (h > best_hits) best = name, best_hits = h;
        }
        if (2 * best_hits <= topic.top_terms.size() || !topic.side_share) continue;
        const auto side = planted_side(best);
        if (side == Side::kHesitant) {
          ++hesitant_matched;
          min_hesitant = std::min(min_hesitant, *topic.side_share);
        } else if (side == Side::kSupporter) {
          ++supporter_matched;
          max_supporter = std::max(max_supporter, *topic.side_share);
        }
      }
    }
  }
  out.Check(hesitant_matched > 0 && min_hesitant > 0.8,
            std::to_string(hesitant_matched) + " hesitant-planted topics, min share " +
                Fmt("%.3f", min_hesitant));
  out.Check(supporter_matched > 0 && max_supporter < 0.2,
            std::to_string(supporter_matched) + " supporter-planted topics, max share " +
                Fmt("%.3f", max_supporter));
  return out;
}

Outcome KappaCases() {
  Outcome out;
  constexpr Stance kAll[] = {Stance::kSupporter, Stance::kHesitant, Stance::kOther, Stance::kPets};
  std::map<std::string, Stance> a;
  std::map<std::string, Stance> b;
  Rng rng(3);
  for (int i = 0; i < 100; ++i) a["u" + std::to_string(1000 + i)] = kAll[UniformIndex(rng, 4)];
  const double identity = CohenKappa(a, a).kappa;
  out.Check(identity == 1.0, "identity " + Fmt("%.17g", identity));

  // Every pair of categories once: agreement equals its chance level.
  a.clear();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const std::string user = "u" + std::to_string(10 * i + j);
      a[user] = kAll[i];
      b[user] = kAll[j];
    }
  }
  const double chance = CohenKappa(a, b).kappa;
  out.Check(std::abs(chance) <= 1e-12, "chance table " + Fmt("%.3g", chance));

  // 21 items: 6 both S, 1 S/H, 1 H/S, 13 both H. p_o = 19/21,
  // p_e = (7 * 7 + 14 * 14) / 441 = 5/9, kappa = (19/21 - 5/9) / (4/9) = 11/14.
  a.clear();
  b.clear();
  auto add = [&](int count, Stance x, Stance y) {
    for (int i = 0; i < count; ++i) {
      const std::string user = "v" + std::to_string(100 + a.size());
      a[user] = x;
      b[user] = y;
    }
  };
  add(6, Stance::kSupporter, Stance::kSupporter);
  add(1, Stance::kSupporter, Stance::kHesitant);
  add(1, Stance::kHesitant, Stance::kSupporter);
  add(13, Stance::kHesitant, Stance::kHesitant);
  const double hand = CohenKappa(a, b).kappa;
  out.Check(hand == 11.0 / 14.0, "hand table " + Fmt("%.17g", hand) + " vs 11/14");
  return out;
}

}  // namespace
}  // namespace echoscope

int main() {
  using echoscope::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"modularity matches brute-force oracle", echoscope::ModularityOracle},
      {"paris recovers planted blocks", echoscope::ParisRecovery},
      {"ensemble assignment share and purity", echoscope::RmcaStability},
      {"random walk controversy cases", echoscope::RwcCases},
      {"membership flow conservation and switch band", echoscope::FlowBand},
      {"side share properties", echoscope::SideShareProperties},
      {"hals monotone, exact and projectable", echoscope::HalsProperties},
      {"end-to-end pipeline", echoscope::EndToEnd},
      {"cohen kappa cases", echoscope::KappaCases},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome.Check(false, std::string("threw: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%zu] %s (%.1f s): %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), seconds, outcome.detail.c_str());
    std::fflush(stdout);
    failed += !outcome.pass;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
