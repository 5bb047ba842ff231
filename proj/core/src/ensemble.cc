#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "echoscope/communities.h"
#include "echoscope/parallel.h"

namespace echoscope {
namespace {

struct RunResult {
  std::vector<std::pair<NodeIndex, int>> labels;  // reference node, aligned label
};

RunResult RunOnce(const Digraph& graph, const Partition& reference,
                  const EnsembleOptions& options, std::size_t run) {
  RunResult result;
  const Digraph sampled =
      options.fraction >= 1.0 ? graph
                              : SampleEdges(graph, options.fraction, options.seed ^ run);
  const Digraph component = LargestWcc(sampled);
  if (component.num_nodes() < 2) return result;

  const UndirectedGraph undirected = UndirectedGraph::Symmetrize(component);
  const PartitionSelection selection = SelectPartition(
      ParisCluster(undirected), undirected, options.increase, options.k_max);

  std::vector<std::vector<NodeIndex>> members(
      static_cast<std::size_t>(selection.partition.num_communities));
  std::vector<NodeIndex> to_reference(component.num_nodes());
  for (NodeIndex v = 0; v < component.num_nodes(); ++v) {
    to_reference[v] = *graph.Find(component.name(v));
    members[selection.partition.community[v]].push_back(to_reference[v]);
  }
  const std::vector<int> mapping =
      AlignToReference(members, reference, reference.num_communities);
  result.labels.reserve(component.num_nodes());
  for (NodeIndex v = 0; v < component.num_nodes(); ++v) {
    result.labels.emplace_back(to_reference[v], mapping[selection.partition.community[v]]);
  }
  return result;
}

}  // namespace

std::size_t EnsembleAssignment::assigned_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const NodeAssignment& a) { return a.assigned; }));
}

std::vector<int> AlignToReference(const std::vector<std::vector<NodeIndex>>& run_members,
                                  const Partition& reference, int unmatched) {
  const auto k_ref = static_cast<std::size_t>(reference.num_communities);
  std::vector<std::size_t> ref_size(k_ref, 0);
  for (int c : reference.community) ++ref_size[static_cast<std::size_t>(c)];

  // (jaccard, smallest member, reference id, run community)
  std::vector<std::tuple<double, NodeIndex, int, std::size_t>> candidates;
  for (std::size_t c = 0; c < run_members.size(); ++c) {
    if (run_members[c].empty()) continue;
    std::vector<std::size_t> overlap(k_ref, 0);
    for (NodeIndex v : run_members[c]) {
      ++overlap[static_cast<std::size_t>(reference.community.at(v))];
    }
    const NodeIndex smallest =
        *std::min_element(run_members[c].begin(), run_members[c].end());
    for (std::size_t r = 0; r < k_ref; ++r) {
      if (overlap[r] == 0) continue;
      const double jaccard =
          static_cast<double>(overlap[r]) /
          static_cast<double>(run_members[c].size() + ref_size[r] - overlap[r]);
      candidates.emplace_back(jaccard, smallest, static_cast<int>(r), c);
    }
  }
  // Order by decreasing Jaccard; ties are broken on node content rather than
  // on run-internal ids, so relabeling a run never changes the outcome.
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<int> mapping(run_members.size(), unmatched);
  std::vector<bool> run_taken(run_members.size(), false);
  std::vector<bool> ref_taken(k_ref, false);
  for (const auto& [jaccard, smallest, r, c] : candidates) {
    if (run_taken[c] || ref_taken[static_cast<std::size_t>(r)]) continue;
    run_taken[c] = true;
    ref_taken[static_cast<std::size_t>(r)] = true;
    mapping[c] = r;
  }
  return mapping;
}

EnsembleAssignment EnsembleAssign(const Digraph& graph, const EnsembleOptions& options) {
  if (options.runs < 10) {
    throw std::invalid_argument("ensemble needs at least 10 runs, got " +
                                std::to_string(options.runs));
  }
  if (!(options.rmca_threshold >= 0.0 && options.rmca_threshold <= 1.0)) {
    throw std::invalid_argument("rmca threshold must lie in [0, 1]");
  }
  if (graph.empty()) throw std::invalid_argument("ensemble on an empty graph");

  EnsembleAssignment out;
  out.runs = options.runs;
  {
    const UndirectedGraph undirected = UndirectedGraph::Symmetrize(graph);
    out.reference = SelectPartition(ParisCluster(undirected), undirected,
                                    options.increase, options.k_max)
                        .partition;
  }

  std::vector<RunResult> runs(options.runs);
  ParallelFor(options.runs, options.threads, [&](std::size_t r) {
    runs[r] = RunOnce(graph, out.reference, options, r);
  });

  const std::size_t labels = static_cast<std::size_t>(out.reference.num_communities) + 1;
  std::vector<std::uint32_t> counts(graph.num_nodes() * labels, 0);
  for (const auto& run : runs) {
    for (const auto& [node, label] : run.labels) {
      ++counts[node * labels + static_cast<std::size_t>(label)];
    }
  }
  out.nodes.resize(graph.num_nodes());
  for (NodeIndex v = 0; v < graph.num_nodes(); ++v) {
    auto& a = out.nodes[v];
    std::uint32_t best = 0;
    for (std::size_t l = 0; l < labels; ++l) {
      const std::uint32_t c = counts[v * labels + l];
      a.appearances += c;
      if (c > best) {
        best = c;
        a.community = static_cast<int>(l);
      }
    }
    if (a.appearances > 0) {
      a.rmca = static_cast<double>(best) / static_cast<double>(a.appearances);
    }
    a.assigned = a.appearances > 0 && a.rmca >= options.rmca_threshold &&
                 a.appearances >= options.min_appearances;
  }
  return out;
}

std::vector<CommunityStance> PropagateLabels(const Digraph& graph,
                                             const EnsembleAssignment& assignment,
                                             const std::map<std::string, Stance>& annotations) {
  std::vector<CommunityStance> stances(
      static_cast<std::size_t>(assignment.reference.num_communities));
  for (NodeIndex v = 0; v < assignment.nodes.size(); ++v) {
    const auto& a = assignment.nodes[v];
    if (!a.assigned || a.community < 0 || a.community >= assignment.unmatched_label()) continue;
    const auto it = annotations.find(graph.name(v));
    if (it == annotations.end()) continue;
    auto& s = stances[static_cast<std::size_t>(a.community)];
    ++s.label_counts[it->second];
    ++s.annotated;
  }
  for (auto& s : stances) {
    if (s.annotated == 0) continue;
    std::size_t best = 0;
    std::size_t winners = 0;
    for (const auto& [label, n] : s.label_counts) {
      if (n > best) {
        best = n;
        winners = 1;
        s.stance = label;
      } else if (n == best) {
        ++winners;
      }
    }
    if (winners > 1) s.stance = Stance::kOther;
    s.purity = static_cast<double>(best) / static_cast<double>(s.annotated);
  }
  return stances;
}

std::vector<HistogramBin> RmcaDistribution(const EnsembleAssignment& assignment,
                                           double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0)) {
    throw std::invalid_argument("histogram bin width must lie in (0, 1]");
  }
  const auto bins = static_cast<std::size_t>(std::llround(std::ceil(1.0 / bin_width - 1e-9)));
  std::vector<HistogramBin> histogram(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    histogram[i].lower = static_cast<double>(i) * bin_width;
    histogram[i].upper = std::min(1.0, static_cast<double>(i + 1) * bin_width);
  }
  bool any = false;
  for (const auto& a : assignment.nodes) {
    if (a.appearances == 0) continue;
    any = true;
    auto bin = static_cast<std::size_t>(std::floor(a.rmca / bin_width + 1e-9));
    ++histogram[std::min(bin, bins - 1)].count;
  }
  if (!any) histogram.clear();
  return histogram;
}

}  // namespace echoscope
