#ifndef ECHOSCOPE_COMMUNITIES_H_
#define ECHOSCOPE_COMMUNITIES_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "echoscope/ingest.h"
#include "echoscope/network.h"

namespace echoscope {

/// Undirected weighted graph in adjacency-list form.
///
/// Built from a Digraph by summing both directions of every pair:
/// w(u, v) = w(u -> v) + w(v -> u).
class UndirectedGraph {
 public:
  struct Neighbor {
    NodeIndex node;
    double weight;
  };

  UndirectedGraph() = default;
  // Parallel (u, v) entries are summed; u == v is a self-loop.
  UndirectedGraph(std::size_t num_nodes,
                  std::span<const std::tuple<NodeIndex, NodeIndex, double>> edges);

  static UndirectedGraph Symmetrize(const Digraph& graph);

  std::size_t num_nodes() const { return adjacency_.size(); }
  std::span<const Neighbor> Neighbors(NodeIndex node) const { return adjacency_[node]; }
  // Weighted degree; a self-loop counts twice.
  double Degree(NodeIndex node) const { return degree_[node]; }
  // Sum of edge weights, each undirected edge counted once.
  double total_weight() const { return total_weight_; }

 private:
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<double> degree_;
  double total_weight_ = 0.0;
};

struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t cluster = 0;  // id of the merged cluster
  std::size_t size = 0;     // leaves under it
};

/// Merge tree over leaves 0..num_leaves-1. Merge i creates cluster
/// num_leaves + i, and merges are ordered by non-decreasing distance.
struct Dendrogram {
  std::size_t num_leaves = 0;
  std::vector<Merge> merges;
};

// Agglomerative clustering driven by the node-pair sampling distance
// d(a, b) = w(a) w(b) / (W w(a, b)), where w(a) is the weighted degree of
// cluster a, w(a, b) the weight between clusters and W the sum of all
// degrees. Uses a nearest-neighbour chain; ties go to the lower cluster id.
// Throws std::invalid_argument on an empty or disconnected graph.
Dendrogram ParisCluster(const UndirectedGraph& graph);

/// Node -> community, with ids dense in [0, num_communities).
struct Partition {
  std::vector<int> community;
  int num_communities = 0;

  // Community ids renumbered by first appearance in node order.
  static Partition FromLabels(std::span<const int> labels);
  std::vector<std::vector<NodeIndex>> Members() const;
};

// Partition left after undoing the last `level` merges: level 0 is a single
// community, level num_leaves - 1 gives singletons.
Partition CutDendrogram(const Dendrogram& dendrogram, std::size_t level);

// Newman modularity with the weighted degree null model.
double Modularity(const UndirectedGraph& graph, const Partition& partition);

struct LevelChoice {
  std::size_t level = 0;
  bool fallback = false;  // no level met the increase rule; argmax was used
};

// Scans q_by_level from coarse to fine and returns the first level whose
// modularity is at least (1 + increase) times the previous one, counting
// only positive bases. Falls back to the best level >= 1.
LevelChoice ChooseLevel(std::span<const double> q_by_level, double increase);

struct PartitionSelection {
  Partition partition;
  std::size_t level = 0;
  bool fallback = false;
  std::vector<double> modularity_by_level;  // index = level, up to k_max - 1
};

PartitionSelection SelectPartition(const Dendrogram& dendrogram,
                                   const UndirectedGraph& graph,
                                   double increase = 0.10, std::size_t k_max = 12);

// Keeps round(fraction * |E|) edges drawn uniformly without replacement;
// nodes left without edges are dropped. fraction must lie in (0, 1].
Digraph SampleEdges(const Digraph& graph, double fraction, std::uint64_t seed);

struct EnsembleOptions {
  std::size_t runs = 100;
  double fraction = 0.5;
  double rmca_threshold = 0.9;
  std::size_t min_appearances = 30;
  double increase = 0.10;
  std::size_t k_max = 12;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct NodeAssignment {
  int community = -1;  // modal aligned label; -1 if never sampled
  double rmca = 0.0;
  std::size_t appearances = 0;
  bool assigned = false;
};

struct EnsembleAssignment {
  Partition reference;  // partition selected on the full graph
  std::vector<NodeAssignment> nodes;  // indexed like the input graph
  std::size_t runs = 0;

  // Label given to run communities that matched no reference community.
  int unmatched_label() const { return reference.num_communities; }
  std::size_t assigned_count() const;
};

// Maps every community of one run onto a reference community by greedy
// maximum Jaccard matching over node sets. Entry c of the result is the
// reference id for run community c, or `unmatched` if none was left.
// `run_members` must hold reference-graph node indices.
std::vector<int> AlignToReference(
    const std::vector<std::vector<NodeIndex>>& run_members,
    const Partition& reference, int unmatched);

// Runs the edge-sampling ensemble. Run r samples edges with seed
// options.seed ^ r, keeps the largest weak component, clusters
// it, selects a partition and aligns it to the reference. Throws
// std::invalid_argument when runs < 10.
EnsembleAssignment EnsembleAssign(const Digraph& graph, const EnsembleOptions& options);

struct CommunityStance {
  Stance stance = Stance::kOther;
  std::optional<double> purity;
  std::size_t annotated = 0;
  std::map<Stance, std::size_t> label_counts;
};

// Stance per reference community: majority label among annotated assigned
// members; ties and communities without annotations give kOther.
std::vector<CommunityStance> PropagateLabels(
    const Digraph& graph, const EnsembleAssignment& assignment,
    const std::map<std::string, Stance>& annotations);

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
};

// Fixed-width bins over [0, 1]; the last bin is closed. Nodes that never
// appeared are skipped. Returns no bins when nothing appeared.
std::vector<HistogramBin> RmcaDistribution(const EnsembleAssignment& assignment,
                                           double bin_width = 0.05);

}  // namespace echoscope

#endif  // ECHOSCOPE_COMMUNITIES_H_
