#ifndef ECHOSCOPE_NETWORK_H_
#define ECHOSCOPE_NETWORK_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "echoscope/ingest.h"

namespace echoscope {

using NodeIndex = std::uint32_t;

struct WeightedEdge {
  NodeIndex source = 0;
  NodeIndex target = 0;
  std::int64_t weight = 0;
  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Immutable weighted directed graph over named users.
///
/// Node indices follow the lexicographic order of the names and edges are
/// sorted by (source, target), so two graphs built from the same edge
/// multiset are identical regardless of insertion order. Self-loops are never
/// stored and every stored weight is positive.
class Digraph {
 public:
  Digraph() = default;

  std::size_t num_nodes() const { return names_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  bool empty() const { return names_.empty(); }

  const std::string& name(NodeIndex node) const { return names_[node]; }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<NodeIndex> Find(std::string_view name) const;

  std::span<const WeightedEdge> edges() const { return edges_; }
  std::span<const WeightedEdge> OutEdges(NodeIndex node) const {
    return std::span<const WeightedEdge>(edges_).subspan(
        out_offsets_[node], out_offsets_[node + 1] - out_offsets_[node]);
  }
  std::optional<std::int64_t> EdgeWeight(std::string_view source,
                                         std::string_view target) const;

  std::int64_t OutWeight(NodeIndex node) const { return out_weight_[node]; }
  std::int64_t InWeight(NodeIndex node) const { return in_weight_[node]; }
  std::int64_t total_weight() const { return total_weight_; }

  // Subgraph induced on the nodes with keep[node] set.
  Digraph Induced(const std::vector<bool>& keep) const;
  // Graph made of the listed edges; nodes without any kept edge disappear.
  Digraph WithEdges(std::span<const std::size_t> edge_indices) const;

  friend bool operator==(const Digraph& a, const Digraph& b) {
    return a.names_ == b.names_ && a.edges_ == b.edges_;
  }

 private:
  friend class DigraphBuilder;
  Digraph(std::vector<std::string> names, std::vector<WeightedEdge> edges);

  std::vector<std::string> names_;
  std::vector<WeightedEdge> edges_;
  std::vector<std::size_t> out_offsets_;
  std::vector<std::int64_t> out_weight_;
  std::vector<std::int64_t> in_weight_;
  std::int64_t total_weight_ = 0;
};

/// Accumulates named edges; repeated (source, target) pairs add up.
class DigraphBuilder {
 public:
  void AddNode(std::string_view name);
  // Self-loops are ignored; weight must be positive.
  void AddEdge(std::string_view source, std::string_view target, std::int64_t weight = 1);
  std::size_t self_loops_dropped() const { return self_loops_; }
  Digraph Build() const;

 private:
  std::map<std::string, std::int64_t, std::less<>> nodes_;
  std::map<std::pair<std::string, std::string>, std::int64_t> edges_;
  std::size_t self_loops_ = 0;
};

// One edge per (retweeter, retweeted author) with the retweet count as weight.
Digraph BuildRetweetGraph(std::span<const InteractionRecord> records);
// One edge per (author, mentioned user) with the mention count as weight.
Digraph BuildMentionGraph(std::span<const InteractionRecord> records);

// Drops weight-1 edges, then any node left without edges.
Digraph PruneWeightOne(const Digraph& graph);

// Weak component label per node; labels are dense and numbered by the
// smallest node index they contain.
std::vector<std::size_t> WeakComponents(const Digraph& graph);
bool IsWeaklyConnected(const Digraph& graph);
// Induced subgraph on the largest weak component. Equal sizes go to the
// component holding the lexicographically smallest node name.
Digraph LargestWcc(const Digraph& graph);

enum class GraphFormat { kEdgeList, kGraphMl };

GraphFormat ParseGraphFormat(std::string_view name);

// `source<TAB>target<TAB>weight` lines in edge order, LF endings.
void WriteEdgeList(const Digraph& graph, std::ostream& out);
// GraphML with one integer `weight` edge attribute.
void WriteGraphMl(const Digraph& graph, std::ostream& out);
void ExportGraph(const Digraph& graph, const std::filesystem::path& path,
                 GraphFormat format);
Digraph ReadEdgeList(std::istream& in);
Digraph ImportEdgeList(const std::filesystem::path& path);

}  // namespace echoscope

#endif  // ECHOSCOPE_NETWORK_H_
