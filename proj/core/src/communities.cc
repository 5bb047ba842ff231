#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "echoscope/communities.h"
#include "echoscope/random.h"

namespace echoscope {

double Modularity(const UndirectedGraph& graph, const Partition& partition) {
  const std::size_t n = graph.num_nodes();
  if (partition.community.size() != n) {
    throw std::invalid_argument("partition does not cover the graph");
  }
  const double m = graph.total_weight();
  if (m <= 0.0) return 0.0;
  const auto k = static_cast<std::size_t>(partition.num_communities);
  std::vector<double> internal(k, 0.0);  // each internal edge counted twice
  std::vector<double> degree(k, 0.0);
  for (NodeIndex u = 0; u < n; ++u) {
    const int cu = partition.community[u];
    degree[cu] += graph.Degree(u);
    for (const auto& nb : graph.Neighbors(u)) {
      if (partition.community[nb.node] == cu) {
        internal[cu] += nb.node == u ? 2.0 * nb.weight : nb.weight;
      }
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double share = degree[c] / (2.0 * m);
    q += internal[c] / (2.0 * m) - share * share;
  }
  return q;
}

LevelChoice ChooseLevel(std::span<const double> q_by_level, double increase) {
  for (std::size_t level = 1; level < q_by_level.size(); ++level) {
    const double base = q_by_level[level - 1];
    if (base > 0.0 && q_by_level[level] >= (1.0 + increase) * base) {
      return {level, false};
    }
  }
  if (q_by_level.size() < 2) return {0, true};
  const auto best = std::max_element(q_by_level.begin() + 1, q_by_level.end());
  return {static_cast<std::size_t>(best - q_by_level.begin()), true};
}

PartitionSelection SelectPartition(const Dendrogram& dendrogram,
                                   const UndirectedGraph& graph, double increase,
                                   std::size_t k_max) {
  if (k_max < 2) throw std::invalid_argument("k_max must be at least 2");
  if (dendrogram.num_leaves != graph.num_nodes()) {
    throw std::invalid_argument("dendrogram and graph sizes differ");
  }
  PartitionSelection selection;
  const std::size_t levels = std::min(k_max, dendrogram.num_leaves);
  std::vector<Partition> cuts;
  for (std::size_t level = 0; level < levels; ++level) {
    cuts.push_back(CutDendrogram(dendrogram, level));
    selection.modularity_by_level.push_back(Modularity(graph, cuts.back()));
  }
  const LevelChoice choice = ChooseLevel(selection.modularity_by_level, increase);
  selection.level = choice.level;
  selection.fallback = choice.fallback;
  selection.partition = std::move(cuts[choice.level]);
  return selection;
}

Digraph SampleEdges(const Digraph& graph, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("edge sampling fraction must lie in (0, 1]");
  }
  const std::size_t m = graph.num_edges();
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m)));
  std::vector<std::size_t> index(m);
  std::iota(index.begin(), index.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `keep` slots are a uniform subset.
  for (std::size_t i = 0; i < keep && i + 1 < m; ++i) {
    const std::size_t j = i + UniformIndex(rng, m - i);
    std::swap(index[i], index[j]);
  }
  index.resize(keep);
  return graph.WithEdges(index);
}

}  // namespace echoscope
