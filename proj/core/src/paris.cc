#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "echoscope/communities.h"

namespace echoscope {

UndirectedGraph::UndirectedGraph(
    std::size_t num_nodes,
    std::span<const std::tuple<NodeIndex, NodeIndex, double>> edges)
    : adjacency_(num_nodes), degree_(num_nodes, 0.0) {
  std::map<std::pair<NodeIndex, NodeIndex>, double> merged;
  for (const auto& [u, v, w] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw std::out_of_range("edge endpoint outside the node range");
    }
    if (w < 0.0) throw std::invalid_argument("negative edge weight");
    merged[{std::min(u, v), std::max(u, v)}] += w;
  }
  for (const auto& [key, w] : merged) {
    const auto [u, v] = key;
    total_weight_ += w;
    if (u == v) {
      adjacency_[u].push_back({u, w});
      degree_[u] += 2.0 * w;
    } else {
      adjacency_[u].push_back({v, w});
      adjacency_[v].push_back({u, w});
      degree_[u] += w;
      degree_[v] += w;
    }
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
}

UndirectedGraph UndirectedGraph::Symmetrize(const Digraph& graph) {
  std::vector<std::tuple<NodeIndex, NodeIndex, double>> edges;
  edges.reserve(graph.num_edges());
  for (const auto& e : graph.edges()) {
    edges.emplace_back(e.source, e.target, static_cast<double>(e.weight));
  }
  return UndirectedGraph(graph.num_nodes(), edges);
}

Dendrogram ParisCluster(const UndirectedGraph& graph) {
  const std::size_t n = graph.num_nodes();
  if (n == 0) throw std::invalid_argument("paris: empty graph");

  // Cluster state, indexed by cluster id (leaves first, then merges).
  std::vector<std::unordered_map<std::size_t, double>> links(2 * n - 1);
  std::vector<double> weight(2 * n - 1, 0.0);
  std::vector<std::size_t> size(2 * n - 1, 0);
  std::vector<bool> active(2 * n - 1, false);
  double total = 0.0;
  for (NodeIndex v = 0; v < n; ++v) {
    for (const auto& nb : graph.Neighbors(v)) {
      if (nb.node != v && nb.weight > 0.0) links[v][nb.node] += nb.weight;
    }
    weight[v] = graph.Degree(v);
    total += weight[v];
    size[v] = 1;
    active[v] = true;
  }

  struct RawMerge {
    std::size_t left, right;
    double distance;
  };
  std::vector<RawMerge> raw;
  raw.reserve(n - 1);
  std::size_t next_id = n;
  std::size_t remaining = n;
  std::size_t scan = 0;  // smallest possibly-active id

  auto nearest = [&](std::size_t a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_id = std::numeric_limits<std::size_t>::max();
    for (const auto& [b, w_ab] : links[a]) {
      const double d = (weight[a] * weight[b]) / (total * w_ab);
      if (d < best || (d == best && b < best_id)) {
        best = d;
        best_id = b;
      }
    }
    return std::pair{best_id, best};
  };

  while (remaining > 1) {
    while (!active[scan]) ++scan;
    std::vector<std::size_t> chain = {scan};
    while (!chain.empty()) {
      const std::size_t a = chain.back();
      chain.pop_back();
      const auto [b, d] = nearest(a);
      if (b == std::numeric_limits<std::size_t>::max()) {
        throw std::invalid_argument("paris: graph is not connected");
      }
      if (!chain.empty() && chain.back() == b) {
        chain.pop_back();
        const std::size_t c = next_id++;
        raw.push_back({std::min(a, b), std::max(a, b), d});
        // Fold the smaller link map into the larger one.
        const bool a_larger = links[a].size() >= links[b].size();
        std::size_t big = a_larger ? a : b;
        std::size_t small = a_larger ? b : a;
        links[c] = std::move(links[big]);
        links[big].clear();
        links[c].erase(small);
        for (const auto& [x, w] : links[small]) {
          if (x != big) links[c][x] += w;
        }
        links[small].clear();
        for (const auto& [x, w] : links[c]) {
          auto& back = links[x];
          back.erase(a);
          back.erase(b);
          back[c] = w;
        }
        weight[c] = weight[a] + weight[b];
        size[c] = size[a] + size[b];
        active[a] = active[b] = false;
        active[c] = true;
        --remaining;
      } else {
        chain.push_back(a);
        chain.push_back(b);
      }
    }
  }

  // Reorder merges by distance. The key is the running maximum along the
  // tree so that a parent never sorts before its children.
  std::vector<double> key(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double k = raw[i].distance;
    for (std::size_t child : {raw[i].left, raw[i].right}) {
      if (child >= n) k = std::max(k, key[child - n]);
    }
    key[i] = k;
  }
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&key](std::size_t x, std::size_t y) { return key[x] < key[y]; });
  std::vector<std::size_t> relabel(raw.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) relabel[order[pos]] = n + pos;
  auto map_id = [&](std::size_t id) { return id < n ? id : relabel[id - n]; };

  Dendrogram dendrogram;
  dendrogram.num_leaves = n;
  dendrogram.merges.reserve(raw.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& m = raw[order[pos]];
    const std::size_t l = map_id(m.left);
    const std::size_t r = map_id(m.right);
    dendrogram.merges.push_back(
        {std::min(l, r), std::max(l, r), m.distance, n + pos, size[n + order[pos]]});
  }
  return dendrogram;
}

Partition Partition::FromLabels(std::span<const int> labels) {
  Partition p;
  p.community.resize(labels.size());
  std::unordered_map<int, int> dense;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    const auto [it, inserted] = dense.try_emplace(labels[v], p.num_communities);
    if (inserted) ++p.num_communities;
    p.community[v] = it->second;
  }
  return p;
}

std::vector<std::vector<NodeIndex>> Partition::Members() const {
  std::vector<std::vector<NodeIndex>> members(static_cast<std::size_t>(num_communities));
  for (std::size_t v = 0; v < community.size(); ++v) {
    members[static_cast<std::size_t>(community[v])].push_back(static_cast<NodeIndex>(v));
  }
  return members;
}

Partition CutDendrogram(const Dendrogram& dendrogram, std::size_t level) {
  const std::size_t n = dendrogram.num_leaves;
  if (n == 0 || level > n - 1) {
    throw std::out_of_range("dendrogram level " + std::to_string(level) +
                            " outside [0, " + std::to_string(n == 0 ? 0 : n - 1) + "]");
  }
  // A forest with fewer merges than n - 1 starts with extra components.
  const std::size_t missing = (n - 1) - dendrogram.merges.size();
  const std::size_t apply =
      level >= missing ? dendrogram.merges.size() - (level - missing) : dendrogram.merges.size();

  std::vector<std::size_t> parent(n + dendrogram.merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < apply; ++i) {
    const auto& m = dendrogram.merges[i];
    parent[find(m.left)] = m.cluster;
    parent[find(m.right)] = m.cluster;
  }
  std::vector<int> labels(n);
  for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<int>(find(v));
  return Partition::FromLabels(labels);
}

}  // namespace echoscope
