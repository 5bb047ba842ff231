#include "echoscope/network.h"

#include <algorithm>
#include <charconv>
#include <deque>
#include <sstream>
#include <stdexcept>

#include "echoscope/report.h"

namespace echoscope {

Digraph::Digraph(std::vector<std::string> names, std::vector<WeightedEdge> edges)
    : names_(std::move(names)), edges_(std::move(edges)) {
  const std::size_t n = names_.size();
  out_offsets_.assign(n + 1, 0);
  out_weight_.assign(n, 0);
  in_weight_.assign(n, 0);
  for (const auto& e : edges_) {
    ++out_offsets_[e.source + 1];
    out_weight_[e.source] += e.weight;
    in_weight_[e.target] += e.weight;
    total_weight_ += e.weight;
  }
  for (std::size_t i = 0; i < n; ++i) out_offsets_[i + 1] += out_offsets_[i];
}

std::optional<NodeIndex> Digraph::Find(std::string_view name) const {
  const auto it = std::lower_bound(names_.begin(), names_.end(), name);
  if (it == names_.end() || *it != name) return std::nullopt;
  return static_cast<NodeIndex>(it - names_.begin());
}

std::optional<std::int64_t> Digraph::EdgeWeight(std::string_view source,
                                                std::string_view target) const {
  const auto s = Find(source);
  const auto t = Find(target);
  if (!s || !t) return std::nullopt;
  const auto out = OutEdges(*s);
  const auto it = std::lower_bound(
      out.begin(), out.end(), *t,
      [](const WeightedEdge& e, NodeIndex node) { return e.target < node; });
  if (it == out.end() || it->target != *t) return std::nullopt;
  return it->weight;
}

Digraph Digraph::Induced(const std::vector<bool>& keep) const {
  std::vector<NodeIndex> remap(num_nodes(), 0);
  std::vector<std::string> names;
  for (NodeIndex v = 0; v < num_nodes(); ++v) {
    if (!keep[v]) continue;
    remap[v] = static_cast<NodeIndex>(names.size());
    names.push_back(names_[v]);
  }
  std::vector<WeightedEdge> edges;
  for (const auto& e : edges_) {
    if (keep[e.source] && keep[e.target]) {
      edges.push_back({remap[e.source], remap[e.target], e.weight});
    }
  }
  return Digraph(std::move(names), std::move(edges));
}

Digraph Digraph::WithEdges(std::span<const std::size_t> edge_indices) const {
  std::vector<bool> used(num_nodes(), false);
  std::vector<std::size_t> sorted(edge_indices.begin(), edge_indices.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t i : sorted) {
    used[edges_.at(i).source] = true;
    used[edges_[i].target] = true;
  }
  std::vector<NodeIndex> remap(num_nodes(), 0);
  std::vector<std::string> names;
  for (NodeIndex v = 0; v < num_nodes(); ++v) {
    if (!used[v]) continue;
    remap[v] = static_cast<NodeIndex>(names.size());
    names.push_back(names_[v]);
  }
  std::vector<WeightedEdge> edges;
  edges.reserve(sorted.size());
  for (std::size_t i : sorted) {
    const auto& e = edges_[i];
    edges.push_back({remap[e.source], remap[e.target], e.weight});
  }
  return Digraph(std::move(names), std::move(edges));
}

void DigraphBuilder::AddNode(std::string_view name) {
  nodes_.try_emplace(std::string(name), 0);
}

void DigraphBuilder::AddEdge(std::string_view source, std::string_view target,
                             std::int64_t weight) {
  if (weight <= 0) throw std::invalid_argument("edge weight must be positive");
  if (source == target) {
    ++self_loops_;
    return;
  }
  AddNode(source);
  AddNode(target);
  edges_[{std::string(source), std::string(target)}] += weight;
}

Digraph DigraphBuilder::Build() const {
  std::vector<std::string> names;
  names.reserve(nodes_.size());
  for (const auto& [name, unused] : nodes_) names.push_back(name);
  std::vector<WeightedEdge> edges;
  edges.reserve(edges_.size());
  // std::map iterates (source, target) in lexicographic order, which matches
  // the index order of `names`.
  auto index_of = [&names](const std::string& name) {
    return static_cast<NodeIndex>(
        std::lower_bound(names.begin(), names.end(), name) - names.begin());
  };
  for (const auto& [key, weight] : edges_) {
    edges.push_back({index_of(key.first), index_of(key.second), weight});
  }
  return Digraph(std::move(names), std::move(edges));
}

Digraph BuildRetweetGraph(std::span<const InteractionRecord> records) {
  DigraphBuilder builder;
  for (const auto& r : records) {
    if (r.retweeted_author) builder.AddEdge(r.author_id, *r.retweeted_author);
  }
  return builder.Build();
}

Digraph BuildMentionGraph(std::span<const InteractionRecord> records) {
  DigraphBuilder builder;
  for (const auto& r : records) {
    for (const auto& m : r.mentions) builder.AddEdge(r.author_id, m);
  }
  return builder.Build();
}

Digraph PruneWeightOne(const Digraph& graph) {
  std::vector<std::size_t> kept;
  const auto edges = graph.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].weight > 1) kept.push_back(i);
  }
  return graph.WithEdges(kept);
}

std::vector<std::size_t> WeakComponents(const Digraph& graph) {
  const std::size_t n = graph.num_nodes();
  std::vector<std::vector<NodeIndex>> adjacency(n);
  for (const auto& e : graph.edges()) {
    adjacency[e.source].push_back(e.target);
    adjacency[e.target].push_back(e.source);
  }
  constexpr std::size_t kUnseen = static_cast<std::size_t>(-1);
  std::vector<std::size_t> label(n, kUnseen);
  std::size_t next_label = 0;
  std::deque<NodeIndex> queue;
  for (NodeIndex root = 0; root < n; ++root) {
    if (label[root] != kUnseen) continue;
    label[root] = next_label;
    queue.push_back(root);
    while (!queue.empty()) {
      const NodeIndex v = queue.front();
      queue.pop_front();
      for (NodeIndex u : adjacency[v]) {
        if (label[u] == kUnseen) {
          label[u] = next_label;
          queue.push_back(u);
        }
      }
    }
    ++next_label;
  }
  return label;
}

bool IsWeaklyConnected(const Digraph& graph) {
  const auto label = WeakComponents(graph);
  return std::all_of(label.begin(), label.end(), [](std::size_t c) { return c == 0; });
}

Digraph LargestWcc(const Digraph& graph) {
  if (graph.empty()) return graph;
  const auto label = WeakComponents(graph);
  std::vector<std::size_t> sizes;
  for (std::size_t c : label) {
    if (c >= sizes.size()) sizes.resize(c + 1, 0);
    ++sizes[c];
  }
  // Labels are numbered by smallest member, and node order is lexicographic,
  // so the first maximum is the tie-break winner.
  const std::size_t best = static_cast<std::size_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  if (sizes[best] == graph.num_nodes()) return graph;
  std::vector<bool> keep(graph.num_nodes());
  for (std::size_t v = 0; v < keep.size(); ++v) keep[v] = label[v] == best;
  return graph.Induced(keep);
}

GraphFormat ParseGraphFormat(std::string_view name) {
  if (name == "edge-list" || name == "edgelist" || name == "tsv") return GraphFormat::kEdgeList;
  if (name == "graphml" || name == "GraphML") return GraphFormat::kGraphMl;
  throw std::invalid_argument("unknown graph format: " + std::string(name));
}

void WriteEdgeList(const Digraph& graph, std::ostream& out) {
  for (const auto& e : graph.edges()) {
    out << graph.name(e.source) << '\t' << graph.name(e.target) << '\t' << e.weight << '\n';
  }
}

namespace {

std::string XmlEscape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void WriteGraphMl(const Digraph& graph, std::ostream& out) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"\n"
      << "    xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"\n"
      << "    xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
         "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n"
      << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n"
      << "  <graph id=\"G\" edgedefault=\"directed\">\n";
  for (const auto& name : graph.names()) {
    out << "    <node id=\"" << XmlEscape(name) << "\"/>\n";
  }
  for (const auto& e : graph.edges()) {
    out << "    <edge source=\"" << XmlEscape(graph.name(e.source)) << "\" target=\""
        << XmlEscape(graph.name(e.target)) << "\"><data key=\"weight\">" << e.weight
        << "</data></edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
}

void ExportGraph(const Digraph& graph, const std::filesystem::path& path,
                 GraphFormat format) {
  std::ostringstream out;
  if (format == GraphFormat::kEdgeList) {
    WriteEdgeList(graph, out);
  } else {
    WriteGraphMl(graph, out);
  }
  WriteTextFile(path, out.str());
}

Digraph ReadEdgeList(std::istream& in) {
  DigraphBuilder builder;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    const auto fields = SplitTabs(line);
    std::int64_t weight = 0;
    if (fields.size() != 3 ||
        std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), weight).ec !=
            std::errc() ||
        weight <= 0) {
      throw std::runtime_error("bad edge-list line " + std::to_string(line_number));
    }
    builder.AddEdge(fields[0], fields[1], weight);
  }
  return builder.Build();
}

Digraph ImportEdgeList(const std::filesystem::path& path) {
  std::istringstream in(ReadTextFile(path));
  return ReadEdgeList(in);
}

}  // namespace echoscope
