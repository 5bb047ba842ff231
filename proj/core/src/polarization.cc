#include "echoscope/polarization.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

#include "echoscope/parallel.h"
#include "echoscope/random.h"

namespace echoscope {
namespace {

constexpr std::size_t kMaxAttemptsPerWalk = 1'000'000;
constexpr std::size_t kMaxStepsPerAttempt = 1'000'000;
constexpr std::size_t kWalkChunk = 256;

int SideIndex(Side s) { return static_cast<int>(s); }

// Walk graph in CSR form with cumulative weights for O(log d) steps.
struct WalkGraph {
  std::vector<std::size_t> offsets;
  std::vector<NodeIndex> targets;
  std::vector<double> cumulative;
  std::vector<double> in_weight;

  WalkGraph(const Digraph& graph, bool forward) {
    const std::size_t n = graph.num_nodes();
    offsets.assign(n + 1, 0);
    in_weight.assign(n, 0.0);
    std::vector<std::vector<std::pair<NodeIndex, double>>> out(n);
    for (const auto& e : graph.edges()) {
      const NodeIndex from = forward ? e.source : e.target;
      const NodeIndex to = forward ? e.target : e.source;
      out[from].emplace_back(to, static_cast<double>(e.weight));
      in_weight[to] += static_cast<double>(e.weight);
    }
    for (std::size_t v = 0; v < n; ++v) {
      std::sort(out[v].begin(), out[v].end());
      double running = 0.0;
      for (const auto& [to, w] : out[v]) {
        running += w;
        targets.push_back(to);
        cumulative.push_back(running);
      }
      offsets[v + 1] = targets.size();
    }
  }

  NodeIndex Step(NodeIndex v, Rng& rng) const {
    const auto begin = cumulative.begin() + static_cast<std::ptrdiff_t>(offsets[v]);
    const auto end = cumulative.begin() + static_cast<std::ptrdiff_t>(offsets[v + 1]);
    const double x = UniformUnit(rng) * *(end - 1);
    auto it = std::upper_bound(begin, end, x);
    if (it == end) --it;
    return targets[offsets[v] + static_cast<std::size_t>(it - begin)];
  }
};

}  // namespace

std::string_view SideName(Side side) {
  switch (side) {
    case Side::kSupporter: return "S";
    case Side::kHesitant: return "H";
    case Side::kUnassigned: return "unassigned";
  }
  return "unassigned";
}

SideMap BuildSideMap(const Digraph& graph, const EnsembleAssignment& assignment,
                     std::span<const CommunityStance> stances) {
  SideMap sides;
  for (NodeIndex v = 0; v < graph.num_nodes(); ++v) {
    Side side = Side::kUnassigned;
    const auto& a = assignment.nodes.at(v);
    if (a.assigned && a.community >= 0 &&
        static_cast<std::size_t>(a.community) < stances.size()) {
      switch (stances[static_cast<std::size_t>(a.community)].stance) {
        case Stance::kSupporter: side = Side::kSupporter; break;
        case Stance::kHesitant: side = Side::kHesitant; break;
        case Stance::kPets: continue;
        case Stance::kOther: break;
      }
    }
    sides[graph.name(v)] = side;
  }
  return sides;
}

Digraph RestrictToSides(const Digraph& graph, const SideMap& sides) {
  std::vector<bool> keep(graph.num_nodes());
  for (NodeIndex v = 0; v < graph.num_nodes(); ++v) keep[v] = sides.count(graph.name(v)) > 0;
  return graph.Induced(keep);
}

RwcResult RandomWalkControversy(const Digraph& graph, const SideMap& sides,
                                const RwcOptions& options) {
  const std::size_t n = graph.num_nodes();
  std::vector<Side> side_of(n, Side::kUnassigned);
  std::array<std::vector<NodeIndex>, 2> members;
  for (NodeIndex v = 0; v < n; ++v) {
    const auto it = sides.find(graph.name(v));
    if (it != sides.end()) side_of[v] = it->second;
    if (side_of[v] != Side::kUnassigned) members[SideIndex(side_of[v])].push_back(v);
  }
  if (options.k == 0) throw std::invalid_argument("rwc: k must be positive");
  for (int s = 0; s < 2; ++s) {
    if (members[s].size() < options.k) {
      throw std::invalid_argument("rwc: side " + std::string(SideName(Side(s))) + " has " +
                                  std::to_string(members[s].size()) + " users, fewer than k=" +
                                  std::to_string(options.k));
    }
  }
  if (options.walks_per_side == 0) throw std::invalid_argument("rwc: no walks requested");

  const WalkGraph walk(graph, options.follow_edge_direction);
  RwcResult result;
  result.k = options.k;

  // Authorities: top-k per side by weighted in-degree along the walk
  // direction; equal degrees go to the smaller name.
  std::vector<int> authority_side(n, -1);
  for (int s = 0; s < 2; ++s) {
    auto ranked = members[s];
    std::stable_sort(ranked.begin(), ranked.end(), [&walk](NodeIndex a, NodeIndex b) {
      return walk.in_weight[a] > walk.in_weight[b];
    });
    ranked.resize(options.k);
    std::sort(ranked.begin(), ranked.end());
    for (NodeIndex v : ranked) {
      authority_side[v] = s;
      result.authorities[s].push_back(graph.name(v));
    }
  }

  // Nodes from which some authority is reachable.
  std::vector<std::vector<NodeIndex>> reverse(n);
  for (NodeIndex v = 0; v < n; ++v) {
    for (std::size_t i = walk.offsets[v]; i < walk.offsets[v + 1]; ++i) {
      reverse[walk.targets[i]].push_back(v);
    }
  }
  std::vector<bool> reaches(n, false);
  std::deque<NodeIndex> queue;
  for (NodeIndex v = 0; v < n; ++v) {
    if (authority_side[v] >= 0) {
      reaches[v] = true;
      queue.push_back(v);
    }
  }
  while (!queue.empty()) {
    const NodeIndex v = queue.front();
    queue.pop_front();
    for (NodeIndex u : reverse[v]) {
      if (!reaches[u]) {
        reaches[u] = true;
        queue.push_back(u);
      }
    }
  }
  // A walk leaves its start node before it can be absorbed, so a start is
  // usable when one of its out-neighbours reaches an authority.
  std::vector<bool> can_start(n, false);
  for (NodeIndex v = 0; v < n; ++v) {
    for (std::size_t i = walk.offsets[v]; i < walk.offsets[v + 1] && !can_start[v]; ++i) {
      can_start[v] = reaches[walk.targets[i]];
    }
  }
  for (int s = 0; s < 2; ++s) {
    if (std::none_of(members[s].begin(), members[s].end(),
                     [&can_start](NodeIndex v) { return can_start[v]; })) {
      throw std::invalid_argument("rwc: no authority is reachable from side " +
                                  std::string(SideName(Side(s))));
    }
  }

  struct Tally {
    std::array<std::array<std::size_t, 2>, 2> ends{};
    std::size_t restarts = 0;
  };
  const std::size_t total_walks = 2 * options.walks_per_side;
  const std::size_t chunks = (total_walks + kWalkChunk - 1) / kWalkChunk;
  std::vector<Tally> tallies(chunks);

  ParallelFor(chunks, options.threads, [&](std::size_t chunk) {
    Tally& tally = tallies[chunk];
    const std::size_t first = chunk * kWalkChunk;
    const std::size_t last = std::min(total_walks, first + kWalkChunk);
    for (std::size_t w = first; w < last; ++w) {
      const int start_side = w < options.walks_per_side ? 0 : 1;
      const auto& starts = members[start_side];
      Rng rng(DeriveSeed(options.seed, static_cast<std::uint64_t>(w)));
      bool done = false;
      for (std::size_t attempt = 0; attempt < kMaxAttemptsPerWalk && !done; ++attempt) {
        if (attempt > 0) ++tally.restarts;
        NodeIndex v = starts[UniformIndex(rng, starts.size())];
        if (!can_start[v]) continue;
        v = walk.Step(v, rng);
        for (std::size_t step = 0; step < kMaxStepsPerAttempt; ++step) {
          if (!reaches[v]) break;  // dead end or trapped: restart
          if (authority_side[v] >= 0) {
            ++tally.ends[start_side][authority_side[v]];
            done = true;
            break;
          }
          v = walk.Step(v, rng);
        }
      }
      if (!done) throw std::runtime_error("rwc: walk failed to terminate");
    }
  });

  for (const auto& t : tallies) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) result.walks_by_start_end[a][b] += t.ends[a][b];
    }
    result.restarts += t.restarts;
  }
  result.walks = total_walks;
  for (int end = 0; end < 2; ++end) {
    const double column = static_cast<double>(result.walks_by_start_end[0][end] +
                                              result.walks_by_start_end[1][end]);
    if (column == 0.0) {
      throw std::runtime_error("rwc: no walk ended at a " + std::string(SideName(Side(end))) +
                               " authority");
    }
    for (int start = 0; start < 2; ++start) {
      const double p = static_cast<double>(result.walks_by_start_end[start][end]) / column;
      result.p_start_given_end[start][end] = p;
      result.p_start_given_end_stderr[start][end] = std::sqrt(p * (1.0 - p) / column);
    }
  }
  const auto& p = result.p_start_given_end;
  result.rwc = p[0][0] + p[1][1] - 1.0;
  result.rwc_stderr = std::hypot(result.p_start_given_end_stderr[0][0],
                                 result.p_start_given_end_stderr[1][1]);
  return result;
}

MentionShare ComputeMentionShare(const Digraph& mention_graph, const SideMap& sides) {
  MentionShare share;
  std::vector<int> side_of(mention_graph.num_nodes(), -1);
  for (NodeIndex v = 0; v < mention_graph.num_nodes(); ++v) {
    const auto it = sides.find(mention_graph.name(v));
    if (it != sides.end() && it->second != Side::kUnassigned) side_of[v] = SideIndex(it->second);
  }
  for (const auto& e : mention_graph.edges()) {
    const int from = side_of[e.source];
    const int to = side_of[e.target];
    if (from >= 0 && to >= 0) share.weights[from][to] += e.weight;
  }
  for (int x = 0; x < 2; ++x) {
    const std::int64_t total = share.weights[x][0] + share.weights[x][1];
    if (total == 0) continue;
    share.rows[x] = std::array<double, 2>{
        static_cast<double>(share.weights[x][0]) / static_cast<double>(total),
        static_cast<double>(share.weights[x][1]) / static_cast<double>(total)};
  }
  return share;
}

FlowReport MembershipFlow(std::span<const std::string> window_names,
                          std::span<const SideMap> side_maps) {
  if (side_maps.size() < 2 || window_names.size() != side_maps.size()) {
    throw std::invalid_argument("membership flow needs at least two named windows");
  }
  auto category = [](const SideMap& map, const std::string& user) {
    const auto it = map.find(user);
    if (it == map.end() || it->second == Side::kUnassigned) return 2;
    return SideIndex(it->second);
  };
  FlowReport report;
  for (std::size_t t = 0; t + 1 < side_maps.size(); ++t) {
    FlowTransition flow;
    flow.from_window = window_names[t];
    flow.to_window = window_names[t + 1];
    std::set<std::string> users;
    for (const auto& [user, side] : side_maps[t]) users.insert(user);
    for (const auto& [user, side] : side_maps[t + 1]) users.insert(user);
    for (const auto& user : users) {
      const int from = category(side_maps[t], user);
      const int to = category(side_maps[t + 1], user);
      if (from == 2 && to == 2) continue;
      ++flow.counts[from][to];
    }
    flow.on_side_in_both =
        flow.counts[0][0] + flow.counts[0][1] + flow.counts[1][0] + flow.counts[1][1];
    if (flow.on_side_in_both > 0) {
      flow.switch_fraction = static_cast<double>(flow.counts[0][1] + flow.counts[1][0]) /
                             static_cast<double>(flow.on_side_in_both);
    }
    report.transitions.push_back(std::move(flow));
  }

  const std::size_t w = side_maps.size();
  for (Side side : {Side::kSupporter, Side::kHesitant}) {
    Retention r;
    r.side = side;
    std::set<std::string> early;
    for (std::size_t t = 0; t < 2; ++t) {
      for (const auto& [user, s] : side_maps[t]) {
        if (s == side) early.insert(user);
      }
    }
    r.early_users = early.size();
    for (const auto& user : early) {
      if (side_maps[w - 2].count(user) || side_maps[w - 1].count(user)) ++r.retained;
    }
    if (r.early_users > 0) {
      r.fraction = static_cast<double>(r.retained) / static_cast<double>(r.early_users);
    }
    report.retention.push_back(r);
  }
  return report;
}

std::optional<std::string> RegistrableDomain(std::string_view url) {
  while (!url.empty() && std::isspace(static_cast<unsigned char>(url.front()))) url.remove_prefix(1);
  while (!url.empty() && std::isspace(static_cast<unsigned char>(url.back()))) url.remove_suffix(1);
  if (const auto scheme_end = url.find("://"); scheme_end != std::string_view::npos) {
    const auto scheme = url.substr(0, scheme_end);
    if (scheme.empty() || !std::all_of(scheme.begin(), scheme.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
        })) {
      return std::nullopt;
    }
    url.remove_prefix(scheme_end + 3);
  } else if (url.starts_with("//")) {
    url.remove_prefix(2);
  }
  std::string_view host = url.substr(0, url.find_first_of("/?#"));
  if (const auto at = host.rfind('@'); at != std::string_view::npos) host.remove_prefix(at + 1);
  if (const auto colon = host.find(':'); colon != std::string_view::npos) {
    host = host.substr(0, colon);
  }
  std::string domain;
  for (char c : host) domain += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  while (!domain.empty() && domain.back() == '.') domain.pop_back();
  if (domain.starts_with("www.")) domain.erase(0, 4);
  if (domain.empty() || domain.find('.') == std::string::npos) return std::nullopt;
  std::size_t label_length = 0;
  for (char c : domain) {
    const auto u = static_cast<unsigned char>(c);
    if (c == '.') {
      if (label_length == 0) return std::nullopt;
      label_length = 0;
      continue;
    }
    if (!(std::isalnum(u) || c == '-' || c == '_' || u >= 0x80)) return std::nullopt;
    ++label_length;
  }
  if (label_length == 0) return std::nullopt;
  return domain;
}

DomainRanking RankDomains(std::span<const InteractionRecord> records, const SideMap& sides,
                          std::size_t top_n) {
  DomainRanking ranking;
  std::array<std::map<std::string, std::size_t>, 2> counts;
  for (const auto& r : records) {
    const auto it = sides.find(r.author_id);
    if (it == sides.end() || it->second == Side::kUnassigned) continue;
    const int side = SideIndex(it->second);
    for (const auto& url : r.urls) {
      ++ranking.total_urls;
      if (auto domain = RegistrableDomain(url)) {
        ++counts[side][*domain];
        ++ranking.counted[side];
      } else {
        ++ranking.skipped;
      }
    }
  }
  for (int s = 0; s < 2; ++s) {
    auto& top = ranking.top[s];
    for (const auto& [domain, count] : counts[s]) top.push_back({domain, count});
    std::stable_sort(top.begin(), top.end(), [](const DomainCount& a, const DomainCount& b) {
      return a.count > b.count;
    });
    if (top.size() > top_n) top.resize(top_n);
  }
  return ranking;
}

}  // namespace echoscope
