#ifndef ECHOSCOPE_POLARIZATION_H_
#define ECHOSCOPE_POLARIZATION_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echoscope/communities.h"
#include "echoscope/ingest.h"
#include "echoscope/network.h"

namespace echoscope {

enum class Side { kSupporter = 0, kHesitant = 1, kUnassigned = 2 };

std::string_view SideName(Side side);  // "S", "H", "unassigned"

// user -> side. Users absent from the map take no part (pets users are
// removed this way).
using SideMap = std::map<std::string, Side>;

// Assigned members of supporter/hesitant communities get that side, members
// of pets communities are left out, everyone else in the graph is
// kUnassigned.
SideMap BuildSideMap(const Digraph& graph, const EnsembleAssignment& assignment,
                     std::span<const CommunityStance> stances);

// Induced subgraph on the nodes present in `sides`.
Digraph RestrictToSides(const Digraph& graph, const SideMap& sides);

struct RwcOptions {
  std::size_t k = 100;                   // authorities per side
  std::size_t walks_per_side = 10000;
  std::uint64_t seed = 0;
  bool follow_edge_direction = true;     // retweeter -> retweeted
  unsigned threads = 0;
};

/// Random Walk Controversy estimate.
///
/// `p_start_given_end[a][b]` is P(walk started on side a | it ended at an
/// authority of side b), with index 0 = supporter and 1 = hesitant.
struct RwcResult {
  double rwc = 0.0;
  double rwc_stderr = 0.0;
  std::array<std::array<double, 2>, 2> p_start_given_end{};
  std::array<std::array<double, 2>, 2> p_start_given_end_stderr{};
  std::array<std::array<std::size_t, 2>, 2> walks_by_start_end{};  // [start][end]
  std::size_t walks = 0;
  std::size_t restarts = 0;
  std::size_t k = 0;
  std::array<std::vector<std::string>, 2> authorities;
};

// Walks start at a uniform node of one side (walks_per_side per side) and
// move along out-edges with probability proportional to weight until they
// arrive at an authority: one of the top-k nodes of either side by weighted
// in-degree. The start node itself never absorbs, even when it is an
// authority. A walk that hits a node from which no authority is reachable
// restarts from a fresh start node on the same side. Unassigned nodes are
// traversable but never start nor absorb. Throws std::invalid_argument when
// k exceeds a side size, or when no start node of a side can reach an
// authority.
RwcResult RandomWalkControversy(const Digraph& graph, const SideMap& sides,
                                const RwcOptions& options);

struct MentionShare {
  // rows[x] = (share to S, share to H) of side x's mentions; absent when
  // side x made no mentions of S or H users.
  std::array<std::optional<std::array<double, 2>>, 2> rows;
  std::array<std::array<std::int64_t, 2>, 2> weights{};  // [from][to]
};

MentionShare ComputeMentionShare(const Digraph& mention_graph, const SideMap& sides);

struct FlowTransition {
  std::string from_window;
  std::string to_window;
  // counts[from][to] over {S, H, absent}; absent means no side in that window.
  std::array<std::array<std::size_t, 3>, 3> counts{};
  std::size_t on_side_in_both = 0;
  std::optional<double> switch_fraction;
};

struct Retention {
  Side side = Side::kSupporter;
  std::size_t early_users = 0;  // on this side in either of the first two windows
  std::size_t retained = 0;     // of those, present in either of the last two
  std::optional<double> fraction;
};

struct FlowReport {
  std::vector<FlowTransition> transitions;
  std::vector<Retention> retention;
};

// Requires at least two windows.
FlowReport MembershipFlow(std::span<const std::string> window_names,
                          std::span<const SideMap> side_maps);

// Host of a URL with scheme, port, credentials, path and one leading "www."
// removed, lowercased. nullopt when no plausible host can be extracted.
std::optional<std::string> RegistrableDomain(std::string_view url);

struct DomainCount {
  std::string domain;
  std::size_t count = 0;
};

struct DomainRanking {
  std::array<std::vector<DomainCount>, 2> top;  // per side, truncated to top_n
  std::array<std::size_t, 2> counted{};         // URLs counted per side
  std::size_t total_urls = 0;                   // URLs posted by S/H users
  std::size_t skipped = 0;                      // unparseable among those
};

DomainRanking RankDomains(std::span<const InteractionRecord> records,
                          const SideMap& sides, std::size_t top_n);

}  // namespace echoscope

#endif  // ECHOSCOPE_POLARIZATION_H_
