#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "echoscope/generator.h"
#include "echoscope/polarization.h"
#include "echoscope/random.h"

namespace echoscope {
namespace {

std::string Name(char prefix, std::size_t i) { return prefix + std::to_string(1000 + i); }

void AddClique(DigraphBuilder& b, char prefix, std::size_t size, std::int64_t weight) {
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      if (i != j) b.AddEdge(Name(prefix, i), Name(prefix, j), weight);
    }
  }
}

SideMap SidesByPrefix(const Digraph& g) {
  SideMap sides;
  for (const auto& name : g.names()) {
    sides[name] = name[0] == 's' ? Side::kSupporter
                  : name[0] == 'h' ? Side::kHesitant
                                   : Side::kUnassigned;
  }
  return sides;
}

TEST(Rwc, UnreachableSidesGiveExactlyOne) {
  DigraphBuilder b;
  AddClique(b, 's', 8, 2);
  AddClique(b, 'h', 6, 2);
  const Digraph g = b.Build();
  RwcOptions options;
  options.k = 3;
  options.walks_per_side = 5000;
  const auto r = RandomWalkControversy(g, SidesByPrefix(g), options);
  EXPECT_EQ(r.rwc, 1.0);
  EXPECT_EQ(r.p_start_given_end[0][0], 1.0);
  EXPECT_EQ(r.p_start_given_end[1][1], 1.0);
  EXPECT_EQ(r.walks_by_start_end[0][1], 0u);
  EXPECT_EQ(r.walks_by_start_end[1][0], 0u);
  EXPECT_EQ(r.walks, 10000u);
  EXPECT_EQ(r.authorities[0].size(), 3u);
}

TEST(Rwc, CompleteMixedGraphIsNearZero) {
  // Every node is an authority, so a walk ends on its first step at a
  // uniform other node: P(start S | end S) = (n/2 - 1) / (n - 1) and
  // rwc = -1 / (n - 1) exactly in expectation.
  const std::size_t n = 200;
  DigraphBuilder b;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) b.AddEdge(Name(i % 2 ? 'h' : 's', i), Name(j % 2 ? 'h' : 's', j), 3);
    }
  }
  const Digraph g = b.Build();
  RwcOptions options;
  options.k = n / 2;
  options.walks_per_side = 50000;
  options.seed = 11;
  const auto r = RandomWalkControversy(g, SidesByPrefix(g), options);
  EXPECT_LE(std::abs(r.rwc), 0.02);
  EXPECT_NEAR(r.rwc, -1.0 / (n - 1.0), 4.0 * r.rwc_stderr);
  for (int a = 0; a < 2; ++a) {
    for (int e = 0; e < 2; ++e) EXPECT_NEAR(r.p_start_given_end[a][e], 0.5, 0.02);
  }
}

Digraph LeakyCliques(std::uint64_t seed) {
  DigraphBuilder b;
  AddClique(b, 's', 30, 2);
  AddClique(b, 'h', 20, 2);
  Rng rng(seed);
  for (int i = 0; i < 40; ++i) {
    b.AddEdge(Name('s', UniformIndex(rng, 30)), Name('h', UniformIndex(rng, 20)), 2);
  }
  for (int i = 0; i < 10; ++i) {
    b.AddEdge(Name('h', UniformIndex(rng, 20)), Name('s', UniformIndex(rng, 30)), 2);
  }
  return b.Build();
}

TEST(Rwc, SwappingSideLabelsKeepsTheScore) {
  const Digraph g = LeakyCliques(3);
  SideMap sides = SidesByPrefix(g);
  SideMap swapped;
  for (const auto& [user, side] : sides) {
    swapped[user] = side == Side::kSupporter ? Side::kHesitant : Side::kSupporter;
  }
  RwcOptions options;
  options.k = 5;
  options.walks_per_side = 40000;
  const auto a = RandomWalkControversy(g, sides, options);
  options.seed = 99;
  const auto b = RandomWalkControversy(g, swapped, options);
  EXPECT_GT(a.rwc, 0.1);
  EXPECT_LT(a.rwc, 0.95);
  EXPECT_NEAR(a.rwc, b.rwc, 4.0 * std::hypot(a.rwc_stderr, b.rwc_stderr));
  EXPECT_NEAR(a.p_start_given_end[0][0], b.p_start_given_end[1][1],
              4.0 * std::hypot(a.p_start_given_end_stderr[0][0],
                               b.p_start_given_end_stderr[1][1]));
}

TEST(Rwc, ColumnsSumToOneAndRunsAreReproducible) {
  const Digraph g = LeakyCliques(8);
  RwcOptions options;
  options.k = 4;
  options.walks_per_side = 3000;
  options.seed = 5;
  const auto a = RandomWalkControversy(g, SidesByPrefix(g), options);
  for (int end = 0; end < 2; ++end) {
    EXPECT_NEAR(a.p_start_given_end[0][end] + a.p_start_given_end[1][end], 1.0, 1e-12);
  }
  const auto& p = a.p_start_given_end;
  EXPECT_NEAR(a.rwc, p[0][0] * p[1][1] - p[0][1] * p[1][0], 1e-12);
  options.threads = 1;
  const auto b = RandomWalkControversy(g, SidesByPrefix(g), options);
  EXPECT_EQ(a.walks_by_start_end, b.walks_by_start_end);
  EXPECT_EQ(a.rwc, b.rwc);
  EXPECT_EQ(a.authorities, b.authorities);
}

TEST(Rwc, UnassignedNodesBridgeButNeverAbsorb) {
  DigraphBuilder b;
  AddClique(b, 's', 5, 2);
  AddClique(b, 'h', 5, 2);
  // The bridge node is the most retweeted account in the graph.
  for (std::size_t i = 0; i < 5; ++i) {
    b.AddEdge(Name('s', i), "u", 10);
    b.AddEdge(Name('h', i), "u", 10);
  }
  b.AddEdge("u", Name('h', 0), 1);
  const Digraph g = b.Build();
  RwcOptions options;
  options.k = 1;
  options.walks_per_side = 4000;
  const auto r = RandomWalkControversy(g, SidesByPrefix(g), options);
  for (const auto& side : r.authorities) EXPECT_EQ(std::count(side.begin(), side.end(), "u"), 0);
  EXPECT_GT(r.walks_by_start_end[0][1], 0u);  // S walks cross through u
  EXPECT_LT(r.rwc, 1.0);
}

TEST(Rwc, RejectsImpossibleSetups) {
  DigraphBuilder b;
  AddClique(b, 's', 3, 2);
  AddClique(b, 'h', 3, 2);
  const Digraph g = b.Build();
  RwcOptions options;
  options.k = 4;
  EXPECT_THROW(RandomWalkControversy(g, SidesByPrefix(g), options), std::invalid_argument);
  options.k = 0;
  EXPECT_THROW(RandomWalkControversy(g, SidesByPrefix(g), options), std::invalid_argument);

  // H users only retweet into a sink that is no authority.
  DigraphBuilder sink;
  AddClique(sink, 's', 3, 2);
  sink.AddEdge(Name('h', 0), "z", 2);
  sink.AddEdge(Name('h', 1), "z", 2);
  const Digraph trapped = sink.Build();
  options.k = 1;
  EXPECT_THROW(RandomWalkControversy(trapped, SidesByPrefix(trapped), options),
               std::invalid_argument);
}

Digraph Mentions(std::initializer_list<std::tuple<const char*, const char*, int>> edges) {
  DigraphBuilder b;
  for (const auto& [s, t, w] : edges) b.AddEdge(s, t, w);
  return b.Build();
}

TEST(MentionShare, HandCases) {
  const SideMap sides = {{"h1", Side::kHesitant},
                         {"h2", Side::kHesitant},
                         {"s1", Side::kSupporter},
                         {"u", Side::kUnassigned}};
  const auto own = ComputeMentionShare(Mentions({{"h1", "h2", 4}, {"h1", "u", 7}}), sides);
  ASSERT_TRUE(own.rows[1].has_value());
  EXPECT_EQ(*own.rows[1], (std::array<double, 2>{0.0, 1.0}));
  EXPECT_FALSE(own.rows[0].has_value());

  const auto mixed = ComputeMentionShare(
      Mentions({{"h1", "s1", 3}, {"h2", "h1", 1}, {"h1", "x", 5}}), sides);
  EXPECT_EQ(*mixed.rows[1], (std::array<double, 2>{0.75, 0.25}));
  EXPECT_EQ(mixed.weights[1][0], 3);
}

TEST(MentionShare, GeneratorMixingRate) {
  GeneratorSpec spec = DefaultGeneratorSpec();
  spec.seed = 21;
  const auto corpus = GenerateCorpus(spec);
  std::array<std::array<std::int64_t, 2>, 2> totals{};
  for (std::size_t w = 0; w < spec.windows.size(); ++w) {
    std::vector<InteractionRecord> in_window;
    for (const auto& r : corpus.records) {
      if (spec.windows[w].Contains(r.timestamp)) {
        in_window.push_back(r);
      }
    }
    SideMap sides;
    for (const auto& [user, side] : corpus.truth.SidesInWindow(w)) sides[user] = side;
    const auto share = ComputeMentionShare(BuildMentionGraph(in_window), sides);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) totals[a][b] += share.weights[a][b];
    }
  }
  for (int a = 0; a < 2; ++a) {
    const double off = static_cast<double>(totals[a][1 - a]) /
                       static_cast<double>(totals[a][0] + totals[a][1]);
    EXPECT_NEAR(off, 0.30, 0.03) << "side " << a;
  }
}

TEST(MentionShare, RowsSumToOne) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    DigraphBuilder b;
    SideMap sides;
    for (int i = 0; i < 30; ++i) {
      sides["u" + std::to_string(i)] = static_cast<Side>(UniformIndex(rng, 3));
    }
    for (int e = 0; e < 60; ++e) {
      b.AddEdge("u" + std::to_string(UniformIndex(rng, 30)),
                "u" + std::to_string(UniformIndex(rng, 30)), 1 + UniformIndex(rng, 4));
    }
    const auto share = ComputeMentionShare(b.Build(), sides);
    for (const auto& row : share.rows) {
      if (row) {
        EXPECT_NEAR((*row)[0] + (*row)[1], 1.0, 1e-12);
      }
    }
  }
}

TEST(MembershipFlow, HandCases) {
  SideMap first;
  for (int i = 0; i < 60; ++i) first["s" + std::to_string(i)] = Side::kSupporter;
  for (int i = 0; i < 40; ++i) first["h" + std::to_string(i)] = Side::kHesitant;
  const std::vector<std::string> names = {"a", "b"};

  const std::vector<SideMap> same = {first, first};
  const auto stable = MembershipFlow(names, same);
  EXPECT_EQ(*stable.transitions[0].switch_fraction, 0.0);

  SideMap second = first;
  first["x"] = Side::kSupporter;
  first["y"] = Side::kHesitant;
  second["x"] = Side::kHesitant;
  second["y"] = Side::kSupporter;
  const std::vector<SideMap> maps = {first, second};
  const auto flow = MembershipFlow(names, maps);
  const auto& t = flow.transitions[0];
  EXPECT_DOUBLE_EQ(*t.switch_fraction, 2.0 / 102.0);
  EXPECT_EQ(t.counts[0][0], 60u);
  EXPECT_EQ(t.counts[0][1], 1u);
  EXPECT_EQ(t.counts[1][0], 1u);
  EXPECT_EQ(t.counts[1][1], 40u);
  EXPECT_EQ(t.on_side_in_both, 102u);

  EXPECT_THROW(MembershipFlow(std::vector<std::string>{"a"}, std::vector<SideMap>{first}),
               std::invalid_argument);
}

TEST(MembershipFlow, CellsConserveUsers) {
  Rng rng(12);
  const std::vector<std::string> names = {"w0", "w1", "w2", "w3"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SideMap> maps(names.size());
    for (auto& map : maps) {
      for (int u = 0; u < 200; ++u) {
        const auto roll = UniformIndex(rng, 4);
        if (roll < 3) map["u" + std::to_string(u)] = static_cast<Side>(roll);
      }
    }
    const auto flow = MembershipFlow(names, maps);
    ASSERT_EQ(flow.transitions.size(), 3u);
    for (std::size_t t = 0; t < 3; ++t) {
      // Oracle: users on a side in at least one of the two windows.
      auto on_side = [](const SideMap& m, const std::string& u) {
        const auto it = m.find(u);
        return it != m.end() && it->second != Side::kUnassigned;
      };
      std::size_t expected = 0;
      std::array<std::size_t, 3> from_sizes{};
      for (int u = 0; u < 200; ++u) {
        const std::string id = "u" + std::to_string(u);
        expected += on_side(maps[t], id) || on_side(maps[t + 1], id);
        if (on_side(maps[t], id)) ++from_sizes[static_cast<int>(maps[t].at(id))];
      }
      std::size_t total = 0;
      for (const auto& row : flow.transitions[t].counts) {
        for (std::size_t c : row) total += c;
      }
      EXPECT_EQ(total, expected);
      EXPECT_EQ(flow.transitions[t].counts[2][2], 0u);
      for (int s = 0; s < 2; ++s) {
        const auto& row = flow.transitions[t].counts[s];
        EXPECT_EQ(row[0] + row[1] + row[2], from_sizes[s]);
      }
    }
  }
}

TEST(MembershipFlow, Retention) {
  std::vector<SideMap> maps(4);
  maps[0] = {{"a", Side::kHesitant}, {"b", Side::kHesitant}};
  maps[1] = {{"c", Side::kHesitant}, {"d", Side::kSupporter}};
  maps[2] = {{"a", Side::kHesitant}};
  maps[3] = {{"c", Side::kUnassigned}};
  const auto flow = MembershipFlow(std::vector<std::string>{"1", "2", "3", "4"}, maps);
  ASSERT_EQ(flow.retention.size(), 2u);
  EXPECT_EQ(flow.retention[1].early_users, 3u);
  EXPECT_EQ(flow.retention[1].retained, 2u);
  EXPECT_EQ(flow.retention[0].early_users, 1u);
  EXPECT_EQ(flow.retention[0].retained, 0u);
}

TEST(Domains, Normalization) {
  EXPECT_EQ(RegistrableDomain("https://www.example.com/a?b=1"), "example.com");
  EXPECT_EQ(RegistrableDomain("http://user:pw@News.Example.org:8080/x"), "news.example.org");
  EXPECT_EQ(RegistrableDomain("example.net/path"), "example.net");
  EXPECT_EQ(RegistrableDomain("//cdn.example.com"), "cdn.example.com");
  EXPECT_FALSE(RegistrableDomain("not a url").has_value());
  EXPECT_FALSE(RegistrableDomain("https://localhost/").has_value());
  EXPECT_FALSE(RegistrableDomain("").has_value());
  EXPECT_FALSE(RegistrableDomain("ht tp://a.b").has_value());
}

InteractionRecord WithUrls(std::string author, std::vector<std::string> urls) {
  static int next = 0;
  InteractionRecord r;
  r.post_id = std::to_string(++next);
  r.author_id = std::move(author);
  r.urls = std::move(urls);
  return r;
}

TEST(Domains, RankingTiesAndCounts) {
  const SideMap sides = {{"s", Side::kSupporter}, {"h", Side::kHesitant}, {"u", Side::kUnassigned}};
  const std::vector<InteractionRecord> records = {
      WithUrls("s", {"https://b.com/1", "https://a.com/2", "https://www.c.org"}),
      WithUrls("s", {"https://c.org/x", "garbage"}),
      WithUrls("u", {"https://ignored.com"}),
      WithUrls("nobody", {"https://ignored.com"})};
  const auto ranking = RankDomains(records, sides, 2);
  ASSERT_EQ(ranking.top[0].size(), 2u);
  EXPECT_EQ(ranking.top[0][0].domain, "c.org");
  EXPECT_EQ(ranking.top[0][0].count, 2u);
  EXPECT_EQ(ranking.top[0][1].domain, "a.com");  // a.com and b.com tie at 1
  EXPECT_TRUE(ranking.top[1].empty());
  EXPECT_EQ(ranking.total_urls, 5u);
  EXPECT_EQ(ranking.skipped, 1u);
  EXPECT_EQ(ranking.counted[0] + ranking.counted[1] + ranking.skipped, ranking.total_urls);
}

TEST(Domains, GeneratorCountsMatchDirectTally) {
  GeneratorSpec spec = DefaultGeneratorSpec();
  spec.seed = 2;
  const auto corpus = GenerateCorpus(spec);
  SideMap sides;
  for (const auto& [user, side] : corpus.truth.SidesInWindow(0)) sides[user] = side;
  const auto ranking = RankDomains(corpus.records, sides, 1000);
  EXPECT_EQ(ranking.counted[0] + ranking.counted[1] + ranking.skipped, ranking.total_urls);

  std::array<std::map<std::string, std::size_t>, 2> tally;
  for (const auto& r : corpus.records) {
    const auto it = sides.find(r.author_id);
    if (it == sides.end() || it->second == Side::kUnassigned) continue;
    for (const auto& url : r.urls) {
      // Generated URLs are a scheme, an optional "www.", the domain and a path.
      const std::size_t begin = url.find("://") + 3;
      std::string host = url.substr(begin, url.find('/', begin) - begin);
      if (host.rfind("www.", 0) == 0) host.erase(0, 4);
      ++tally[static_cast<int>(it->second)][host];
    }
  }
  for (int s = 0; s < 2; ++s) {
    ASSERT_EQ(ranking.top[s].size(), tally[s].size());
    std::size_t previous = SIZE_MAX;
    for (const auto& d : ranking.top[s]) {
      EXPECT_EQ(d.count, tally[s].at(d.domain));
      EXPECT_LE(d.count, previous);
      previous = d.count;
    }
  }
}

TEST(BuildSideMap, PetsLeaveAndOthersStayUnassigned) {
  DigraphBuilder b;
  for (const char* name : {"a", "b", "c", "d", "e"}) b.AddNode(name);
  const Digraph g = b.Build();
  EnsembleAssignment a;
  a.reference = Partition::FromLabels(std::vector<int>{0, 1, 2, 3, 0});
  a.nodes = {{0, 1.0, 50, true}, {1, 1.0, 50, true}, {2, 1.0, 50, true},
             {3, 1.0, 50, true}, {0, 0.5, 50, false}};
  std::vector<CommunityStance> stances(4);
  stances[0].stance = Stance::kSupporter;
  stances[1].stance = Stance::kHesitant;
  stances[2].stance = Stance::kPets;
  stances[3].stance = Stance::kOther;
  const SideMap sides = BuildSideMap(g, a, stances);
  EXPECT_EQ(sides, (SideMap{{"a", Side::kSupporter},
                            {"b", Side::kHesitant},
                            {"d", Side::kUnassigned},
                            {"e", Side::kUnassigned}}));
  EXPECT_EQ(RestrictToSides(g, sides).names(), (std::vector<std::string>{"a", "b", "d", "e"}));
}

}  // namespace
}  // namespace echoscope
