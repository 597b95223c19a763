#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "corpus_builder.hpp"
#include "doctest.h"
#include "loyaltylab/netgraph.hpp"
#include "loyaltylab/rng.hpp"

using namespace loyaltylab;
using namespace loyaltylab::netgraph;
using corpus::MonthKey;

namespace {

const MonthKey kMonth{2014, 4};

BuildOptions open_options(EdgeMode mode = EdgeMode::Chain) {
  BuildOptions o;
  o.mode = mode;
  o.min_annual_comments = 1;
  return o;
}

std::set<std::pair<std::string, std::string>> edge_names(const InteractionGraph& g) {
  std::set<std::pair<std::string, std::string>> out;
  for (auto [a, b] : g.edges()) {
    std::string x = g.users()[static_cast<std::size_t>(a)], y = g.users()[static_cast<std::size_t>(b)];
    if (y < x) std::swap(x, y);
    out.insert({x, y});
  }
  return out;
}

InteractionGraph graph(std::size_t n, std::vector<InteractionGraph::Edge> edges, std::vector<double> activity = {}) {
  std::vector<std::string> users;
  for (std::size_t i = 0; i < n; ++i) users.push_back("n" + std::to_string(i));
  if (activity.empty()) activity.assign(n, 1.0);
  return InteractionGraph(users, activity, std::move(edges));
}

InteractionGraph random_graph(std::size_t n, double p, std::uint64_t seed) {
  Rng r(seed);
  std::vector<InteractionGraph::Edge> edges;
  std::vector<double> activity;
  for (std::size_t i = 0; i < n; ++i) {
    activity.push_back(static_cast<double>(1 + r.uniform_index(20)));
    for (std::size_t j = i + 1; j < n; ++j) {
      if (r.bernoulli(p)) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return graph(n, edges, activity);
}

}  // namespace

TEST_CASE("chain edges reach two ancestors") {
  testsupport::CorpusBuilder b;
  const auto a = b.top("A", "sub", kMonth);
  const auto bb = b.reply_to("B", a);
  const auto c = b.reply_to("C", bb);
  b.reply_to("D", c);
  const auto store = b.build();
  const auto chain = build_graph(store, "sub", kMonth, open_options());
  CHECK(edge_names(chain) ==
        std::set<std::pair<std::string, std::string>>{{"A", "B"}, {"A", "C"}, {"B", "C"}, {"B", "D"}, {"C", "D"}});
  const auto direct = build_graph(store, "sub", kMonth, open_options(EdgeMode::DirectReply));
  CHECK(edge_names(direct) == std::set<std::pair<std::string, std::string>>{{"A", "B"}, {"B", "C"}, {"C", "D"}});
  CHECK(chain.activity() == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("consecutive comments by one user create no self-loop") {
  testsupport::CorpusBuilder b;
  const auto a = b.top("A", "sub", kMonth);
  const auto a2 = b.reply_to("A", a);
  b.reply_to("B", a2);
  const auto g = build_graph(b.build(), "sub", kMonth, open_options());
  CHECK(edge_names(g) == std::set<std::pair<std::string, std::string>>{{"A", "B"}});
  CHECK(g.activity() == std::vector<double>{2, 1});
}

TEST_CASE("users below the annual comment count are dropped") {
  testsupport::CorpusBuilder b;
  const auto a = b.top("A", "sub", kMonth);
  b.reply_to("B", a);
  b.tops("A", "other", MonthKey{2014, 9}, 3);
  BuildOptions o = open_options();
  o.min_annual_comments = 3;
  CHECK(build_graph(b.build(), "sub", kMonth, o).node_count() == 0);
  o.min_annual_comments = 1;
  CHECK(build_graph(b.build(), "sub", kMonth, o).node_count() == 2);
}

TEST_CASE("graph constructor rejects self-loops and duplicates") {
  CHECK_THROWS_AS(graph(3, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(graph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(graph(3, {{0, 5}}), std::invalid_argument);
}

TEST_CASE("triangle and path statistics") {
  const auto k3 = graph(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(density(k3) == 1.0);
  CHECK(average_clustering(k3) == 1.0);
  const auto path = graph(3, {{0, 1}, {1, 2}});
  CHECK(average_clustering(path) == 0.0);
  CHECK(density(path) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("gini and assortativity examples") {
  CHECK(*gini({1, 1, 2}) == doctest::Approx(1.0 / 6.0));
  CHECK(*gini({3, 3, 3}) == 0.0);
  CHECK_FALSE(gini({0, 0}));
  CHECK_FALSE(gini({}));
  const auto edge = graph(2, {{0, 1}}, {1, 2});
  CHECK(*activity_assortativity(edge) == doctest::Approx(-1.0));
  CHECK_FALSE(activity_assortativity(graph(2, {{0, 1}}, {4, 4})));
  CHECK_FALSE(activity_assortativity(graph(2, {}, {1, 2})));
}

TEST_CASE("log1p transform changes assortativity input only") {
  const auto g = graph(4, {{0, 1}, {1, 2}, {2, 3}}, {1, 10, 100, 5});
  const auto raw = activity_assortativity(g, AttributeTransform::Raw);
  const auto logged = activity_assortativity(g, AttributeTransform::Log1p);
  REQUIRE(raw);
  REQUIRE(logged);
  CHECK(*raw != doctest::Approx(*logged));
  const auto stats = graph_stats(g, AttributeTransform::Log1p);
  CHECK(stats.assortativity == logged);
  CHECK(stats.gini == gini(g.activity()));
}

TEST_CASE("rewiring preserves degree sequences") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto g = random_graph(12 + s % 20, 0.2, s);
    std::uint64_t accepted = 0;
    const auto null = rewire_null(g, 50, s, &accepted);
    CHECK(null.degree_sequence() == g.degree_sequence());
    CHECK(null.users() == g.users());
    CHECK(null.edge_count() == g.edge_count());
    for (auto [a, b] : null.edges()) CHECK(a < b);
  }
}

TEST_CASE("triangle admits no swap") {
  const auto k3 = graph(3, {{0, 1}, {1, 2}, {0, 2}});
  std::uint64_t accepted = 7;
  const auto null = rewire_null(k3, 1000, 1, &accepted);
  CHECK(accepted == 0);
  CHECK(null.edges() == k3.edges());
}

TEST_CASE("4-cycle rewires among the 2-regular graphs on four nodes") {
  // Enumerate every simple graph on 4 labeled nodes with all degrees 2.
  std::set<std::vector<InteractionGraph::Edge>> two_regular;
  const std::vector<InteractionGraph::Edge> all{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (int mask = 0; mask < 64; ++mask) {
    std::vector<InteractionGraph::Edge> e;
    int deg[4] = {0, 0, 0, 0};
    for (int i = 0; i < 6; ++i) {
      if (mask & (1 << i)) {
        e.push_back(all[static_cast<std::size_t>(i)]);
        ++deg[all[static_cast<std::size_t>(i)].first];
        ++deg[all[static_cast<std::size_t>(i)].second];
      }
    }
    if (deg[0] == 2 && deg[1] == 2 && deg[2] == 2 && deg[3] == 2) two_regular.insert(e);
  }
  REQUIRE(two_regular.size() == 3);
  const auto cycle = graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  std::set<std::vector<InteractionGraph::Edge>> reached;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto null = rewire_null(cycle, 10, s);
    CHECK(two_regular.contains(null.edges()));
    reached.insert(null.edges());
  }
  CHECK(reached.size() == 3);
}

TEST_CASE("relative difference arithmetic") {
  CHECK(*relative_difference(0.3, 0.2) == doctest::Approx(0.5));
  CHECK(*relative_difference(0.1, -0.2) == doctest::Approx(1.5));
  CHECK_FALSE(relative_difference(0.3, 0.0));
}

TEST_CASE("graphs that admit no swap have relative stats of zero") {
  std::vector<InteractionGraph> months;
  for (int m = 1; m <= 3; ++m) {
    months.push_back(InteractionGraph({"a", "b", "c", "d"}, {1, 2, 3, 5}, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}},
                                      "sub", MonthKey{2014, m}));
  }
  NullOptions o;
  o.n_null = 3;
  o.iterations_multiplier = 20;
  const auto rel = relative_stats(months, o);
  REQUIRE(rel.clustering_rel);
  CHECK(*rel.clustering_rel == 0.0);
  REQUIRE(rel.assortativity_rel);
  CHECK(*rel.assortativity_rel == 0.0);
  CHECK(rel.months.size() == 3);
}

TEST_CASE("planted cliques exceed the configuration-model clustering") {
  // Ten 5-cliques joined in a ring by single edges.
  std::vector<InteractionGraph::Edge> edges;
  const int k = 5, cliques = 10;
  for (int c = 0; c < cliques; ++c) {
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) edges.emplace_back(c * k + i, c * k + j);
    }
    const int next = ((c + 1) % cliques) * k;
    edges.emplace_back(std::min(c * k, next + 1), std::max(c * k, next + 1));
  }
  std::vector<std::string> users;
  for (int i = 0; i < k * cliques; ++i) users.push_back("u" + std::to_string(i));
  const InteractionGraph g(users, std::vector<double>(users.size(), 1.0), edges, "sub", kMonth);
  const double empirical = average_clustering(g);
  NullOptions o;
  o.n_null = 5;
  o.iterations_multiplier = 50;
  o.seed = 4;
  const auto rel = relative_stats({g}, o);
  REQUIRE(rel.months.size() == 1);
  CHECK(*rel.months[0].clustering_empirical == empirical);
  const double null = *rel.months[0].clustering_null;
  CHECK(null < empirical);
  CHECK(*rel.clustering_rel == doctest::Approx((empirical - null) / std::fabs(null)));
  CHECK(*rel.clustering_rel > 0.0);
}

TEST_CASE("relative stats do not depend on thread count") {
  std::vector<InteractionGraph> months;
  for (int m = 1; m <= 4; ++m) {
    auto g = random_graph(40, 0.15, static_cast<std::uint64_t>(m));
    months.push_back(InteractionGraph(g.users(), g.activity(), g.edges(), "sub", MonthKey{2014, m}));
  }
  NullOptions o;
  o.n_null = 4;
  o.iterations_multiplier = 10;
  o.seed = 8;
  const auto one = relative_stats(months, o);
  o.threads = 4;
  const auto four = relative_stats(months, o);
  CHECK(one.clustering_rel == four.clustering_rel);
  CHECK(one.assortativity_rel == four.assortativity_rel);
}

namespace {

std::vector<loyalty::CommunityTier> tiers_of(const std::vector<std::string>& loyal,
                                             const std::vector<std::string>& nonloyal) {
  std::vector<loyalty::CommunityTier> t;
  for (const auto& c : loyal) t.push_back({c, 0.9, loyalty::Tier::Loyal});
  for (const auto& c : nonloyal) t.push_back({c, 0.1, loyalty::Tier::NonLoyal});
  return t;
}

}  // namespace

TEST_CASE("matching examples") {
  auto exact = activity_matched_pairs(tiers_of({"a"}, {"b"}), {{"a", 2.0}, {"b", 2.0}});
  REQUIRE(exact.size() == 1);
  CHECK(exact[0].loyal == "a");
  CHECK(exact[0].nonloyal == "b");
  CHECK(activity_matched_pairs(tiers_of({"a"}, {"b"}), {{"a", 2.0}, {"b", 9.0}}).empty());
}

TEST_CASE("3x3 matching equals exhaustive minimum-gap greedy") {
  Rng r(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, double> activity;
    for (const char* c : {"l0", "l1", "l2", "n0", "n1", "n2"}) activity[c] = std::round(r.uniform01() * 20) / 2;
    const double max_gap_sd = 0.05 + r.uniform01();
    const auto got = activity_matched_pairs(tiers_of({"l0", "l1", "l2"}, {"n0", "n1", "n2"}), activity, max_gap_sd);

    // Oracle: repeatedly take the globally smallest (gap, loyal, nonloyal).
    std::vector<double> all;
    for (const auto& [c, v] : activity) all.push_back(v);
    double m = 0, ss = 0;
    for (double v : all) m += v / 6;
    for (double v : all) ss += (v - m) * (v - m);
    const double limit = max_gap_sd * std::sqrt(ss / 5);
    std::set<std::string> left_l{"l0", "l1", "l2"}, left_n{"n0", "n1", "n2"};
    std::vector<std::pair<std::string, std::string>> expected;
    while (!left_l.empty()) {
      std::tuple<double, std::string, std::string> best{1e300, "", ""};
      for (const auto& l : left_l) {
        for (const auto& n : left_n) best = std::min(best, {std::fabs(activity[l] - activity[n]), l, n});
      }
      left_l.erase(std::get<1>(best));
      left_n.erase(std::get<2>(best));
      if (std::get<0>(best) <= limit) expected.emplace_back(std::get<1>(best), std::get<2>(best));
    }
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].loyal == expected[i].first);
      CHECK(got[i].nonloyal == expected[i].second);
    }
  }
}

TEST_CASE("edge list and attributes round trip") {
  const auto g = random_graph(15, 0.3, 2);
  std::stringstream edges, nodes;
  write_edge_list(edges, g);
  write_node_attributes(nodes, g);
  const auto back = read_graph(edges, nodes);
  CHECK(back.users() == g.users());
  CHECK(back.activity() == g.activity());
  CHECK(back.edges() == g.edges());
}
