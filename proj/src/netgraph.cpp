#include "loyaltylab/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "loyaltylab/csv.hpp"
#include "loyaltylab/parallel.hpp"
#include "loyaltylab/rng.hpp"
#include "loyaltylab/statkit.hpp"

namespace loyaltylab::netgraph {

namespace {

InteractionGraph::Edge normalized(int a, int b) { return a < b ? InteractionGraph::Edge{a, b} : InteractionGraph::Edge{b, a}; }

std::uint64_t edge_key(int a, int b) {
  auto e = normalized(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.first)) << 32) |
         static_cast<std::uint32_t>(e.second);
}

}  // namespace

InteractionGraph::InteractionGraph(std::vector<std::string> users, std::vector<double> activity,
                                   std::vector<Edge> edges, std::string community, MonthKey month)
    : users_(std::move(users)),
      activity_(std::move(activity)),
      community_(std::move(community)),
      month_(month) {
  if (activity_.size() != users_.size()) {
    throw std::invalid_argument("InteractionGraph: activity size != node count");
  }
  const int n = static_cast<int>(users_.size());
  edges_.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("InteractionGraph: bad node index");
    if (a == b) throw std::invalid_argument("InteractionGraph: self-loop");
    edges_.push_back(normalized(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    throw std::invalid_argument("InteractionGraph: parallel edge");
  }
  adjacency_.assign(users_.size(), {});
  for (auto [a, b] : edges_) {
    adjacency_[static_cast<std::size_t>(a)].push_back(b);
    adjacency_[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
}

std::vector<std::size_t> InteractionGraph::degree_sequence() const {
  std::vector<std::size_t> d(adjacency_.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = adjacency_[i].size();
  return d;
}

bool InteractionGraph::has_edge(int a, int b) const {
  const auto& nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

InteractionGraph InteractionGraph::with_edges(std::vector<Edge> edges) const {
  return InteractionGraph(users_, activity_, std::move(edges), community_, month_);
}

InteractionGraph build_graph(const corpus::CorpusStore& store, std::string_view community,
                             MonthKey month, const BuildOptions& options) {
  return GraphBuilder(store, options).build(community, month);
}

GraphBuilder::GraphBuilder(const corpus::CorpusStore& store, BuildOptions options)
    : store_(store), options_(options) {}

const std::map<std::string_view, int>& GraphBuilder::annual_counts(int year) {
  auto [it, inserted] = annual_.try_emplace(year);
  if (inserted) {
    for (const auto& c : store_.comments()) {
      if (c.month().year == year) ++it->second[c.author];
    }
  }
  return it->second;
}

InteractionGraph GraphBuilder::build(std::string_view community, MonthKey month) {
  const corpus::CorpusStore& store = store_;
  const BuildOptions& options = options_;
  const auto comments = store.comments();
  const auto in_month = store.comments_in(community, month);
  if (in_month.empty()) return InteractionGraph({}, {}, {}, std::string(community), month);

  // Eligibility: comments anywhere in the calendar year.
  const auto& annual = annual_counts(month.year);
  auto eligible = [&](std::string_view author) {
    auto it = annual.find(author);
    return it != annual.end() && it->second >= options.min_annual_comments;
  };

  const int max_distance = options.mode == EdgeMode::DirectReply ? 1 : options.chain_distance;
  std::set<std::pair<std::string_view, std::string_view>> pairs;
  for (std::size_t idx : in_month) {
    const corpus::Comment& c = comments[idx];
    if (!eligible(c.author)) continue;
    const corpus::Comment* ancestor = &c;
    for (int dist = 1; dist <= max_distance; ++dist) {
      if (ancestor->is_top_level()) break;
      ancestor = store.find_comment(*ancestor->parent_id);
      if (ancestor == nullptr) break;
      if (ancestor->community != community || ancestor->month() != month) continue;
      if (ancestor->author == c.author || !eligible(ancestor->author)) continue;
      std::string_view a = c.author, b = ancestor->author;
      pairs.insert(a < b ? std::pair{a, b} : std::pair{b, a});
    }
  }

  std::set<std::string_view> nodes;
  for (const auto& [a, b] : pairs) {
    nodes.insert(a);
    nodes.insert(b);
  }
  std::vector<std::string> users(nodes.begin(), nodes.end());
  std::map<std::string_view, int> index;
  for (std::size_t i = 0; i < users.size(); ++i) index[users[i]] = static_cast<int>(i);
  std::vector<double> activity(users.size(), 0.0);
  for (std::size_t idx : in_month) {
    auto it = index.find(comments[idx].author);
    if (it != index.end()) activity[static_cast<std::size_t>(it->second)] += 1.0;
  }
  std::vector<InteractionGraph::Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) edges.emplace_back(index[a], index[b]);
  return InteractionGraph(std::move(users), std::move(activity), std::move(edges),
                          std::string(community), month);
}

double density(const InteractionGraph& g) {
  const double n = static_cast<double>(g.node_count());
  if (n < 2) throw std::invalid_argument("density: fewer than 2 nodes");
  return static_cast<double>(g.edge_count()) / (n * (n - 1.0) / 2.0);
}

double average_clustering(const InteractionGraph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) throw std::invalid_argument("average_clustering: empty graph");
  double sum = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const auto& nb = g.neighbors(static_cast<int>(v));
    const std::size_t d = nb.size();
    if (d < 2) continue;
    std::size_t links = 0;
    for (std::size_t i = 0; i < d; ++i) {
      // Neighbours of nb[i] that are also neighbours of v and come after it.
      const auto& other = g.neighbors(nb[i]);
      auto it = std::upper_bound(other.begin(), other.end(), nb[i]);
      auto jt = nb.begin() + static_cast<std::ptrdiff_t>(i) + 1;
      while (it != other.end() && jt != nb.end()) {
        if (*it < *jt) ++it;
        else if (*jt < *it) ++jt;
        else {
          ++links;
          ++it;
          ++jt;
        }
      }
    }
    sum += 2.0 * static_cast<double>(links) / (static_cast<double>(d) * static_cast<double>(d - 1));
  }
  return sum / static_cast<double>(n);
}

std::optional<double> activity_assortativity(const InteractionGraph& g, AttributeTransform transform) {
  if (g.edge_count() == 0) return std::nullopt;
  auto attr = [&](int v) {
    const double a = g.activity()[static_cast<std::size_t>(v)];
    return transform == AttributeTransform::Log1p ? std::log1p(a) : a;
  };
  std::vector<double> x, y;
  x.reserve(2 * g.edge_count());
  y.reserve(2 * g.edge_count());
  for (auto [a, b] : g.edges()) {
    x.push_back(attr(a));
    y.push_back(attr(b));
    x.push_back(attr(b));
    y.push_back(attr(a));
  }
  if (statkit::stddev(x) == 0.0) return std::nullopt;
  return statkit::pearson(x, y);
}

std::optional<double> gini(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double total = 0.0, weighted = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    total += v[i];
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * v[i];
  }
  if (!(total > 0.0)) return std::nullopt;
  return weighted / (n * total);
}

GraphStats graph_stats(const InteractionGraph& g, AttributeTransform transform) {
  GraphStats s;
  if (g.node_count() >= 2) s.density = density(g);
  if (g.node_count() >= 3) s.avg_clustering = average_clustering(g);
  s.assortativity = activity_assortativity(g, transform);
  s.gini = gini(g.activity());
  return s;
}

InteractionGraph rewire_null(const InteractionGraph& g, std::uint64_t iterations_multiplier,
                             std::uint64_t seed, std::uint64_t* accepted_swaps) {
  std::vector<InteractionGraph::Edge> edges = g.edges();
  std::uint64_t accepted = 0;
  if (edges.size() >= 2) {
    std::unordered_set<std::uint64_t> present;
    present.reserve(edges.size() * 2);
    for (auto [a, b] : edges) present.insert(edge_key(a, b));
    Rng rng(seed);
    const std::uint64_t attempts = iterations_multiplier * edges.size();
    for (std::uint64_t t = 0; t < attempts; ++t) {
      const std::size_t i = rng.uniform_index(edges.size());
      const std::size_t j = rng.uniform_index(edges.size());
      if (i == j) continue;
      auto [a, b] = edges[i];
      auto [c, d] = edges[j];
      if (rng.bernoulli(0.5)) std::swap(c, d);
      // {a,b},{c,d} -> {a,d},{c,b}
      if (a == d || c == b) continue;
      const std::uint64_t k1 = edge_key(a, d), k2 = edge_key(c, b);
      if (k1 == k2 || present.contains(k1) || present.contains(k2)) continue;
      present.erase(edge_key(a, b));
      present.erase(edge_key(c, d));
      present.insert(k1);
      present.insert(k2);
      edges[i] = normalized(a, d);
      edges[j] = normalized(c, b);
      ++accepted;
    }
  }
  if (accepted_swaps) *accepted_swaps = accepted;
  return g.with_edges(std::move(edges));
}

std::optional<double> relative_difference(double empirical, double null_value) {
  if (null_value == 0.0) return std::nullopt;
  return (empirical - null_value) / std::fabs(null_value);
}

namespace {

std::optional<double> median_of(const std::vector<std::optional<double>>& v) {
  std::vector<double> vals;
  for (const auto& x : v) {
    if (x) vals.push_back(*x);
  }
  if (vals.empty()) return std::nullopt;
  return statkit::median(std::move(vals));
}

std::optional<double> clustering_of(const InteractionGraph& g) {
  if (g.node_count() < 3) return std::nullopt;
  return average_clustering(g);
}

}  // namespace

RelativeStats relative_stats(const std::vector<InteractionGraph>& monthly_graphs,
                             const NullOptions& options) {
  RelativeStats out;
  out.n_null_samples = options.n_null;
  out.seed = options.seed;
  const std::size_t n_graphs = monthly_graphs.size();
  const std::size_t n_samples = options.n_null;

  std::vector<std::optional<double>> null_clustering(n_graphs * n_samples);
  std::vector<std::optional<double>> null_assort(n_graphs * n_samples);
  parallel_for(n_graphs * n_samples, options.threads, [&](std::size_t task) {
    const InteractionGraph& g = monthly_graphs[task / n_samples];
    const std::size_t sample = task % n_samples;
    std::uint64_t seed = derive_seed(options.seed, g.community());
    seed = derive_seed(seed, static_cast<std::uint64_t>(g.month().ordinal()));
    seed = derive_seed(seed, static_cast<std::uint64_t>(sample));
    const InteractionGraph null = rewire_null(g, options.iterations_multiplier, seed);
    null_clustering[task] = clustering_of(null);
    null_assort[task] = activity_assortativity(null, options.transform);
  });

  std::vector<std::optional<double>> emp_c, null_c, emp_a, null_a;
  for (std::size_t gi = 0; gi < n_graphs; ++gi) {
    const InteractionGraph& g = monthly_graphs[gi];
    MonthlyNull m;
    m.month = g.month();
    m.clustering_empirical = clustering_of(g);
    m.assortativity_empirical = activity_assortativity(g, options.transform);
    auto slice = [&](const std::vector<std::optional<double>>& v) {
      return std::vector<std::optional<double>>(
          v.begin() + static_cast<std::ptrdiff_t>(gi * n_samples),
          v.begin() + static_cast<std::ptrdiff_t>((gi + 1) * n_samples));
    };
    m.clustering_null = median_of(slice(null_clustering));
    m.assortativity_null = median_of(slice(null_assort));
    if (m.clustering_empirical && m.clustering_null) {
      emp_c.push_back(m.clustering_empirical);
      null_c.push_back(m.clustering_null);
    }
    if (m.assortativity_empirical && m.assortativity_null) {
      emp_a.push_back(m.assortativity_empirical);
      null_a.push_back(m.assortativity_null);
    }
    out.months.push_back(m);
  }
  if (auto e = median_of(emp_c), n = median_of(null_c); e && n) {
    out.clustering_rel = relative_difference(*e, *n);
  }
  if (auto e = median_of(emp_a), n = median_of(null_a); e && n) {
    out.assortativity_rel = relative_difference(*e, *n);
  }
  return out;
}

std::vector<MatchedPair> activity_matched_pairs(const std::vector<loyalty::CommunityTier>& tiers,
                                                const std::map<std::string, double>& activity,
                                                double max_gap_sd) {
  std::vector<std::pair<std::string, double>> loyal, nonloyal;
  std::vector<double> all;
  for (const auto& t : tiers) {
    auto it = activity.find(t.community);
    if (it == activity.end()) continue;
    all.push_back(it->second);
    if (t.tier == loyalty::Tier::Loyal) loyal.emplace_back(t.community, it->second);
    if (t.tier == loyalty::Tier::NonLoyal) nonloyal.emplace_back(t.community, it->second);
  }
  std::vector<MatchedPair> candidates;
  for (const auto& [l, la] : loyal) {
    for (const auto& [u, ua] : nonloyal) candidates.push_back({l, u, std::fabs(la - ua)});
  }
  std::sort(candidates.begin(), candidates.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return std::tie(a.gap, a.loyal, a.nonloyal) < std::tie(b.gap, b.loyal, b.nonloyal);
  });
  const double limit = max_gap_sd * statkit::stddev(all);
  std::set<std::string> used_l, used_u;
  std::vector<MatchedPair> out;
  for (const auto& c : candidates) {
    if (used_l.contains(c.loyal) || used_u.contains(c.nonloyal)) continue;
    used_l.insert(c.loyal);
    used_u.insert(c.nonloyal);
    if (c.gap <= limit) out.push_back(c);
  }
  return out;
}

void write_edge_list(std::ostream& out, const InteractionGraph& g) {
  for (auto [a, b] : g.edges()) {
    out << g.users()[static_cast<std::size_t>(a)] << '\t' << g.users()[static_cast<std::size_t>(b)] << '\n';
  }
}

void write_node_attributes(std::ostream& out, const InteractionGraph& g) {
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    out << g.users()[i] << '\t' << csv::num(g.activity()[i]) << '\n';
  }
}

InteractionGraph read_graph(std::istream& edges_in, std::istream& nodes_in) {
  std::vector<std::string> users;
  std::vector<double> activity;
  std::map<std::string, int> index;
  std::string line;
  while (std::getline(nodes_in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::invalid_argument("node line without tab: " + line);
    std::string user = line.substr(0, tab);
    index[user] = static_cast<int>(users.size());
    users.push_back(std::move(user));
    activity.push_back(std::stod(line.substr(tab + 1)));
  }
  std::vector<InteractionGraph::Edge> edges;
  while (std::getline(edges_in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::invalid_argument("edge line without tab: " + line);
    auto a = index.find(line.substr(0, tab));
    auto b = index.find(line.substr(tab + 1));
    if (a == index.end() || b == index.end()) throw std::invalid_argument("edge references unknown user: " + line);
    edges.emplace_back(a->second, b->second);
  }
  return InteractionGraph(std::move(users), std::move(activity), std::move(edges));
}

}  // namespace loyaltylab::netgraph
