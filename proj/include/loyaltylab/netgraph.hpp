#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "loyaltylab/corpus.hpp"
#include "loyaltylab/loyalty.hpp"

namespace loyaltylab::netgraph {

using corpus::MonthKey;

/// Undirected simple graph over users, each carrying a monthly activity count.
class InteractionGraph {
 public:
  using Edge = std::pair<int, int>;  // first < second

  InteractionGraph() = default;
  /// Throws std::invalid_argument on self-loops, duplicate edges or bad indices.
  InteractionGraph(std::vector<std::string> users, std::vector<double> activity,
                   std::vector<Edge> edges, std::string community = {}, MonthKey month = {});

  std::size_t node_count() const { return users_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<std::string>& users() const { return users_; }
  const std::vector<double>& activity() const { return activity_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int node) const { return adjacency_[static_cast<std::size_t>(node)]; }
  std::size_t degree(int node) const { return neighbors(node).size(); }
  std::vector<std::size_t> degree_sequence() const;
  bool has_edge(int a, int b) const;

  const std::string& community() const { return community_; }
  MonthKey month() const { return month_; }

  /// Same nodes and labels, different edge set.
  InteractionGraph with_edges(std::vector<Edge> edges) const;

 private:
  std::vector<std::string> users_;
  std::vector<double> activity_;
  std::vector<Edge> edges_;  // sorted
  std::vector<std::vector<int>> adjacency_;  // sorted neighbor lists
  std::string community_;
  MonthKey month_;
};

enum class EdgeMode { Chain, DirectReply };

struct BuildOptions {
  EdgeMode mode = EdgeMode::Chain;
  /// Users need this many comments (any community) in the month's calendar year.
  int min_annual_comments = 50;
  /// Max ancestor distance on a root-to-leaf reply path (chain mode).
  int chain_distance = 2;
};

/// Interaction network of one community-month. Both comments of a pair must
/// be in (community, month); isolated users are not nodes.
InteractionGraph build_graph(const corpus::CorpusStore& store, std::string_view community,
                             MonthKey month, const BuildOptions& options = {});

/// build_graph with the per-year eligibility counts cached across calls.
class GraphBuilder {
 public:
  GraphBuilder(const corpus::CorpusStore& store, BuildOptions options);
  InteractionGraph build(std::string_view community, MonthKey month);

 private:
  const std::map<std::string_view, int>& annual_counts(int year);

  const corpus::CorpusStore& store_;
  BuildOptions options_;
  std::map<int, std::map<std::string_view, int>> annual_;
};

enum class AttributeTransform { Raw, Log1p };

struct GraphStats {
  std::optional<double> density;        // n >= 2
  std::optional<double> avg_clustering; // n >= 3
  std::optional<double> assortativity;  // >= 1 edge and attribute variance > 0
  std::optional<double> gini;           // n >= 1 and positive mean activity
};

double density(const InteractionGraph& g);
double average_clustering(const InteractionGraph& g);
std::optional<double> activity_assortativity(const InteractionGraph& g,
                                             AttributeTransform transform = AttributeTransform::Raw);
/// Gini coefficient sum_ij |x_i - x_j| / (2 n^2 mean).
std::optional<double> gini(const std::vector<double>& values);

GraphStats graph_stats(const InteractionGraph& g,
                       AttributeTransform transform = AttributeTransform::Raw);

/// Degree-preserving null: multiplier * |E| attempted double-edge swaps.
/// {a,b},{c,d} -> {a,d},{c,b} (orientation of the second edge drawn at
/// random) is applied only if it creates no self-loop or parallel edge.
InteractionGraph rewire_null(const InteractionGraph& g, std::uint64_t iterations_multiplier,
                             std::uint64_t seed, std::uint64_t* accepted_swaps = nullptr);

struct NullOptions {
  std::size_t n_null = 10;
  std::uint64_t iterations_multiplier = 10'000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  AttributeTransform transform = AttributeTransform::Raw;
};

struct MonthlyNull {
  MonthKey month;
  std::optional<double> clustering_empirical;
  std::optional<double> clustering_null;  // median over samples
  std::optional<double> assortativity_empirical;
  std::optional<double> assortativity_null;
};

struct RelativeStats {
  std::optional<double> clustering_rel;
  std::optional<double> assortativity_rel;
  std::size_t n_null_samples = 0;
  std::uint64_t seed = 0;
  std::vector<MonthlyNull> months;
};

/// Relative difference of the median monthly empirical statistic to the
/// median monthly null statistic. Each sample's RNG stream is derived from
/// (seed, community, month, sample index).
RelativeStats relative_stats(const std::vector<InteractionGraph>& monthly_graphs,
                             const NullOptions& options);

/// (empirical - null) / |null|; empty when null is zero.
std::optional<double> relative_difference(double empirical, double null_value);

struct MatchedPair {
  std::string loyal;
  std::string nonloyal;
  double gap = 0.0;
};

/// Greedy nearest-neighbour matching without replacement on activity; pairs
/// whose gap exceeds max_gap_sd * SD(activity over all tiered communities)
/// are discarded.
std::vector<MatchedPair> activity_matched_pairs(const std::vector<loyalty::CommunityTier>& tiers,
                                                const std::map<std::string, double>& activity,
                                                double max_gap_sd = 0.1);

/// `user_a<TAB>user_b` per edge.
void write_edge_list(std::ostream& out, const InteractionGraph& g);
/// `user<TAB>activity` per node.
void write_node_attributes(std::ostream& out, const InteractionGraph& g);
/// Reads the two files above back into a graph.
InteractionGraph read_graph(std::istream& edges, std::istream& nodes);

}  // namespace loyaltylab::netgraph
