#include "loyaltylab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "loyaltylab/csv.hpp"
#include "loyaltylab/rng.hpp"
#include "loyaltylab/statkit.hpp"
#include "loyaltylab/textfeat.hpp"

namespace loyaltylab::pipeline {

namespace {

using corpus::MonthKey;
using csv::num;

class Reports {
 public:
  Reports(const RunConfig& config, CommandResult& result) : config_(config), result_(result) {
    std::error_code ec;
    fs::create_directories(config.paths.output_dir, ec);
    if (ec) throw InputError("cannot create output directory " + config.paths.output_dir.string());
    preamble_ = "# loyaltylab config_hash=" + config.hash() + " seed=" + std::to_string(config.seed) +
                " flags=" + config.flags() + "\n";
  }

  void write(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<std::string>>& rows) {
    const fs::path path = config_.paths.output_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << preamble_ << csv::row(header);
    for (const auto& r : rows) out << csv::row(r);
    result_.outputs.push_back(path);
  }

 private:
  const RunConfig& config_;
  CommandResult& result_;
  std::string preamble_;
};

void warn(CommandResult& r, std::string message) {
  std::cerr << "warning: " << message << '\n';
  r.warnings.push_back(std::move(message));
}

void finish(CommandResult& r) { r.exit_code = r.warnings.empty() ? 0 : 2; }

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw InputError(std::string("config: paths.") + what + " is not set");
  if (!fs::is_regular_file(p)) throw InputError(std::string(what) + " file not found: " + p.string());
}

corpus::CorpusStore load_store(const RunConfig& config, CommandResult& result,
                               corpus::IngestStats* stats_out = nullptr) {
  require_file(config.paths.comments, "comments");
  require_file(config.paths.posts, "posts");
  corpus::IngestStats stats;
  auto store = corpus::ingest_files(config.paths.comments, config.paths.posts, stats);
  if (stats.skipped() > 0) {
    warn(result, std::to_string(stats.skipped()) + " malformed records skipped" +
                     (stats.diagnostics.empty() ? "" : " (first: " + stats.diagnostics.front() + ")"));
  }
  if (config.min_commenters_per_month > 0) {
    store = corpus::filter_communities(store, config.min_commenters_per_month);
  }
  if (stats_out) *stats_out = stats;
  return store;
}

textfeat::Lexicons lexicons(const RunConfig& config) {
  if (config.paths.lexicons.empty()) return textfeat::Lexicons::defaults();
  return textfeat::load_lexicons(config.paths.lexicons);
}

std::string str(std::size_t v) { return std::to_string(v); }
std::string str(int v) { return std::to_string(v); }

std::string p_cell(const statkit::TestResult& t) { return num(t.p_value); }

std::optional<double> median_defined(const std::vector<std::optional<double>>& v) {
  std::vector<double> d;
  for (const auto& x : v) {
    if (x) d.push_back(*x);
  }
  if (d.empty()) return std::nullopt;
  return statkit::median(std::move(d));
}

// Mean distinct commenters per active month.
double commenters_per_month(const corpus::CorpusStore& store, std::string_view community) {
  std::map<MonthKey, std::set<std::string_view>> by_month;
  for (std::size_t idx : store.comments_in(community)) {
    const auto& c = store.comments()[idx];
    by_month[c.month()].insert(c.author);
  }
  if (by_month.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [m, users] : by_month) total += static_cast<double>(users.size());
  return total / static_cast<double>(by_month.size());
}

struct LoyaltyState {
  corpus::ProfileTable profiles;
  std::vector<loyalty::LoyaltyLabel> labels;
  std::size_t preference_ties = 0;
  std::vector<loyalty::CommunityLoyaltyReport> reports;  // plurality mode
  std::optional<std::vector<loyalty::CommunityTier>> tiers;
};

LoyaltyState compute_loyalty(const RunConfig& config, const corpus::CorpusStore& store, CommandResult& result) {
  LoyaltyState s;
  s.profiles = corpus::build_profiles(store);
  s.labels = loyalty::label_users(s.profiles, config.loyalty, &s.preference_ties);
  auto rate_params = config.loyalty;
  rate_params.relaxed_preference = true;
  s.reports = loyalty::all_loyalty_reports(s.profiles, rate_params);
  try {
    s.tiers = loyalty::tier_communities(s.reports, config.min_loyal_users);
  } catch (const std::invalid_argument& e) {
    warn(result, std::string("tiering skipped: ") + e.what());
  }
  return s;
}

std::vector<std::vector<std::string>> read_categories(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("categories file not found: " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = csv::split(line);
    if (cells.size() != 2) throw InputError("categories file " + path.string() + ": expected community,category");
    if (rows.empty() && cells[0] == "community") continue;
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

CommandResult cmd_ingest(const RunConfig& config) {
  CommandResult result;
  Reports reports(config, result);
  corpus::IngestStats stats;
  const auto store = load_store(config, result, &stats);
  reports.write("ingest_summary.csv", {"metric", "value"},
                {{"comments_loaded", str(stats.comments_loaded)},
                 {"posts_loaded", str(stats.posts_loaded)},
                 {"comments_skipped", str(stats.comments_skipped)},
                 {"posts_skipped", str(stats.posts_skipped)},
                 {"deleted_author_comments_dropped", str(stats.deleted_dropped)},
                 {"comments_kept", str(store.comments().size())},
                 {"posts_kept", str(store.posts().size())},
                 {"communities_kept", str(store.communities().size())}});
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : store.communities()) {
    std::set<MonthKey> months;
    std::size_t top = 0;
    for (std::size_t idx : store.comments_in(c)) {
      const auto& cm = store.comments()[idx];
      months.insert(cm.month());
      top += cm.is_top_level();
    }
    std::size_t posts = 0;
    for (auto m : months) posts += store.posts_in(c, m).size();
    rows.push_back({c, str(store.comments_in(c).size()), str(top), str(posts), str(months.size()),
                    num(commenters_per_month(store, c))});
  }
  reports.write("communities.csv",
                {"community", "comments", "top_level_comments", "posts", "active_months", "commenters_per_month"},
                rows);
  finish(result);
  return result;
}

CommandResult cmd_loyalty(const RunConfig& config) {
  CommandResult result;
  Reports reports(config, result);
  const auto store = load_store(config, result);
  const auto state = compute_loyalty(config, store, result);
  if (state.preference_ties > 0) {
    std::cerr << "note: " << state.preference_ties << " equal-share preference ties broken by name\n";
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto& l : state.labels) {
    rows.push_back({l.author, l.community, l.month.str(), l.kind == loyalty::LabelKind::Loyal ? "loyal" : "vagrant"});
  }
  reports.write("labels.csv", {"author", "community", "month", "kind"}, rows);

  rows.clear();
  for (const auto& r : state.reports) {
    rows.push_back({r.community, r.month.str(), str(r.n_preferrers), str(r.n_sustained), str(r.n_left_platform),
                    num(r.loyalty_rate)});
  }
  reports.write("loyalty_rates.csv",
                {"community", "month", "n_preferrers", "n_sustained", "n_left_platform", "loyalty_rate"}, rows);

  rows.clear();
  if (state.tiers) {
    for (const auto& t : *state.tiers) {
      rows.push_back({t.community, num(t.mean_loyalty_rate), std::string(loyalty::to_string(t.tier))});
    }
  }
  reports.write("tiers.csv", {"community", "pooled_loyalty_rate", "tier"}, rows);

  const loyalty::LabelIndex index(state.labels);
  rows.clear();
  std::vector<double> tenure, rate;
  for (const auto& c : store.communities()) {
    const auto d = loyalty::community_descriptives(store, index, c);
    const auto pooled = loyalty::pooled_rate(state.reports, c);
    rows.push_back({c, num(d.commenters_per_month), num(d.comments_per_user), num(d.thread_length_median),
                    num(d.thread_unique_contributors_median), num(d.loyal_tenure_mean), num(pooled)});
    if (d.loyal_tenure_mean && pooled) {
      tenure.push_back(*d.loyal_tenure_mean);
      rate.push_back(*pooled);
    }
  }
  reports.write("descriptives.csv",
                {"community", "commenters_per_month", "comments_per_user", "thread_length_median",
                 "thread_unique_contributors_median", "loyal_tenure_mean", "pooled_loyalty_rate"},
                rows);

  rows.clear();
  try {
    const auto s = statkit::spearman(tenure, rate);
    rows.push_back({str(tenure.size()), num(s.statistic), p_cell(s)});
  } catch (const std::invalid_argument& e) {
    warn(result, std::string("tenure/rate correlation undefined: ") + e.what());
    rows.push_back({str(tenure.size()), "", ""});
  }
  reports.write("tenure_rate_spearman.csv", {"n_communities", "rho", "p_value"}, rows);

  if (!config.paths.categories.empty()) {
    const auto cats = read_categories(config.paths.categories);
    if (cats.empty()) {
      std::cerr << "note: categories file is empty; category report skipped\n";
    } else {
      std::map<std::string, std::vector<double>> by_cat;
      for (const auto& row : cats) {
        if (auto r = loyalty::pooled_rate(state.reports, row[0])) by_cat[row[1]].push_back(*r);
      }
      rows.clear();
      for (const auto& [cat, rates] : by_cat) {
        std::string lo, hi;
        if (rates.size() >= 2) {
          auto ci = statkit::bootstrap_ci(rates, statkit::Statistic::Mean, 0.95, config.sampling.bootstrap_resamples,
                                          derive_seed(config.seed, "category:" + cat));
          lo = num(ci.first);
          hi = num(ci.second);
        }
        rows.push_back({cat, str(rates.size()), num(statkit::mean(rates)), lo, hi});
      }
      reports.write("category_rates.csv", {"category", "n_communities", "mean_rate", "ci95_low", "ci95_high"}, rows);
    }
  }
  finish(result);
  return result;
}

CommandResult cmd_network(const RunConfig& config) {
  CommandResult result;
  Reports reports(config, result);
  const auto store = load_store(config, result);
  const auto state = compute_loyalty(config, store, result);
  if (!state.tiers) {
    finish(result);
    return result;
  }
  const auto& tiers = *state.tiers;

  netgraph::GraphBuilder builder(store, config.network.build);
  netgraph::NullOptions null_options;
  null_options.n_null = config.network.n_null;
  null_options.iterations_multiplier = config.network.iterations_multiplier;
  null_options.seed = derive_seed(config.seed, "null");
  null_options.threads = config.threads;
  null_options.transform = config.network.transform;

  struct CommunityNet {
    loyalty::Tier tier;
    std::optional<double> density, clustering, assortativity, gini;
    netgraph::RelativeStats rel;
    std::map<MonthKey, std::pair<std::optional<double>, std::optional<double>>> monthly;  // rel clustering, raw assort
  };
  std::map<std::string, CommunityNet> nets;
  std::vector<std::vector<std::string>> monthly_rows;
  for (const auto& t : tiers) {
    std::vector<netgraph::InteractionGraph> graphs;
    for (MonthKey m : store.months()) {
      if (store.comments_in(t.community, m).empty()) continue;
      graphs.push_back(builder.build(t.community, m));
    }
    CommunityNet net;
    net.tier = t.tier;
    net.rel = netgraph::relative_stats(graphs, null_options);
    std::vector<std::optional<double>> d, c, a, g;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      const auto& graph = graphs[i];
      const auto s = netgraph::graph_stats(graph, config.network.transform);
      const auto& mn = net.rel.months[i];
      d.push_back(s.density);
      c.push_back(s.avg_clustering);
      a.push_back(s.assortativity);
      g.push_back(s.gini);
      std::optional<double> rel_c;
      if (mn.clustering_empirical && mn.clustering_null) {
        rel_c = netgraph::relative_difference(*mn.clustering_empirical, *mn.clustering_null);
      }
      net.monthly[graph.month()] = {rel_c, s.assortativity};
      monthly_rows.push_back({t.community, std::string(loyalty::to_string(t.tier)), graph.month().str(),
                              str(graph.node_count()), str(graph.edge_count()), num(s.density),
                              num(s.avg_clustering), num(s.assortativity), num(s.gini), num(mn.clustering_null),
                              num(mn.assortativity_null)});
      if (config.network.export_graphs) {
        const fs::path dir = config.paths.output_dir / "graphs";
        fs::create_directories(dir);
        const std::string stem = t.community + "_" + graph.month().str();
        std::ofstream e(dir / (stem + ".edges")), n(dir / (stem + ".nodes")), z(dir / (stem + "_null.edges"));
        netgraph::write_edge_list(e, graph);
        netgraph::write_node_attributes(n, graph);
        std::uint64_t seed = derive_seed(null_options.seed, graph.community());
        seed = derive_seed(seed, static_cast<std::uint64_t>(graph.month().ordinal()));
        seed = derive_seed(seed, std::uint64_t{0});
        netgraph::write_edge_list(z, netgraph::rewire_null(graph, config.network.iterations_multiplier, seed));
      }
    }
    net.density = median_defined(d);
    net.clustering = median_defined(c);
    net.assortativity = median_defined(a);
    net.gini = median_defined(g);
    nets.emplace(t.community, std::move(net));
  }
  reports.write("network_monthly.csv",
                {"community", "tier", "month", "nodes", "edges", "density", "avg_clustering", "assortativity", "gini",
                 "clustering_null", "assortativity_null"},
                monthly_rows);

  std::vector<std::vector<std::string>> rows;
  for (const auto& [c, n] : nets) {
    rows.push_back({c, std::string(loyalty::to_string(n.tier)), num(n.density), num(n.clustering),
                    num(n.assortativity), num(n.gini), num(n.rel.clustering_rel), num(n.rel.assortativity_rel)});
  }
  reports.write("network_communities.csv",
                {"community", "tier", "median_density", "median_clustering", "median_assortativity", "median_gini",
                 "relative_clustering", "relative_assortativity"},
                rows);

  // Tier comparisons.
  rows.clear();
  struct Metric {
    const char* name;
    std::optional<double> (*get)(const CommunityNet&);
  };
  const Metric metrics[] = {
      {"density", [](const CommunityNet& n) { return n.density; }},
      {"avg_clustering", [](const CommunityNet& n) { return n.clustering; }},
      {"assortativity", [](const CommunityNet& n) { return n.assortativity; }},
      {"gini", [](const CommunityNet& n) { return n.gini; }},
      {"relative_clustering", [](const CommunityNet& n) { return n.rel.clustering_rel; }},
      {"relative_assortativity", [](const CommunityNet& n) { return n.rel.assortativity_rel; }},
  };
  for (const auto& m : metrics) {
    std::vector<double> lo, hi;
    for (const auto& [c, n] : nets) {
      const auto v = m.get(n);
      if (!v) continue;
      if (n.tier == loyalty::Tier::Loyal) hi.push_back(*v);
      if (n.tier == loyalty::Tier::NonLoyal) lo.push_back(*v);
    }
    if (hi.size() < 2 || lo.size() < 2) {
      warn(result, std::string(m.name) + ": fewer than 2 communities per tier; test skipped");
      rows.push_back({m.name, "mann_whitney_u", "", "", str(hi.size()), str(lo.size()), "", ""});
      continue;
    }
    const auto t = statkit::mann_whitney_u(hi, lo);
    rows.push_back({m.name, "mann_whitney_u", num(t.statistic), p_cell(t), str(hi.size()), str(lo.size()),
                    num(statkit::median(hi)), num(statkit::median(lo))});
  }
  {
    std::map<std::string, double> activity;
    for (const auto& t : tiers) activity[t.community] = commenters_per_month(store, t.community);
    const auto pairs = netgraph::activity_matched_pairs(tiers, activity, config.network.match_max_gap_sd);
    std::vector<double> diffs;
    for (const auto& p : pairs) {
      const auto& a = nets.at(p.loyal).density;
      const auto& b = nets.at(p.nonloyal).density;
      if (a && b) diffs.push_back(*a - *b);
    }
    const bool any_nonzero = std::any_of(diffs.begin(), diffs.end(), [](double d) { return d != 0.0; });
    if (!any_nonzero) {
      warn(result, "matched density test: no usable activity-matched pairs");
      rows.push_back({"matched_density", "wilcoxon_signed_rank", "", "", str(diffs.size()), str(diffs.size()), "", ""});
    } else {
      const auto t = statkit::wilcoxon_signed_rank(diffs);
      rows.push_back({"matched_density", "wilcoxon_signed_rank", num(t.statistic), p_cell(t), str(diffs.size()),
                      str(diffs.size()), num(statkit::median(diffs)), ""});
    }
  }
  reports.write("network_tests.csv",
                {"metric", "method", "statistic", "p_value", "n_loyal", "n_nonloyal", "loyal_median",
                 "nonloyal_median"},
                rows);

  // Panel regressions: rate(t+1) ~ rate(t) + feature(t) + community + month.
  std::map<std::pair<std::string, MonthKey>, double> rate;
  for (const auto& r : state.reports) {
    if (r.loyalty_rate) rate[{r.community, r.month}] = *r.loyalty_rate;
  }
  rows.clear();
  std::vector<std::pair<std::string, statkit::RegressionResult>> fits;
  for (int model = 0; model < 2; ++model) {
    const std::string name = model == 0 ? "relative_clustering" : "assortativity";
    std::vector<statkit::PanelRow> panel;
    for (const auto& [c, n] : nets) {
      for (const auto& [m, f] : n.monthly) {
        const auto feature = model == 0 ? f.first : f.second;
        auto now = rate.find({c, m});
        auto next = rate.find({c, m.next()});
        if (!feature || now == rate.end() || next == rate.end()) continue;
        panel.push_back({c, m.str(), next->second, now->second, *feature});
      }
    }
    try {
      fits.emplace_back(name, statkit::panel_regression(panel));
    } catch (const statkit::RankDeficientError& e) {
      std::string terms;
      for (const auto& t : e.collinear_terms) terms += (terms.empty() ? "" : " ") + t;
      warn(result, name + " regression: rank deficient (" + terms + ")");
    } catch (const std::invalid_argument& e) {
      warn(result, name + " regression: " + e.what());
    }
  }
  std::vector<double> feature_p;
  for (const auto& [name, fit] : fits) feature_p.push_back(fit.term("network_feature").p_value);
  const auto reject = statkit::holm_bonferroni(feature_p, 0.05);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& [name, fit] = fits[i];
    for (const auto& t : fit.terms) {
      rows.push_back({name, t.name, num(t.coefficient), num(t.std_error), num(t.z_score), num(t.p_value),
                      t.name == "network_feature" ? (reject[i] ? "1" : "0") : "", str(fit.n_obs)});
    }
  }
  reports.write("network_regression.csv",
                {"model", "term", "coefficient", "std_error", "z", "p_value", "holm_reject_05", "n_obs"}, rows);
  finish(result);
  return result;
}

CommandResult cmd_userlevel(const RunConfig& config) {
  CommandResult result;
  Reports reports(config, result);
  const auto store = load_store(config, result);
  const auto lx = lexicons(config);
  const auto profiles = corpus::build_profiles(store);
  const loyalty::LabelIndex index(loyalty::label_users(profiles, config.loyalty));

  std::vector<std::vector<std::string>> screen_rows, post_rows, ling_rows, pair_rows;
  std::vector<std::string> included;
  for (const auto& c : store.communities()) {
    const auto nl = index.authors(c, loyalty::LabelKind::Loyal).size();
    const auto nv = index.authors(c, loyalty::LabelKind::Vagrant).size();
    const bool ok = nl >= config.sampling.min_cohort_users && nv >= config.sampling.min_cohort_users;
    screen_rows.push_back({c, str(nl), str(nv), ok ? "1" : "0"});
    if (ok) included.push_back(c);
  }
  reports.write("userlevel_screen.csv", {"community", "loyal_users", "vagrant_users", "included"}, screen_rows);
  if (included.empty()) warn(result, "no community passes the loyal/vagrant user screen");

  struct Direction {
    std::size_t n = 0, k = 0, significant = 0;
  };
  std::map<std::string, Direction> directions;
  auto tally = [&](const std::string& key, double diff, std::optional<double> p) {
    if (diff == 0.0) return;
    auto& d = directions[key];
    ++d.n;
    d.k += diff > 0.0;
    if (diff > 0.0 && p && *p < 0.01) ++d.significant;
  };

  const char* feature_names[] = {"verbosity", "rate_i", "rate_you", "rate_we", "rate_affect_pos", "rate_affect_neg"};
  auto feature_values = [](const textfeat::FeatureVector& f) {
    return std::array<double, 6>{static_cast<double>(f.verbosity), f.rate_i, f.rate_you, f.rate_we,
                                 f.rate_affect_pos, f.rate_affect_neg};
  };

  for (const auto& c : included) {
    const auto sel = textfeat::sample_selected_posts(store, index, c, config.sampling.selected_posts,
                                                     derive_seed(config.seed, "selected:" + c));
    for (const auto& w : sel.warnings) warn(result, w);
    std::map<MonthKey, textfeat::IdfTable> idf;
    auto summarize = [&](const std::vector<textfeat::SelectedPost>& posts) {
      std::vector<double> score, comments, eso;
      for (const auto& p : posts) {
        score.push_back(static_cast<double>(p.score));
        comments.push_back(static_cast<double>(p.num_comments));
        auto it = idf.find(p.month);
        if (it == idf.end()) it = idf.emplace(p.month, textfeat::idf_table(store, c, p.month, lx)).first;
        if (auto e = textfeat::esotericity(store.find_post(p.post_id)->text(), it->second)) eso.push_back(*e);
      }
      return std::array<std::vector<double>, 3>{score, comments, eso};
    };
    const auto L = summarize(sel.loyal_selected);
    const auto V = summarize(sel.vagrant_selected);
    std::vector<std::string> row = {c, str(sel.loyal_selected.size()), str(sel.vagrant_selected.size())};
    const char* keys[] = {"post_score", "post_num_comments", "post_esotericity"};
    for (int k = 0; k < 3; ++k) {
      const auto& a = L[static_cast<std::size_t>(k)];
      const auto& b = V[static_cast<std::size_t>(k)];
      if (a.empty() || b.empty()) {
        row.insert(row.end(), {"", "", ""});
        continue;
      }
      // Esotericity is compared by means, the others by medians.
      const double la = k == 2 ? statkit::mean(a) : statkit::median(a);
      const double vb = k == 2 ? statkit::mean(b) : statkit::median(b);
      const auto t = statkit::mann_whitney_u(a, b);
      row.insert(row.end(), {num(la), num(vb), p_cell(t)});
      tally(std::string(keys[k]) + " loyal>vagrant", la - vb, t.p_value);
    }
    post_rows.push_back(std::move(row));

    const auto pairs = textfeat::build_comment_pairs(store, index, c, config.sampling.pairs_per_post,
                                                     derive_seed(config.seed, "pairs:" + c));
    std::array<std::vector<double>, 6> diffs;
    for (const auto& p : pairs) {
      pair_rows.push_back({c, p.post_id, p.loyal_comment_id, p.vagrant_comment_id});
      const auto a = feature_values(textfeat::linguistic_features(store.find_comment(p.loyal_comment_id)->body, lx));
      const auto b = feature_values(textfeat::linguistic_features(store.find_comment(p.vagrant_comment_id)->body, lx));
      for (std::size_t f = 0; f < 6; ++f) diffs[f].push_back(a[f] - b[f]);
    }
    for (std::size_t f = 0; f < 6; ++f) {
      const auto& d = diffs[f];
      const bool any = std::any_of(d.begin(), d.end(), [](double x) { return x != 0.0; });
      if (!any) {
        ling_rows.push_back({c, feature_names[f], str(d.size()), "", "", "", "tie", "0"});
        continue;
      }
      const auto t = statkit::wilcoxon_signed_rank(d);
      double pos = 0.0, neg = 0.0;
      // Direction by rank sums, which the test itself compares.
      std::vector<double> abs_d;
      for (double x : d) {
        if (x != 0.0) abs_d.push_back(std::fabs(x));
      }
      const auto ranks = statkit::midranks(abs_d);
      std::size_t r = 0;
      for (double x : d) {
        if (x == 0.0) continue;
        (x > 0 ? pos : neg) += ranks[r++];
      }
      const double direction = pos - neg;
      const char* dir = direction > 0 ? "loyal_more" : direction < 0 ? "vagrant_more" : "tie";
      ling_rows.push_back({c, feature_names[f], str(d.size()), num(statkit::median(d)), num(t.statistic),
                           p_cell(t), dir, t.p_value < 0.01 ? "1" : "0"});
      tally(std::string(feature_names[f]) + " loyal>vagrant", direction, t.p_value);
    }
  }
  reports.write("userlevel_posts.csv",
                {"community", "loyal_posts", "vagrant_posts", "loyal_median_score", "vagrant_median_score", "score_p",
                 "loyal_median_comments", "vagrant_median_comments", "comments_p", "loyal_mean_esotericity",
                 "vagrant_mean_esotericity", "esotericity_p"},
                post_rows);
  reports.write("userlevel_linguistic.csv",
                {"community", "feature", "n_pairs", "median_diff", "statistic", "p_value", "direction",
                 "significant_01"},
                ling_rows);
  reports.write("userlevel_pairs.csv", {"community", "post_id", "loyal_comment_id", "vagrant_comment_id"}, pair_rows);

  std::vector<std::vector<std::string>> dir_rows;
  for (const auto& [key, d] : directions) {
    const auto t = statkit::binomial_sign_test(d.k, d.n, 0.5);
    dir_rows.push_back({key, str(d.n), str(d.k), num(static_cast<double>(d.k) / static_cast<double>(d.n)), p_cell(t),
                        str(d.significant)});
  }
  reports.write("userlevel_directions.csv",
                {"comparison", "n_communities", "n_in_direction", "fraction", "binomial_p", "n_significant_01"},
                dir_rows);
  finish(result);
  return result;
}

CommandResult cmd_predict(const RunConfig& config, PredictTask task) {
  CommandResult result;
  Reports reports(config, result);
  const auto store = load_store(config, result);
  const auto profiles = corpus::build_profiles(store);
  const loyalty::LabelIndex index(loyalty::label_users(profiles, config.loyalty));
  mlpredict::FeatureExtractor extractor(store, lexicons(config));
  const std::string task_name = task == PredictTask::FirstK ? "first_k" : "loco";
  const mlpredict::FeatureGroup groups[] = {mlpredict::FeatureGroup::All, mlpredict::FeatureGroup::PostScore,
                                            mlpredict::FeatureGroup::Linguistic};

  auto forest_for = [&](const std::string& tag) {
    auto p = config.forest;
    p.seed = derive_seed(config.seed, "forest:" + tag);
    p.threads = config.threads;
    return p;
  };

  std::vector<std::vector<std::string>> rows;
  std::map<std::string, std::vector<double>> accuracies;
  std::map<std::string, std::size_t> significant;
  auto record = [&](const std::string& community, const std::string& group, std::size_t n_train,
                    const mlpredict::Evaluation& e) {
    rows.push_back({community, group, str(n_train), str(e.n), num(e.accuracy), num(e.p_value),
                    e.p_value < 0.05 ? "1" : "0"});
    accuracies[group].push_back(e.accuracy);
    significant[group] += e.p_value < 0.05;
  };

  if (task == PredictTask::FirstK) {
    auto options = config.first_k;
    for (const auto& c : store.communities()) {
      options.seed = derive_seed(config.seed, "first-k:" + c);
      mlpredict::SplitDatasets data;
      try {
        data = mlpredict::build_first_k_dataset(store, index, c, extractor, options);
      } catch (const std::invalid_argument& e) {
        warn(result, std::string("skipped: ") + e.what());
        continue;
      }
      for (const auto& w : data.warnings) std::cerr << "note: " << w << '\n';
      if (config.export_datasets) {
        std::ofstream tr(config.paths.output_dir / ("first_k_" + c + "_train.csv"));
        std::ofstream te(config.paths.output_dir / ("first_k_" + c + "_test.csv"));
        mlpredict::write_dataset_csv(tr, data.train);
        mlpredict::write_dataset_csv(te, data.test);
      }
      try {
        for (auto g : groups) {
          const auto cols = mlpredict::feature_columns(g);
          const auto train = data.train.select(cols);
          const auto test = data.test.select(cols);
          const std::string gname(mlpredict::to_string(g));
          record(c, gname, train.rows.size(),
                 mlpredict::evaluate(mlpredict::train_forest(train, forest_for(c + ":" + gname)), test));
        }
        const auto shuffled = mlpredict::shuffle_labels(data.train, derive_seed(config.seed, "shuffle:" + c));
        record(c, "all_shuffled", shuffled.rows.size(),
               mlpredict::evaluate(mlpredict::train_forest(shuffled, forest_for(c + ":shuffled")), data.test));
      } catch (const std::invalid_argument& e) {
        warn(result, c + " skipped: " + e.what());
      }
    }
  } else {
    auto grouped = mlpredict::build_loco_dataset(store, index, store.communities(), extractor,
                                                 config.sampling.loco_per_community, derive_seed(config.seed, "loco"));
    for (const auto& w : grouped.warnings) warn(result, w);
    if (config.export_datasets) {
      std::ofstream f(config.paths.output_dir / "loco_dataset.csv");
      mlpredict::write_dataset_csv(f, grouped.data);
    }
    try {
      auto run = [&](const mlpredict::Dataset& d, const std::string& gname) {
        const auto loco = mlpredict::loco_evaluate(d, forest_for("loco:" + gname));
        for (const auto& [community, e] : loco.folds) record(community, gname, d.rows.size() - e.n, e);
      };
      for (auto g : groups) {
        const auto cols = mlpredict::feature_columns(g);
        run(grouped.data.select(cols), std::string(mlpredict::to_string(g)));
      }
      run(mlpredict::shuffle_labels(grouped.data, derive_seed(config.seed, "shuffle:loco")), "all_shuffled");
    } catch (const std::invalid_argument& e) {
      warn(result, std::string("loco evaluation skipped: ") + e.what());
    }
  }
  reports.write("predict_" + task_name + ".csv",
                {"community", "feature_group", "n_train", "n_test", "accuracy", "p_value", "significant_05"}, rows);

  std::vector<std::vector<std::string>> summary;
  for (const auto& [g, acc] : accuracies) {
    std::string lo, hi;
    if (acc.size() >= 2) {
      const auto ci = statkit::bootstrap_ci(acc, statkit::Statistic::Mean, 0.95, config.sampling.bootstrap_resamples,
                                            derive_seed(config.seed, "predict-ci:" + g));
      lo = num(ci.first);
      hi = num(ci.second);
    }
    summary.push_back({g, str(acc.size()), num(statkit::mean(acc)), lo, hi,
                       num(static_cast<double>(significant[g]) / static_cast<double>(acc.size()))});
  }
  reports.write("predict_" + task_name + "_summary.csv",
                {"feature_group", "n_communities", "mean_accuracy", "ci95_low", "ci95_high", "fraction_significant_05"},
                summary);
  finish(result);
  return result;
}

CommandResult cmd_synth(const RunConfig& config) {
  if (!config.synth) throw InputError("config has no synth section");
  CommandResult result;
  auto synth = *config.synth;
  synth.seed = config.seed;
  synthgen::SynthCorpus corpus;
  try {
    corpus = synthgen::generate(synth);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("synth config infeasible: ") + e.what());
  }
  synthgen::write_corpus(config.paths.output_dir, corpus, synth);
  for (const char* f : {"comments.jsonl", "posts.jsonl", "ground_truth.json"}) {
    result.outputs.push_back(config.paths.output_dir / f);
  }
  finish(result);
  return result;
}

}  // namespace loyaltylab::pipeline
