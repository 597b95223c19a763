#include <cstdio>
#include <fstream>
#include <set>

#include "loyaltylab/pipeline.hpp"
#include "loyaltylab/rng.hpp"

namespace loyaltylab::pipeline {

namespace {

using nlohmann::json;

void only_keys(const json& j, const char* where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw InputError(std::string("config: ") + where + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) throw InputError(std::string("config: unknown key ") + where + "." + k);
  }
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (auto it = j.find(key); it != j.end()) target = it->template get<T>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string mode_name(netgraph::EdgeMode m) {
  return m == netgraph::EdgeMode::Chain ? "chain" : "direct_reply";
}

std::string transform_name(netgraph::AttributeTransform t) {
  return t == netgraph::AttributeTransform::Raw ? "raw" : "log1p";
}

}  // namespace

json RunConfig::to_json() const {
  json forest_j = {{"n_trees", forest.n_trees}, {"min_samples_split", forest.min_samples_split}};
  forest_j["max_features"] = forest.max_features ? json(*forest.max_features) : json(nullptr);
  json j = {
      {"paths",
       {{"comments", paths.comments.generic_string()},
        {"posts", paths.posts.generic_string()},
        {"lexicons", paths.lexicons.generic_string()},
        {"categories", paths.categories.generic_string()},
        {"output_dir", paths.output_dir.generic_string()}}},
      {"loyalty",
       {{"preference_threshold", loyalty.preference_threshold},
        {"min_monthly_comments", loyalty.min_monthly_comments},
        {"vagrant_min", loyalty.vagrant_min},
        {"vagrant_max", loyalty.vagrant_max},
        {"relaxed_preference", loyalty.relaxed_preference}}},
      {"min_commenters_per_month", min_commenters_per_month},
      {"min_loyal_users", min_loyal_users},
      {"network",
       {{"mode", mode_name(network.build.mode)},
        {"min_annual_comments", network.build.min_annual_comments},
        {"chain_distance", network.build.chain_distance},
        {"n_null", network.n_null},
        {"iterations_multiplier", network.iterations_multiplier},
        {"transform", transform_name(network.transform)},
        {"match_max_gap_sd", network.match_max_gap_sd},
        {"export_graphs", network.export_graphs}}},
      {"sampling",
       {{"selected_posts", sampling.selected_posts},
        {"pairs_per_post", sampling.pairs_per_post},
        {"loco_per_community", sampling.loco_per_community},
        {"min_cohort_users", sampling.min_cohort_users},
        {"bootstrap_resamples", sampling.bootstrap_resamples}}},
      {"forest", forest_j},
      {"first_k",
       {{"k", first_k.k},
        {"train_begin", first_k.train_begin.str()},
        {"train_end", first_k.train_end.str()},
        {"test_begin", first_k.test_begin.str()},
        {"test_end", first_k.test_end.str()},
        {"loyal_within_months", first_k.loyal_within_months}}},
      {"export_datasets", export_datasets},
      {"seed", seed},
      {"threads", threads}};
  if (synth) j["synth"] = synthgen::to_json(*synth);
  return j;
}

std::string RunConfig::hash() const {
  // Thread count and output location do not change report content.
  json j = to_json();
  j.erase("threads");
  j["paths"].erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::string RunConfig::flags() const {
  std::string f;
  auto add = [&](const std::string& k, const std::string& v) {
    if (!f.empty()) f += ';';
    f += k + '=' + v;
  };
  add("preference", loyalty.relaxed_preference ? "plurality" : "share");
  add("tie_break", "lexicographic");
  add("rate_preference", "plurality");
  add("pooled_rate", "user_month");
  add("vagrant_platform_screen", "none");
  add("edges", mode_name(network.build.mode) + std::to_string(network.build.chain_distance));
  const bool vocab = !paths.lexicons.empty() && fs::exists(paths.lexicons / "nouns.txt");
  add("nouns", vocab ? "vocabulary" : "heuristic");
  add("idf_log", "natural");
  add("pairs", sampling.pairs_per_post == 0 ? "cross_product" : "per_post" + std::to_string(sampling.pairs_per_post));
  add("negatives", "right_censored");
  add("balance", "downsample");
  add("vote_tie", "negative");
  return f;
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  try {
    only_keys(j, "root",
              {"paths", "loyalty", "min_commenters_per_month", "min_loyal_users", "network", "sampling",
               "forest", "first_k", "export_datasets", "synth", "seed", "threads"});
    if (auto it = j.find("paths"); it != j.end()) {
      only_keys(*it, "paths", {"comments", "posts", "lexicons", "categories", "output_dir"});
      std::string s;
      if (s.clear(), read(*it, "comments", s), !s.empty()) c.paths.comments = resolve(base_dir, s);
      if (s.clear(), read(*it, "posts", s), !s.empty()) c.paths.posts = resolve(base_dir, s);
      if (s.clear(), read(*it, "lexicons", s), !s.empty()) c.paths.lexicons = resolve(base_dir, s);
      if (s.clear(), read(*it, "categories", s), !s.empty()) c.paths.categories = resolve(base_dir, s);
      if (s.clear(), read(*it, "output_dir", s), !s.empty()) c.paths.output_dir = resolve(base_dir, s);
    }
    if (auto it = j.find("loyalty"); it != j.end()) {
      only_keys(*it, "loyalty",
                {"preference_threshold", "min_monthly_comments", "vagrant_min", "vagrant_max", "relaxed_preference"});
      read(*it, "preference_threshold", c.loyalty.preference_threshold);
      read(*it, "min_monthly_comments", c.loyalty.min_monthly_comments);
      read(*it, "vagrant_min", c.loyalty.vagrant_min);
      read(*it, "vagrant_max", c.loyalty.vagrant_max);
      read(*it, "relaxed_preference", c.loyalty.relaxed_preference);
    }
    read(j, "min_commenters_per_month", c.min_commenters_per_month);
    read(j, "min_loyal_users", c.min_loyal_users);
    if (auto it = j.find("network"); it != j.end()) {
      only_keys(*it, "network",
                {"mode", "min_annual_comments", "chain_distance", "n_null", "iterations_multiplier", "transform",
                 "match_max_gap_sd", "export_graphs"});
      if (auto m = it->find("mode"); m != it->end()) {
        const auto v = m->get<std::string>();
        if (v == "chain") c.network.build.mode = netgraph::EdgeMode::Chain;
        else if (v == "direct_reply") c.network.build.mode = netgraph::EdgeMode::DirectReply;
        else throw InputError("config: network.mode must be chain or direct_reply");
      }
      read(*it, "min_annual_comments", c.network.build.min_annual_comments);
      read(*it, "chain_distance", c.network.build.chain_distance);
      read(*it, "n_null", c.network.n_null);
      read(*it, "iterations_multiplier", c.network.iterations_multiplier);
      if (auto t = it->find("transform"); t != it->end()) {
        const auto v = t->get<std::string>();
        if (v == "raw") c.network.transform = netgraph::AttributeTransform::Raw;
        else if (v == "log1p") c.network.transform = netgraph::AttributeTransform::Log1p;
        else throw InputError("config: network.transform must be raw or log1p");
      }
      read(*it, "match_max_gap_sd", c.network.match_max_gap_sd);
      read(*it, "export_graphs", c.network.export_graphs);
    }
    if (auto it = j.find("sampling"); it != j.end()) {
      only_keys(*it, "sampling",
                {"selected_posts", "pairs_per_post", "loco_per_community", "min_cohort_users", "bootstrap_resamples"});
      read(*it, "selected_posts", c.sampling.selected_posts);
      read(*it, "pairs_per_post", c.sampling.pairs_per_post);
      read(*it, "loco_per_community", c.sampling.loco_per_community);
      read(*it, "min_cohort_users", c.sampling.min_cohort_users);
      read(*it, "bootstrap_resamples", c.sampling.bootstrap_resamples);
    }
    if (auto it = j.find("forest"); it != j.end()) {
      only_keys(*it, "forest", {"n_trees", "min_samples_split", "max_features"});
      read(*it, "n_trees", c.forest.n_trees);
      read(*it, "min_samples_split", c.forest.min_samples_split);
      if (auto m = it->find("max_features"); m != it->end() && !m->is_null()) {
        c.forest.max_features = m->get<std::size_t>();
      }
    }
    if (auto it = j.find("first_k"); it != j.end()) {
      only_keys(*it, "first_k", {"k", "train_begin", "train_end", "test_begin", "test_end", "loyal_within_months"});
      read(*it, "k", c.first_k.k);
      auto month = [&](const char* key, corpus::MonthKey& target) {
        if (auto m = it->find(key); m != it->end()) target = corpus::MonthKey::parse(m->get<std::string>());
      };
      month("train_begin", c.first_k.train_begin);
      month("train_end", c.first_k.train_end);
      month("test_begin", c.first_k.test_begin);
      month("test_end", c.first_k.test_end);
      read(*it, "loyal_within_months", c.first_k.loyal_within_months);
    }
    read(j, "export_datasets", c.export_datasets);
    if (auto it = j.find("synth"); it != j.end()) c.synth = synthgen::synth_config_from_json(*it);
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  try {
    c.loyalty.validate();
    c.forest.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (c.first_k.k == 0) throw InputError("config: first_k.k must be >= 1");
  if (c.threads == 0) c.threads = 1;
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config file " + path.string() + ": " + e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

}  // namespace loyaltylab::pipeline
