#include <fstream>
#include <sstream>

#include "doctest.h"
#include "loyaltylab/pipeline.hpp"

using namespace loyaltylab;
using namespace loyaltylab::pipeline;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("loyaltylab_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small synthetic corpus written once per test binary.
const fs::path& corpus_dir() {
  static const fs::path dir = [] {
    const auto d = scratch("corpus");
    RunConfig cfg;
    auto synth = synthgen::SynthConfig::with_communities(4);
    synth.users_per_community = 80;
    synth.n_months = 3;
    cfg.synth = synth;
    cfg.seed = 17;
    cfg.paths.output_dir = d;
    cmd_synth(cfg);
    return d;
  }();
  return dir;
}

RunConfig corpus_config(const fs::path& out) {
  RunConfig cfg;
  cfg.paths.comments = corpus_dir() / "comments.jsonl";
  cfg.paths.posts = corpus_dir() / "posts.jsonl";
  cfg.paths.output_dir = out;
  cfg.min_loyal_users = 5;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing resolves relative paths and rejects unknown keys") {
  const json j = {{"paths", {{"comments", "data/c.jsonl"}, {"posts", "/abs/p.jsonl"}}},
                  {"seed", 5},
                  {"loyalty", {{"preference_threshold", 0.6}}}};
  const auto cfg = config_from_json(j, "/base/dir");
  CHECK(cfg.paths.comments == fs::path("/base/dir/data/c.jsonl"));
  CHECK(cfg.paths.posts == fs::path("/abs/p.jsonl"));
  CHECK(cfg.seed == 5);
  CHECK(cfg.loyalty.preference_threshold == 0.6);
  CHECK_THROWS_AS(config_from_json(json{{"sed", 5}}, "/"), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"loyalty", {{"threshold", 0.5}}}}, "/"), InputError);
  CHECK_THROWS_AS(config_from_json(json{{"seed", "five"}}, "/"), InputError);
}

TEST_CASE("config file errors name the path") {
  CHECK_THROWS_WITH_AS(load_config("/nonexistent/run.json"), doctest::Contains("/nonexistent/run.json"), InputError);
  const auto dir = scratch("badjson");
  std::ofstream(dir / "run.json") << "{ not json";
  CHECK_THROWS_WITH_AS(load_config(dir / "run.json"), doctest::Contains("run.json"), InputError);
}

TEST_CASE("config hash ignores threads and output location") {
  RunConfig a;
  RunConfig b = a;
  b.threads = 8;
  b.paths.output_dir = "/elsewhere";
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.seed = 1;
  CHECK(a.hash() != b.hash());
  const auto round = config_from_json(a.to_json(), "/");
  CHECK(round.hash() == a.hash());
  CHECK(a.flags().find("preference=share") != std::string::npos);
}

TEST_CASE("missing input paths are named") {
  RunConfig cfg;
  cfg.paths.comments = "/nonexistent/comments.jsonl";
  cfg.paths.posts = corpus_dir() / "posts.jsonl";
  cfg.paths.output_dir = scratch("missing");
  CHECK_THROWS_WITH_AS(cmd_ingest(cfg), doctest::Contains("/nonexistent/comments.jsonl"), InputError);
  CHECK_THROWS_WITH_AS(cmd_loyalty(cfg), doctest::Contains("/nonexistent/comments.jsonl"), InputError);
  RunConfig no_synth;
  no_synth.paths.output_dir = cfg.paths.output_dir;
  CHECK_THROWS_AS(cmd_synth(no_synth), InputError);
}

TEST_CASE("reports start with the provenance preamble") {
  const auto out = scratch("preamble");
  auto cfg = corpus_config(out);
  const auto r = cmd_ingest(cfg);
  CHECK(r.exit_code == 0);
  REQUIRE(r.outputs.size() == 2);
  const std::string expected = "# loyaltylab config_hash=" + cfg.hash() + " seed=17 flags=" + cfg.flags() + "\n";
  for (const auto& p : r.outputs) {
    const auto text = slurp(p);
    CHECK(text.rfind(expected, 0) == 0);
  }
  const auto communities = slurp(out / "communities.csv");
  CHECK(communities.find("\ncommunity,") != std::string::npos);
  CHECK(communities.find("\nc03,") != std::string::npos);
}

TEST_CASE("loyalty reports are deterministic across runs and thread counts") {
  auto a = corpus_config(scratch("det_a"));
  auto b = corpus_config(scratch("det_b"));
  b.threads = 4;
  const auto ra = cmd_loyalty(a);
  const auto rb = cmd_loyalty(b);
  REQUIRE(ra.outputs.size() == rb.outputs.size());
  CHECK(ra.exit_code == rb.exit_code);
  for (std::size_t i = 0; i < ra.outputs.size(); ++i) {
    CHECK(ra.outputs[i].filename() == rb.outputs[i].filename());
    CHECK(slurp(ra.outputs[i]) == slurp(rb.outputs[i]));
  }
  const auto tiers = slurp(a.paths.output_dir / "tiers.csv");
  CHECK(tiers.find("c00,") != std::string::npos);
  CHECK(tiers.find(",loyal\n") != std::string::npos);
  CHECK(tiers.find(",nonloyal\n") != std::string::npos);
}

TEST_CASE("empty categories file skips the category report") {
  const auto out = scratch("categories");
  auto cfg = corpus_config(out);
  std::ofstream(out / "cats.csv").close();
  cfg.paths.categories = out / "cats.csv";
  const auto r = cmd_loyalty(cfg);
  CHECK_FALSE(fs::exists(out / "category_rates.csv"));
  CHECK(r.exit_code == 0);

  std::ofstream(out / "cats.csv") << "community,category\nc00,x\nc01,x\nc02,y\nc03,y\n";
  cmd_loyalty(cfg);
  const auto text = slurp(out / "category_rates.csv");
  CHECK(text.find("\nx,2,") != std::string::npos);
  CHECK(text.find("\ny,2,") != std::string::npos);
}

TEST_CASE("synth command writes the corpus and ground truth") {
  for (const auto* f : {"comments.jsonl", "posts.jsonl", "ground_truth.json"}) {
    CHECK(fs::file_size(corpus_dir() / f) > 0);
  }
  const auto truth = json::parse(slurp(corpus_dir() / "ground_truth.json"));
  CHECK(truth.contains("planted_loyalty_rate"));
}
