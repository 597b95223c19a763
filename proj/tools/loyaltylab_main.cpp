#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "loyaltylab/corpus.hpp"
#include "loyaltylab/pipeline.hpp"

namespace pl = loyaltylab::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"loyaltylab: community loyalty analysis over comment dumps"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<unsigned> threads;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "global seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* ingest = app.add_subcommand("ingest", "parse and validate the dump, write corpus summaries");
  auto* loyalty = app.add_subcommand("loyalty", "label users, loyalty rates, tiers, descriptives");
  auto* network = app.add_subcommand("network", "interaction graphs, null models and tier tests");
  auto* userlevel = app.add_subcommand("userlevel", "selected-post and paired linguistic comparisons");
  auto* predict = app.add_subcommand("predict", "random-forest loyalty prediction");
  std::string task = "first_k";
  predict->add_option("--task", task, "first_k or loco")->check(CLI::IsMember({"first_k", "loco"}));
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
  std::size_t synth_communities = 4;
  synth->add_option("--communities", synth_communities, "community count when the config has no synth section")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors are input errors; --help exits 0.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    pl::RunConfig config = config_path.empty() ? pl::RunConfig{} : pl::load_config(config_path);
    if (seed) config.seed = *seed;
    if (!out_dir.empty()) config.paths.output_dir = out_dir;
    if (threads) config.threads = *threads;

    pl::CommandResult result;
    if (*ingest) {
      result = pl::cmd_ingest(config);
    } else if (*loyalty) {
      result = pl::cmd_loyalty(config);
    } else if (*network) {
      result = pl::cmd_network(config);
    } else if (*userlevel) {
      result = pl::cmd_userlevel(config);
    } else if (*predict) {
      result = pl::cmd_predict(config, task == "loco" ? pl::PredictTask::Loco : pl::PredictTask::FirstK);
    } else if (*synth) {
      if (!config.synth) config.synth = loyaltylab::synthgen::SynthConfig::with_communities(synth_communities);
      result = pl::cmd_synth(config);
    }
    for (const auto& p : result.outputs) std::cout << p.generic_string() << '\n';
    return result.exit_code;
  } catch (const loyaltylab::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 1;
  }
}
