#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "loyaltylab/loyalty.hpp"
#include "loyaltylab/mlpredict.hpp"
#include "loyaltylab/netgraph.hpp"
#include "loyaltylab/synthgen.hpp"

namespace loyaltylab::pipeline {

namespace fs = std::filesystem;

struct Paths {
  fs::path comments;
  fs::path posts;
  fs::path lexicons;    // directory; empty = built-in defaults
  fs::path categories;  // CSV community,category; empty = no category report
  fs::path output_dir = "out";
};

struct NetworkConfig {
  netgraph::BuildOptions build;
  std::size_t n_null = 10;
  std::uint64_t iterations_multiplier = 10'000;
  netgraph::AttributeTransform transform = netgraph::AttributeTransform::Raw;
  double match_max_gap_sd = 0.1;
  /// Also write empirical and one null edge list per community-month.
  bool export_graphs = false;
};

struct SamplingConfig {
  std::size_t selected_posts = 100;
  std::size_t pairs_per_post = 1;  // 0 = full loyal x vagrant product
  std::size_t loco_per_community = 250;
  std::size_t min_cohort_users = 25;  // user-level screen, per cohort
  std::size_t bootstrap_resamples = 1000;
};

struct RunConfig {
  Paths paths;
  loyalty::LoyaltyParams loyalty;
  std::size_t min_commenters_per_month = 0;  // community filter; 0 keeps all
  int min_loyal_users = 25;                  // tier screen
  NetworkConfig network;
  SamplingConfig sampling;
  mlpredict::ForestParams forest;
  mlpredict::FirstKOptions first_k;
  bool export_datasets = false;
  std::optional<synthgen::SynthConfig> synth;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  /// Canonical JSON (paths as given, after resolution).
  nlohmann::json to_json() const;
  /// FNV-1a of the canonical JSON, 16 hex digits.
  std::string hash() const;
  /// Design choices in force, `key=value` joined by ';'.
  std::string flags() const;
};

/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
/// Throws InputError on malformed values.
RunConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir);
/// Reads a JSON config file; throws InputError naming the path on failure.
RunConfig load_config(const fs::path& path);

/// Result of one subcommand: 0 clean, 2 finished with warnings.
struct CommandResult {
  int exit_code = 0;
  std::vector<std::string> warnings;
  std::vector<fs::path> outputs;
};

/// Each subcommand validates its inputs (InputError naming the missing
/// path), runs, and writes CSV reports into config.paths.output_dir. Every
/// report starts with a `#` line carrying the config hash, seed and flags.
CommandResult cmd_ingest(const RunConfig& config);
CommandResult cmd_loyalty(const RunConfig& config);
CommandResult cmd_network(const RunConfig& config);
CommandResult cmd_userlevel(const RunConfig& config);

enum class PredictTask { FirstK, Loco };
CommandResult cmd_predict(const RunConfig& config, PredictTask task);

/// Generates the configured synthetic corpus into the output directory.
CommandResult cmd_synth(const RunConfig& config);

}  // namespace loyaltylab::pipeline
