#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "loyaltylab/corpus.hpp"
#include "loyaltylab/loyalty.hpp"

namespace loyaltylab::synthgen {

using corpus::MonthKey;

struct CommunitySpec {
  std::string name;
  /// P(a focused user keeps the same focus next month | stays on the platform).
  /// This is the community's planted loyalty rate.
  double stay_probability = 0.6;
  /// Mean replies per focused user-month; sets the interaction density.
  double reply_rate = 1.0;
};

/// Language, post-choice and length profile of one user cohort.
struct CohortProfile {
  double niche_choice_prob = 0.5;  // top-level comment goes to a niche post
  double rate_i = 0.05;
  double rate_you = 0.03;
  double rate_we = 0.02;
  double rate_affect_pos = 0.03;
  double rate_affect_neg = 0.02;
  double length_mean = 12.0;  // tokens per comment, minus one
};

struct SynthConfig {
  std::vector<CommunitySpec> communities;
  std::size_t users_per_community = 200;
  MonthKey first_month{2014, 1};
  int n_months = 4;
  /// Arrival months are uniform over the first `arrival_months` months.
  int arrival_months = 1;

  /// Users start focused on their home community with this probability.
  double loyal_fraction = 0.6;
  /// Wanderers: 1-3 top-level comments per community, never the same
  /// community two months running.
  double vagrant_rate = 0.2;
  /// The rest are casual: 1-3 comments in 1-3 random communities a month.
  double leave_rate = 0.05;  // monthly platform exit
  /// When a focus lapses: refocus elsewhere with this probability, else turn casual.
  double switch_focus_prob = 0.5;

  int comments_per_loyal_user_month = 10;  // minimum top-level comments while focused
  double focused_extra_mean = 2.0;         // Poisson extra on top of the minimum
  double focused_off_home_max = 0.3;       // max share spent outside the focus

  std::size_t posts_per_community_month = 40;
  double niche_post_fraction = 0.5;
  double niche_score_mean = 5.0;
  double mainstream_score_mean = 60.0;
  std::size_t esoteric_vocab_size = 400;
  std::size_t common_vocab_size = 150;

  CohortProfile loyal_cohort;    // focused-archetype users
  CohortProfile vagrant_cohort;  // wanderers and casual users
  double casual_reply_factor = 0.2;  // reply rate multiplier for non-focused users
  double reply_to_reply_prob = 0.5;

  /// Off: comment and post bodies are empty (faster, label-only studies).
  bool render_text = true;
  std::uint64_t seed = 0;

  /// `n` communities "c00".."c<n-1>" with stay probabilities spread evenly
  /// over [lo, hi] (descending).
  static SynthConfig with_communities(std::size_t n, double lo = 0.3, double hi = 0.8);

  /// Throws std::invalid_argument naming the first infeasible setting.
  void validate() const;
};

nlohmann::json to_json(const SynthConfig& config);
/// Missing keys keep their defaults. Throws InputError on bad types.
SynthConfig synth_config_from_json(const nlohmann::json& j);

struct CohortMeans {
  double rate_i = 0.0;
  double rate_you = 0.0;
  double rate_we = 0.0;
  double rate_affect_pos = 0.0;
  double rate_affect_neg = 0.0;
  double verbosity = 0.0;
};

struct GroundTruth {
  std::vector<loyalty::LoyaltyLabel> loyal;    // sorted
  std::vector<loyalty::LoyaltyLabel> vagrant;  // sorted
  std::map<std::string, double> planted_loyalty_rate;
  /// First month each user commented in each community.
  std::map<std::pair<std::string, std::string>, MonthKey> arrivals;
  /// Users of the focused archetype (the "loyal" language cohort).
  std::vector<std::string> loyal_cohort_users;  // sorted
  std::map<std::string, CohortMeans> cohort_means;  // expected, from the config
};

struct SynthCorpus {
  std::vector<corpus::Comment> comments;  // sorted by (created_at, id)
  std::vector<corpus::Post> posts;        // sorted by id
  GroundTruth truth;
};

/// Behavior-first generation: a monthly activity schedule per user, then
/// posts, comments, reply trees and text. Fully determined by config.seed.
SynthCorpus generate(const SynthConfig& config);

nlohmann::json to_json(const GroundTruth& truth);

/// Writes comments.jsonl, posts.jsonl and ground_truth.json into `dir`.
void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus,
                  const SynthConfig& config);

}  // namespace loyaltylab::synthgen
