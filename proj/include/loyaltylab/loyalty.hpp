#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "loyaltylab/corpus.hpp"

namespace loyaltylab::loyalty {

using corpus::MonthKey;

struct LoyaltyParams {
  double preference_threshold = 0.5;
  int min_monthly_comments = 10;  // top-level, platform-wide, per month
  int vagrant_min = 1;
  int vagrant_max = 3;
  /// Community-level mode: strict plurality instead of the share threshold.
  bool relaxed_preference = false;

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;

  static LoyaltyParams community_level() {
    LoyaltyParams p;
    p.relaxed_preference = true;
    return p;
  }
};

enum class Preference { Prefers, DoesNotPrefer, NotEligible };

/// The single community a user prefers in the profile's month.
///
/// Share mode picks the community with the largest top-level share if it
/// reaches the threshold; equal shares go to the lexicographically smallest
/// name (`tie_broken` is set). Relaxed mode requires a strict plurality.
/// Returns nullopt for NotEligible users and users with no preference;
/// `eligible` distinguishes the two.
std::optional<std::string> preferred_community(const corpus::UserMonthProfile& profile,
                                               const LoyaltyParams& params,
                                               bool* eligible = nullptr,
                                               bool* tie_broken = nullptr);

Preference prefers(const corpus::UserMonthProfile& profile, std::string_view community,
                   const LoyaltyParams& params);

enum class LabelKind { Loyal, Vagrant };

struct LoyaltyLabel {
  std::string author;
  std::string community;
  MonthKey month;
  LabelKind kind = LabelKind::Loyal;

  auto operator<=>(const LoyaltyLabel&) const = default;
};

struct Labeling {
  std::vector<LoyaltyLabel> labels;  // sorted
  std::size_t preference_ties = 0;   // 50/50 ties resolved by name
};

/// Loyal(u, A, t) iff u prefers A at t and at t+1. Months whose successor is
/// past the last profiled month produce no labels.
Labeling label_loyal(const corpus::ProfileTable& profiles, const LoyaltyParams& params);

/// Vagrant(u, A, t) iff u made vagrant_min..vagrant_max top-level comments in
/// A at t, commented anywhere at t+1, and made no comment in A at t+1.
std::vector<LoyaltyLabel> label_vagrants(const corpus::ProfileTable& profiles,
                                         const LoyaltyParams& params);

/// Loyal and vagrant labels of a store, merged and sorted.
std::vector<LoyaltyLabel> label_users(const corpus::ProfileTable& profiles,
                                      const LoyaltyParams& params,
                                      std::size_t* preference_ties = nullptr);

/// Fast membership queries over a label set.
class LabelIndex {
 public:
  explicit LabelIndex(const std::vector<LoyaltyLabel>& labels);

  bool has(std::string_view author, std::string_view community, MonthKey month,
           LabelKind kind) const;
  /// Months in which `author` holds `kind` for `community`, ascending.
  std::vector<MonthKey> months(std::string_view author, std::string_view community,
                               LabelKind kind) const;
  /// Sorted distinct authors holding `kind` for `community` in any month.
  std::vector<std::string> authors(std::string_view community, LabelKind kind) const;

 private:
  std::vector<LoyaltyLabel> sorted_;  // by (community, kind, author, month)
};

struct CommunityLoyaltyReport {
  std::string community;
  MonthKey month;
  int n_preferrers = 0;
  int n_sustained = 0;
  int n_left_platform = 0;
  /// n_sustained / (n_preferrers - n_left_platform); empty when the
  /// denominator is zero.
  std::optional<double> loyalty_rate;
};

CommunityLoyaltyReport community_loyalty_rate(const corpus::ProfileTable& profiles,
                                              std::string_view community, MonthKey month,
                                              const LoyaltyParams& params);

/// Reports for every (community, t) with at least one preferrer at t and a
/// successor month inside the profiled range. Sorted by (community, month).
std::vector<CommunityLoyaltyReport> all_loyalty_reports(const corpus::ProfileTable& profiles,
                                                        const LoyaltyParams& params);

enum class Tier { Loyal, Middle, NonLoyal };
std::string_view to_string(Tier tier);

struct CommunityTier {
  std::string community;
  double mean_loyalty_rate = 0.0;
  Tier tier = Tier::Middle;
};

/// Pooled rate over user-month pairs: sum(sustained) / sum(preferrers - left).
std::optional<double> pooled_rate(const std::vector<CommunityLoyaltyReport>& reports,
                                  std::string_view community);

/// Screens communities by max monthly sustained-preferrer count, ranks the
/// rest by pooled rate and labels the top and bottom quarter. The quarter size
/// is max(1, floor(n / 4)); throws std::invalid_argument with fewer than two
/// eligible communities. Output sorted by descending rate.
std::vector<CommunityTier> tier_communities(const std::vector<CommunityLoyaltyReport>& reports,
                                            int min_loyal_users = 25);

struct CommunityDescriptives {
  std::string community;
  double commenters_per_month = 0.0;
  double comments_per_user = 0.0;  // all comments per active user-month
  double thread_length_median = 0.0;
  double thread_unique_contributors_median = 0.0;
  std::optional<double> loyal_tenure_mean;  // months labeled loyal, per loyal user
};

/// Throws std::invalid_argument if the community has no comments.
CommunityDescriptives community_descriptives(const corpus::CorpusStore& store,
                                             const LabelIndex& labels,
                                             std::string_view community);

/// Months each user holds a Loyal label for `community` (not necessarily
/// consecutive).
std::vector<std::pair<std::string, int>> loyal_tenures(const LabelIndex& labels,
                                                       std::string_view community);

}  // namespace loyaltylab::loyalty
