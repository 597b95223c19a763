#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loyaltylab/corpus.hpp"
#include "loyaltylab/loyalty.hpp"
#include "loyaltylab/textfeat.hpp"

namespace loyaltylab::mlpredict {

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t min_samples_split = 10;
  /// Candidate features per split; unset means floor(sqrt(d)), at least 1.
  std::optional<std::size_t> max_features;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
  std::size_t features_per_split(std::size_t d) const;
};

struct LabeledExample {
  std::vector<double> features;
  bool positive = false;
  std::string group;  // community
  std::string unit;   // user or comment id
};

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<LabeledExample> rows;

  std::size_t dim() const { return feature_names.size(); }
  std::size_t count(bool positive) const;
  /// Throws std::invalid_argument on a row of the wrong width or a
  /// duplicated unit.
  void validate() const;
  /// Sorted distinct groups.
  std::vector<std::string> groups() const;
  /// Same rows restricted to the given columns, in that order.
  Dataset select(std::span<const std::size_t> columns) const;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  bool positive = false;  // leaf prediction
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  bool predict(std::span<const double> x) const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::size_t feature_count = 0;

  /// Majority vote; ties predict negative.
  bool predict(std::span<const double> x) const;
  std::size_t positive_votes(std::span<const double> x) const;
};

/// Each tree is grown on a bootstrap resample with a stream derived from
/// (seed, tree index). Throws std::invalid_argument when the data has a
/// single class or fewer than min_samples_split rows.
ForestModel train_forest(const Dataset& train, const ForestParams& params);

struct Evaluation {
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t true_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  double accuracy = 0.0;
  /// Two-sided binomial test of `correct` against 0.5.
  double p_value = 1.0;
  bool p_floored = false;
};

/// Throws std::invalid_argument on an empty test set.
Evaluation evaluate(const ForestModel& model, const Dataset& test);

struct LocoResult {
  std::vector<std::pair<std::string, Evaluation>> folds;  // by group name
  double mean_accuracy = 0.0;
};

/// One fold per group: train on the others, test on it. Throws with fewer
/// than two groups.
LocoResult loco_evaluate(const Dataset& data, const ForestParams& params);

/// Per-comment feature layout shared by both tasks.
const std::vector<std::string>& feature_names();

enum class FeatureGroup { All, PostScore, Linguistic };
std::string_view to_string(FeatureGroup g);
std::vector<std::size_t> feature_columns(FeatureGroup g);

/// Computes per-comment feature vectors, caching post features and the
/// idf table of each (community, month). Not thread-safe.
class FeatureExtractor {
 public:
  FeatureExtractor(const corpus::CorpusStore& store, textfeat::Lexicons lexicons);

  /// Comment text features, then the replied-to post's score, text features
  /// and esotericity (missing post: zeros and missing flag set).
  std::vector<double> comment_features(const corpus::Comment& comment);

  /// Mean of comment_features over the author's first k comments in the
  /// community; empty when the author has fewer than k.
  std::optional<std::vector<double>> first_k_features(std::string_view community,
                                                      std::string_view author, std::size_t k);

  using AuthorComments = std::map<std::string, std::vector<std::size_t>, std::less<>>;
  /// Comment indices of each author in the community, in time order.
  const AuthorComments& comments_by_author(std::string_view community);

 private:
  const std::vector<double>& post_features(std::string_view post_id);

  const corpus::CorpusStore& store_;
  textfeat::Lexicons lexicons_;
  std::map<std::pair<std::string, corpus::MonthKey>, textfeat::IdfTable> idf_;
  std::map<std::string, std::vector<double>, std::less<>> posts_;
  std::map<std::string, AuthorComments, std::less<>> authors_;
};

struct FirstKOptions {
  std::size_t k = 3;
  corpus::MonthKey train_begin{2014, 1};
  corpus::MonthKey train_end{2014, 6};
  corpus::MonthKey test_begin{2014, 7};
  corpus::MonthKey test_end{2014, 10};
  /// Positives hold a Loyal label no later than this many months after arrival.
  int loyal_within_months = 2;
  std::uint64_t seed = 0;
};

struct SplitDatasets {
  Dataset train;
  Dataset test;
  std::vector<std::string> warnings;
};

/// Users arriving in each window with at least k comments in the community.
/// Positives become loyal within the allowed months; negatives never hold a
/// Loyal label for the community within the corpus. Each split is balanced
/// by downsampling its majority class. Throws std::invalid_argument when a
/// split lacks a class.
SplitDatasets build_first_k_dataset(const corpus::CorpusStore& store,
                                    const loyalty::LabelIndex& labels, std::string_view community,
                                    FeatureExtractor& features, const FirstKOptions& options);

struct GroupedDataset {
  Dataset data;
  std::vector<std::string> warnings;
};

/// Up to per_community loyal and as many vagrant top-level comments per
/// community (authors labeled for the comment's month). Communities with
/// fewer comments in either cohort contribute min(loyal, vagrant) of each.
GroupedDataset build_loco_dataset(const corpus::CorpusStore& store,
                                  const loyalty::LabelIndex& labels,
                                  const std::vector<std::string>& communities,
                                  FeatureExtractor& features, std::size_t per_community,
                                  std::uint64_t seed);

/// Permutes labels within each group; class counts are unchanged.
Dataset shuffle_labels(const Dataset& data, std::uint64_t seed);

/// Header `unit,group,label,<features...>`; label is 1 or 0.
void write_dataset_csv(std::ostream& out, const Dataset& data);
/// Throws InputError on malformed input.
Dataset read_dataset_csv(std::istream& in);

}  // namespace loyaltylab::mlpredict
