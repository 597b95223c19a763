#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "loyaltylab/corpus.hpp"
#include "loyaltylab/loyalty.hpp"

namespace loyaltylab::textfeat {

using WordSet = std::set<std::string, std::less<>>;

/// Lowercase; splits on runs of anything that is not a letter, digit or
/// in-word apostrophe. U+2018/U+2019 count as apostrophes, other general
/// punctuation (dashes, ellipses) separates. Non-ASCII letters are kept
/// byte for byte.
std::vector<std::string> tokenize(std::string_view text);

struct Lexicons {
  WordSet pronoun_i;
  WordSet pronoun_you;
  WordSet pronoun_we;
  WordSet affect_positive;
  WordSet affect_negative;
  std::optional<WordSet> noun_vocabulary;
  WordSet stopwords;

  /// Built-in pronoun lists plus small affect and stopword lists.
  static Lexicons defaults();

  /// Throws std::invalid_argument if a word is not lowercase or the pronoun
  /// lists overlap.
  void validate() const;

  /// Vocabulary membership when a vocabulary is loaded; otherwise
  /// alphabetic, not a stopword, at least 3 characters.
  bool is_noun(std::string_view token) const;
  bool heuristic_nouns() const { return !noun_vocabulary.has_value(); }
};

/// One lowercase word per line; blank lines and `#` comments ignored.
/// Throws InputError if the file cannot be read.
WordSet read_word_list(const std::filesystem::path& path);

/// Loads `<dir>/{i,you,we,affect_positive,affect_negative,stopwords,nouns}.txt`.
/// Missing files keep the built-in default (nouns: heuristic fallback).
Lexicons load_lexicons(const std::filesystem::path& dir);

struct FeatureVector {
  std::size_t verbosity = 0;
  double rate_i = 0.0;
  double rate_you = 0.0;
  double rate_we = 0.0;
  double rate_affect_pos = 0.0;
  double rate_affect_neg = 0.0;
  std::optional<std::int64_t> post_score;
  std::optional<double> esotericity;

  /// No tokens: the rates are undefined and left at zero.
  bool empty() const { return verbosity == 0; }
};

FeatureVector linguistic_features(std::string_view text, const Lexicons& lexicons);

using IdfTable = std::map<std::string, double, std::less<>>;

/// idf(w) = ln(N / df(w)) over the noun tokens of `documents`. Nouns whose
/// total token count across all documents is 1 are left out.
IdfTable idf_table(const std::vector<std::string>& documents, const Lexicons& lexicons);

/// Table over the posts created in (community, month); empty when there are
/// none.
IdfTable idf_table(const corpus::CorpusStore& store, std::string_view community,
                   corpus::MonthKey month, const Lexicons& lexicons);

/// Mean idf over the text's tokens that appear in the table, counting
/// repeats. Empty when no token is in the table.
std::optional<double> esotericity(std::string_view text, const IdfTable& table);

struct SelectedPost {
  std::string author;
  std::string post_id;
  std::int64_t score = 0;
  std::int64_t num_comments = 0;
  corpus::MonthKey month;  // month the post was created
};

struct SelectedPosts {
  std::vector<SelectedPost> loyal_selected;
  std::vector<SelectedPost> vagrant_selected;
  std::vector<std::string> warnings;
};

/// Samples n users per cohort uniformly without replacement, then one post
/// each (uniform over the posts they commented on in the community during a
/// labeled month). Users whose posts are all missing from the store are
/// skipped. Cohorts smaller than n are taken whole with a warning.
SelectedPosts sample_selected_posts(const corpus::CorpusStore& store,
                                    const loyalty::LabelIndex& labels, std::string_view community,
                                    std::size_t n, std::uint64_t seed);

struct CommentPair {
  std::string post_id;
  std::string loyal_comment_id;
  std::string vagrant_comment_id;

  auto operator<=>(const CommentPair&) const = default;
};

/// Pairs of top-level comments on the same post whose authors are labeled
/// Loyal and Vagrant for (community, comment month). per_post pairs are drawn
/// without replacement from each post's loyal x vagrant product; 0 takes the
/// whole product. Sorted by (post_id, loyal id, vagrant id).
std::vector<CommentPair> build_comment_pairs(const corpus::CorpusStore& store,
                                             const loyalty::LabelIndex& labels,
                                             std::string_view community, std::size_t per_post,
                                             std::uint64_t seed);

struct FeatureRow {
  std::string id;
  FeatureVector features;
};

void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows);
void write_pairs_csv(std::ostream& out, const std::vector<CommentPair>& pairs);

}  // namespace loyaltylab::textfeat
