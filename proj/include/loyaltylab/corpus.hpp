#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace loyaltylab {

/// Fatal input problem (unreadable file, bad config). Maps to CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace loyaltylab

namespace loyaltylab::corpus {

/// A UTC calendar month.
struct MonthKey {
  int year = 1970;
  int month = 1;  // 1-12

  auto operator<=>(const MonthKey&) const = default;

  MonthKey next() const;
  MonthKey prev() const;
  /// Months since year 0; differences of ordinals count months between keys.
  int ordinal() const { return year * 12 + (month - 1); }
  static MonthKey from_ordinal(int ordinal);
  /// Unix time of the first second of the month.
  std::int64_t start_epoch() const;
  /// "YYYY-MM".
  std::string str() const;
  /// Parses "YYYY-MM"; throws std::invalid_argument.
  static MonthKey parse(std::string_view text);
};

/// UTC calendar month of a unix timestamp. Throws std::invalid_argument if
/// created_at <= 0.
MonthKey month_of(std::int64_t created_at);

struct Comment {
  std::string id;
  /// Parent comment id; empty for top-level comments (parent is the post).
  std::optional<std::string> parent_id;
  std::string post_id;
  std::string community;
  std::string author;
  std::int64_t created_at = 0;
  std::string body;
  std::int64_t score = 0;

  bool is_top_level() const { return !parent_id.has_value(); }
  MonthKey month() const { return month_of(created_at); }
};

struct Post {
  std::string id;
  std::string community;
  std::string author;
  std::int64_t created_at = 0;
  std::string title;
  std::optional<std::string> body;
  std::int64_t score = 0;
  std::int64_t num_comments = 0;

  /// Title and body joined by a space.
  std::string text() const;
};

/// Immutable, indexed comment/post collection.
///
/// Comments are held sorted by (created_at, id) and posts by id, so the
/// store content does not depend on input order.
class CorpusStore {
 public:
  CorpusStore() = default;
  /// Builds indexes. Throws std::invalid_argument on duplicate ids.
  CorpusStore(std::vector<Comment> comments, std::vector<Post> posts);

  std::span<const Comment> comments() const { return comments_; }
  std::span<const Post> posts() const { return posts_; }

  const Comment* find_comment(std::string_view id) const;
  const Post* find_post(std::string_view id) const;

  /// Comment indices (into comments()) in time order.
  std::span<const std::size_t> comments_in(std::string_view community, MonthKey month) const;
  std::span<const std::size_t> comments_on_post(std::string_view post_id) const;
  std::span<const std::size_t> comments_by(std::string_view author, MonthKey month) const;
  /// Post indices (into posts()) created in (community, month).
  std::span<const std::size_t> posts_in(std::string_view community, MonthKey month) const;
  /// All comment indices of a community in time order.
  std::span<const std::size_t> comments_in(std::string_view community) const;

  /// Sorted distinct community names seen in comments.
  const std::vector<std::string>& communities() const { return communities_; }
  bool has_community(std::string_view community) const;
  /// Sorted distinct months that contain at least one comment.
  const std::vector<MonthKey>& months() const { return months_; }
  std::optional<MonthKey> first_month() const;
  std::optional<MonthKey> last_month() const;

 private:
  using Bucket = std::map<MonthKey, std::vector<std::size_t>>;

  std::vector<Comment> comments_;
  std::vector<Post> posts_;
  std::map<std::string, std::size_t, std::less<>> comment_by_id_;
  std::map<std::string, std::size_t, std::less<>> post_by_id_;
  std::map<std::string, Bucket, std::less<>> by_community_month_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_community_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_post_;
  std::map<std::string, Bucket, std::less<>> by_author_month_;
  std::map<std::string, Bucket, std::less<>> posts_by_community_month_;
  std::vector<std::string> communities_;
  std::vector<MonthKey> months_;
};

struct IngestStats {
  std::size_t comments_loaded = 0;
  std::size_t posts_loaded = 0;
  std::size_t comments_skipped = 0;  // malformed or duplicate
  std::size_t posts_skipped = 0;
  std::size_t deleted_dropped = 0;   // "[deleted]" comment authors
  std::vector<std::string> diagnostics;  // first few skip reasons

  std::size_t skipped() const { return comments_skipped + posts_skipped; }
};

/// Parses one dump-format comment line. Returns nullopt and sets `error` when
/// a required field is missing or invalid.
std::optional<Comment> parse_comment_record(std::string_view line, std::string& error);
std::optional<Post> parse_post_record(std::string_view line, std::string& error);

/// Serializes to the dump format (one JSON object, no trailing newline).
std::string to_dump_record(const Comment& c);
std::string to_dump_record(const Post& p);

/// Reads newline-delimited comment and post records. Malformed records are
/// counted in `stats` and skipped; deleted-author comments are dropped.
CorpusStore ingest(std::istream& comments, std::istream& posts, IngestStats& stats);

/// File variant; throws InputError when a file cannot be opened.
CorpusStore ingest_files(const std::filesystem::path& comments, const std::filesystem::path& posts,
                         IngestStats& stats);

/// Keeps communities whose mean distinct-commenter count over their active
/// months is at least `min_commenters_per_month`.
CorpusStore filter_communities(const CorpusStore& store, std::size_t min_commenters_per_month);

/// Comment tallies of one author in one month.
struct UserMonthProfile {
  std::string author;
  MonthKey month;
  std::map<std::string, int, std::less<>> per_community_total;
  std::map<std::string, int, std::less<>> per_community_top_level;

  int total() const;
  int top_level_total() const;
  int total_in(std::string_view community) const;
  int top_level_in(std::string_view community) const;
};

/// All (author, month) profiles of a store, sorted by (month, author).
class ProfileTable {
 public:
  ProfileTable() = default;
  explicit ProfileTable(std::vector<UserMonthProfile> profiles);

  std::span<const UserMonthProfile> all() const { return profiles_; }
  std::span<const UserMonthProfile> in_month(MonthKey month) const;
  const UserMonthProfile* find(std::string_view author, MonthKey month) const;

  /// Sorted months that have at least one profile.
  const std::vector<MonthKey>& months() const { return months_; }

 private:
  std::vector<UserMonthProfile> profiles_;
  std::vector<MonthKey> months_;
  std::map<MonthKey, std::pair<std::size_t, std::size_t>> month_ranges_;
};

ProfileTable build_profiles(const CorpusStore& store);

}  // namespace loyaltylab::corpus
