#include "loyaltylab/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>

#include "json.hpp"

namespace loyaltylab::corpus {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxDiagnostics = 20;
constexpr std::int64_t kSecondsPerDay = 86400;

// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

MonthKey civil_month(std::int64_t days) {
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return MonthKey{static_cast<int>(y + (m <= 2)), static_cast<int>(m)};
}

std::string strip_kind_prefix(std::string_view id) {
  if (id.size() > 3 && id[0] == 't' && id[2] == '_' && id[1] >= '1' && id[1] <= '6') {
    id.remove_prefix(3);
  }
  return std::string(id);
}

bool has_post_prefix(std::string_view id) { return id.size() > 3 && id.substr(0, 3) == "t3_"; }

std::optional<std::string> get_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  return std::nullopt;
}

// Dumps store created_utc and score as numbers or as numeric strings.
std::optional<std::int64_t> get_int(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_number_float()) return static_cast<std::int64_t>(it->get<double>());
  if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  }
  return std::nullopt;
}

void note(IngestStats& stats, std::string msg) {
  if (stats.diagnostics.size() < kMaxDiagnostics) stats.diagnostics.push_back(std::move(msg));
}

template <typename Map>
std::span<const std::size_t> lookup2(const Map& m, std::string_view key, MonthKey month) {
  auto it = m.find(key);
  if (it == m.end()) return {};
  auto jt = it->second.find(month);
  if (jt == it->second.end()) return {};
  return jt->second;
}

}  // namespace

MonthKey MonthKey::next() const {
  return month == 12 ? MonthKey{year + 1, 1} : MonthKey{year, month + 1};
}

MonthKey MonthKey::prev() const {
  return month == 1 ? MonthKey{year - 1, 12} : MonthKey{year, month - 1};
}

MonthKey MonthKey::from_ordinal(int ordinal) {
  return MonthKey{ordinal / 12, ordinal % 12 + 1};
}

std::int64_t MonthKey::start_epoch() const {
  return days_from_civil(year, static_cast<unsigned>(month), 1) * kSecondsPerDay;
}

std::string MonthKey::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

MonthKey MonthKey::parse(std::string_view text) {
  int y = 0, m = 0;
  const auto dash = text.find('-');
  if (dash != 4 || text.size() != 7) throw std::invalid_argument("bad month (want YYYY-MM): " + std::string(text));
  auto r1 = std::from_chars(text.data(), text.data() + dash, y);
  auto r2 = std::from_chars(text.data() + dash + 1, text.data() + text.size(), m);
  if (r1.ec != std::errc() || r1.ptr != text.data() + dash || r2.ec != std::errc() || r2.ptr != text.data() + text.size() || m < 1 ||
      m > 12) {
    throw std::invalid_argument("bad month: " + std::string(text));
  }
  return MonthKey{y, m};
}

MonthKey month_of(std::int64_t created_at) {
  if (created_at <= 0) {
    throw std::invalid_argument("month_of: non-positive timestamp " + std::to_string(created_at));
  }
  return civil_month(created_at / kSecondsPerDay);
}

std::string Post::text() const {
  if (!body || body->empty()) return title;
  return title + " " + *body;
}

CorpusStore::CorpusStore(std::vector<Comment> comments, std::vector<Post> posts)
    : comments_(std::move(comments)), posts_(std::move(posts)) {
  std::sort(comments_.begin(), comments_.end(), [](const Comment& a, const Comment& b) {
    return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
  });
  std::sort(posts_.begin(), posts_.end(),
            [](const Post& a, const Post& b) { return a.id < b.id; });

  std::set<MonthKey> months;
  for (std::size_t i = 0; i < comments_.size(); ++i) {
    const Comment& c = comments_[i];
    if (!comment_by_id_.emplace(c.id, i).second) {
      throw std::invalid_argument("duplicate comment id " + c.id);
    }
    const MonthKey m = c.month();
    months.insert(m);
    by_community_month_[c.community][m].push_back(i);
    by_community_[c.community].push_back(i);
    by_post_[c.post_id].push_back(i);
    by_author_month_[c.author][m].push_back(i);
  }
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    const Post& p = posts_[i];
    if (!post_by_id_.emplace(p.id, i).second) {
      throw std::invalid_argument("duplicate post id " + p.id);
    }
    posts_by_community_month_[p.community][month_of(p.created_at)].push_back(i);
  }
  for (const auto& [name, bucket] : by_community_) communities_.push_back(name);
  months_.assign(months.begin(), months.end());
}

const Comment* CorpusStore::find_comment(std::string_view id) const {
  auto it = comment_by_id_.find(id);
  return it == comment_by_id_.end() ? nullptr : &comments_[it->second];
}

const Post* CorpusStore::find_post(std::string_view id) const {
  auto it = post_by_id_.find(id);
  return it == post_by_id_.end() ? nullptr : &posts_[it->second];
}

std::span<const std::size_t> CorpusStore::comments_in(std::string_view community,
                                                      MonthKey month) const {
  return lookup2(by_community_month_, community, month);
}

std::span<const std::size_t> CorpusStore::comments_in(std::string_view community) const {
  auto it = by_community_.find(community);
  if (it == by_community_.end()) return {};
  return it->second;
}

std::span<const std::size_t> CorpusStore::comments_on_post(std::string_view post_id) const {
  auto it = by_post_.find(post_id);
  if (it == by_post_.end()) return {};
  return it->second;
}

std::span<const std::size_t> CorpusStore::comments_by(std::string_view author,
                                                      MonthKey month) const {
  return lookup2(by_author_month_, author, month);
}

std::span<const std::size_t> CorpusStore::posts_in(std::string_view community,
                                                   MonthKey month) const {
  return lookup2(posts_by_community_month_, community, month);
}

bool CorpusStore::has_community(std::string_view community) const {
  return by_community_.find(community) != by_community_.end();
}

std::optional<MonthKey> CorpusStore::first_month() const {
  if (months_.empty()) return std::nullopt;
  return months_.front();
}

std::optional<MonthKey> CorpusStore::last_month() const {
  if (months_.empty()) return std::nullopt;
  return months_.back();
}

std::optional<Comment> parse_comment_record(std::string_view line, std::string& error) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    error = "not a JSON object";
    return std::nullopt;
  }
  Comment c;
  auto id = get_string(j, "id");
  auto link = get_string(j, "link_id");
  auto community = get_string(j, "subreddit");
  auto author = get_string(j, "author");
  auto created = get_int(j, "created_utc");
  if (!id || id->empty()) error = "missing id";
  else if (!link || link->empty()) error = "missing link_id";
  else if (!community || community->empty()) error = "missing subreddit";
  else if (!author || author->empty()) error = "missing author";
  else if (!created) error = "missing created_utc";
  else if (*created <= 0) error = "non-positive created_utc";
  if (!error.empty()) return std::nullopt;

  c.id = strip_kind_prefix(*id);
  c.post_id = strip_kind_prefix(*link);
  c.community = std::move(*community);
  c.author = std::move(*author);
  c.created_at = *created;
  c.body = get_string(j, "body").value_or("");
  c.score = get_int(j, "score").value_or(0);
  if (auto parent = get_string(j, "parent_id"); parent && !parent->empty()) {
    // Top-level iff the parent designates the post (t3_ prefix, or equal to link_id).
    if (!has_post_prefix(*parent) && strip_kind_prefix(*parent) != c.post_id) {
      c.parent_id = strip_kind_prefix(*parent);
    }
  }
  return c;
}

std::optional<Post> parse_post_record(std::string_view line, std::string& error) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    error = "not a JSON object";
    return std::nullopt;
  }
  Post p;
  auto id = get_string(j, "id");
  auto community = get_string(j, "subreddit");
  auto author = get_string(j, "author");
  auto created = get_int(j, "created_utc");
  auto title = get_string(j, "title");
  if (!id || id->empty()) error = "missing id";
  else if (!community || community->empty()) error = "missing subreddit";
  else if (!author || author->empty()) error = "missing author";
  else if (!created) error = "missing created_utc";
  else if (*created <= 0) error = "non-positive created_utc";
  else if (!title) error = "missing title";
  if (!error.empty()) return std::nullopt;

  p.id = strip_kind_prefix(*id);
  p.community = std::move(*community);
  p.author = std::move(*author);
  p.created_at = *created;
  p.title = std::move(*title);
  p.body = get_string(j, "selftext");
  p.score = get_int(j, "score").value_or(0);
  p.num_comments = get_int(j, "num_comments").value_or(0);
  if (p.num_comments < 0) {
    error = "negative num_comments";
    return std::nullopt;
  }
  return p;
}

std::string to_dump_record(const Comment& c) {
  json j;
  j["id"] = c.id;
  j["parent_id"] = c.parent_id ? "t1_" + *c.parent_id : "t3_" + c.post_id;
  j["link_id"] = "t3_" + c.post_id;
  j["subreddit"] = c.community;
  j["author"] = c.author;
  j["created_utc"] = c.created_at;
  j["body"] = c.body;
  j["score"] = c.score;
  return j.dump();
}

std::string to_dump_record(const Post& p) {
  json j;
  j["id"] = p.id;
  j["subreddit"] = p.community;
  j["author"] = p.author;
  j["created_utc"] = p.created_at;
  j["title"] = p.title;
  if (p.body) j["selftext"] = *p.body;
  j["score"] = p.score;
  j["num_comments"] = p.num_comments;
  return j.dump();
}

CorpusStore ingest(std::istream& comments_in, std::istream& posts_in, IngestStats& stats) {
  std::vector<Comment> comments;
  std::vector<Post> posts;
  std::set<std::string, std::less<>> comment_ids, post_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(comments_in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string error;
    auto c = parse_comment_record(line, error);
    if (!c) {
      ++stats.comments_skipped;
      note(stats, "comments line " + std::to_string(line_no) + ": " + error);
      continue;
    }
    if (c->author == "[deleted]") {
      ++stats.deleted_dropped;
      continue;
    }
    if (!comment_ids.insert(c->id).second) {
      ++stats.comments_skipped;
      note(stats, "comments line " + std::to_string(line_no) + ": duplicate id " + c->id);
      continue;
    }
    comments.push_back(std::move(*c));
  }
  line_no = 0;
  while (std::getline(posts_in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string error;
    auto p = parse_post_record(line, error);
    if (!p) {
      ++stats.posts_skipped;
      note(stats, "posts line " + std::to_string(line_no) + ": " + error);
      continue;
    }
    if (!post_ids.insert(p->id).second) {
      ++stats.posts_skipped;
      note(stats, "posts line " + std::to_string(line_no) + ": duplicate id " + p->id);
      continue;
    }
    posts.push_back(std::move(*p));
  }
  stats.comments_loaded = comments.size();
  stats.posts_loaded = posts.size();
  return CorpusStore(std::move(comments), std::move(posts));
}

CorpusStore ingest_files(const std::filesystem::path& comments, const std::filesystem::path& posts,
                         IngestStats& stats) {
  std::ifstream cin(comments);
  if (!cin) throw InputError("cannot read comments file: " + comments.string());
  std::ifstream pin(posts);
  if (!pin) throw InputError("cannot read posts file: " + posts.string());
  return ingest(cin, pin, stats);
}

CorpusStore filter_communities(const CorpusStore& store, std::size_t min_commenters_per_month) {
  if (min_commenters_per_month == 0) {
    return CorpusStore({store.comments().begin(), store.comments().end()},
                       {store.posts().begin(), store.posts().end()});
  }
  std::set<std::string, std::less<>> keep;
  for (const auto& community : store.communities()) {
    std::size_t active_months = 0, commenter_months = 0;
    for (MonthKey m : store.months()) {
      auto idx = store.comments_in(community, m);
      if (idx.empty()) continue;
      std::set<std::string_view> authors;
      for (std::size_t i : idx) authors.insert(store.comments()[i].author);
      ++active_months;
      commenter_months += authors.size();
    }
    if (active_months > 0 &&
        static_cast<double>(commenter_months) / static_cast<double>(active_months) >=
            static_cast<double>(min_commenters_per_month)) {
      keep.insert(community);
    }
  }
  std::vector<Comment> comments;
  std::vector<Post> posts;
  for (const auto& c : store.comments()) {
    if (keep.contains(c.community)) comments.push_back(c);
  }
  for (const auto& p : store.posts()) {
    if (keep.contains(p.community)) posts.push_back(p);
  }
  return CorpusStore(std::move(comments), std::move(posts));
}

namespace {
int count_in(const std::map<std::string, int, std::less<>>& m, std::string_view key) {
  auto it = m.find(key);
  return it == m.end() ? 0 : it->second;
}
int sum_of(const std::map<std::string, int, std::less<>>& m) {
  int s = 0;
  for (const auto& [k, v] : m) s += v;
  return s;
}
}  // namespace

int UserMonthProfile::total() const { return sum_of(per_community_total); }
int UserMonthProfile::top_level_total() const { return sum_of(per_community_top_level); }
int UserMonthProfile::total_in(std::string_view c) const { return count_in(per_community_total, c); }
int UserMonthProfile::top_level_in(std::string_view c) const {
  return count_in(per_community_top_level, c);
}

ProfileTable::ProfileTable(std::vector<UserMonthProfile> profiles) : profiles_(std::move(profiles)) {
  std::sort(profiles_.begin(), profiles_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.month, a.author) < std::tie(b.month, b.author);
  });
  std::size_t i = 0;
  while (i < profiles_.size()) {
    std::size_t j = i;
    while (j < profiles_.size() && profiles_[j].month == profiles_[i].month) ++j;
    month_ranges_[profiles_[i].month] = {i, j};
    months_.push_back(profiles_[i].month);
    i = j;
  }
}

std::span<const UserMonthProfile> ProfileTable::in_month(MonthKey month) const {
  auto it = month_ranges_.find(month);
  if (it == month_ranges_.end()) return {};
  return std::span<const UserMonthProfile>(profiles_).subspan(
      it->second.first, it->second.second - it->second.first);
}

const UserMonthProfile* ProfileTable::find(std::string_view author, MonthKey month) const {
  auto range = in_month(month);
  auto it = std::lower_bound(range.begin(), range.end(), author,
                             [](const UserMonthProfile& p, std::string_view a) { return p.author < a; });
  if (it == range.end() || it->author != author) return nullptr;
  return &*it;
}

ProfileTable build_profiles(const CorpusStore& store) {
  std::map<std::pair<MonthKey, std::string_view>, UserMonthProfile> acc;
  for (const Comment& c : store.comments()) {
    const MonthKey m = c.month();
    auto [it, inserted] = acc.try_emplace({m, c.author});
    UserMonthProfile& p = it->second;
    if (inserted) {
      p.author = c.author;
      p.month = m;
    }
    ++p.per_community_total[c.community];
    if (c.is_top_level()) ++p.per_community_top_level[c.community];
  }
  std::vector<UserMonthProfile> out;
  out.reserve(acc.size());
  for (auto& [key, p] : acc) out.push_back(std::move(p));
  return ProfileTable(std::move(out));
}

}  // namespace loyaltylab::corpus
