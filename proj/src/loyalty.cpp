#include "loyaltylab/loyalty.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "loyaltylab/statkit.hpp"

namespace loyaltylab::loyalty {

using corpus::ProfileTable;
using corpus::UserMonthProfile;

void LoyaltyParams::validate() const {
  if (!(preference_threshold > 0.0 && preference_threshold <= 1.0)) {
    throw std::invalid_argument("preference_threshold must be in (0, 1]");
  }
  if (min_monthly_comments < 0) throw std::invalid_argument("min_monthly_comments must be >= 0");
  if (vagrant_min < 1 || vagrant_min > vagrant_max) {
    throw std::invalid_argument("need 1 <= vagrant_min <= vagrant_max");
  }
}

std::optional<std::string> preferred_community(const UserMonthProfile& profile,
                                               const LoyaltyParams& params, bool* eligible,
                                               bool* tie_broken) {
  const int total = profile.top_level_total();
  const bool ok = total > 0 && total >= params.min_monthly_comments;
  if (eligible) *eligible = ok;
  if (tie_broken) *tie_broken = false;
  if (!ok) return std::nullopt;

  // Map order is lexicographic, so the first maximum is the smallest name.
  const std::string* best = nullptr;
  int best_count = 0, n_at_best = 0;
  for (const auto& [community, count] : profile.per_community_top_level) {
    if (count > best_count) {
      best = &community;
      best_count = count;
      n_at_best = 1;
    } else if (count == best_count) {
      ++n_at_best;
    }
  }
  if (best == nullptr) return std::nullopt;
  if (params.relaxed_preference) {
    if (n_at_best > 1) return std::nullopt;
    return *best;
  }
  // best_count / total >= threshold, evaluated without division.
  if (static_cast<double>(best_count) < params.preference_threshold * total - 1e-9) {
    return std::nullopt;
  }
  if (n_at_best > 1 && tie_broken) *tie_broken = true;
  return *best;
}

Preference prefers(const UserMonthProfile& profile, std::string_view community,
                   const LoyaltyParams& params) {
  bool eligible = false;
  auto pref = preferred_community(profile, params, &eligible);
  if (!eligible) return Preference::NotEligible;
  return pref && *pref == community ? Preference::Prefers : Preference::DoesNotPrefer;
}

namespace {

bool has_successor(const ProfileTable& profiles, corpus::MonthKey t) {
  return !profiles.months().empty() && t.next() <= profiles.months().back();
}

}  // namespace

Labeling label_loyal(const ProfileTable& profiles, const LoyaltyParams& params) {
  params.validate();
  Labeling out;
  for (corpus::MonthKey t : profiles.months()) {
    if (!has_successor(profiles, t)) continue;
    const corpus::MonthKey t1 = t.next();
    for (const UserMonthProfile& p : profiles.in_month(t)) {
      bool tie = false;
      auto pref = preferred_community(p, params, nullptr, &tie);
      if (!pref) continue;
      if (tie) ++out.preference_ties;
      const UserMonthProfile* next = profiles.find(p.author, t1);
      if (!next) continue;
      auto pref_next = preferred_community(*next, params);
      if (pref_next && *pref_next == *pref) {
        out.labels.push_back({p.author, *pref, t, LabelKind::Loyal});
      }
    }
  }
  std::sort(out.labels.begin(), out.labels.end());
  return out;
}

std::vector<LoyaltyLabel> label_vagrants(const ProfileTable& profiles, const LoyaltyParams& params) {
  params.validate();
  std::vector<LoyaltyLabel> out;
  for (corpus::MonthKey t : profiles.months()) {
    if (!has_successor(profiles, t)) continue;
    const corpus::MonthKey t1 = t.next();
    for (const UserMonthProfile& p : profiles.in_month(t)) {
      const UserMonthProfile* next = nullptr;
      bool looked_up = false;
      for (const auto& [community, count] : p.per_community_top_level) {
        if (count < params.vagrant_min || count > params.vagrant_max) continue;
        if (!looked_up) {
          next = profiles.find(p.author, t1);
          looked_up = true;
        }
        if (next == nullptr || next->total() == 0) continue;  // left the platform
        if (next->total_in(community) != 0) continue;
        out.push_back({p.author, community, t, LabelKind::Vagrant});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<LoyaltyLabel> label_users(const ProfileTable& profiles, const LoyaltyParams& params,
                                      std::size_t* preference_ties) {
  Labeling loyal = label_loyal(profiles, params);
  std::vector<LoyaltyLabel> all = std::move(loyal.labels);
  auto vagrants = label_vagrants(profiles, params);
  all.insert(all.end(), vagrants.begin(), vagrants.end());
  std::sort(all.begin(), all.end());
  if (preference_ties) *preference_ties = loyal.preference_ties;
  return all;
}

namespace {

auto index_key(const LoyaltyLabel& l) {
  return std::tie(l.community, l.kind, l.author, l.month);
}

}  // namespace

LabelIndex::LabelIndex(const std::vector<LoyaltyLabel>& labels) : sorted_(labels) {
  std::sort(sorted_.begin(), sorted_.end(),
            [](const auto& a, const auto& b) { return index_key(a) < index_key(b); });
}

bool LabelIndex::has(std::string_view author, std::string_view community, MonthKey month,
                     LabelKind kind) const {
  auto key = std::make_tuple(community, kind, author, month);
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), key, [](const LoyaltyLabel& l, const auto& k) {
    return std::make_tuple(std::string_view(l.community), l.kind, std::string_view(l.author), l.month) < k;
  });
  return it != sorted_.end() && it->community == community && it->kind == kind &&
         it->author == author && it->month == month;
}

std::vector<MonthKey> LabelIndex::months(std::string_view author, std::string_view community,
                                         LabelKind kind) const {
  auto key = std::make_tuple(community, kind, author);
  auto proj = [](const LoyaltyLabel& l) {
    return std::make_tuple(std::string_view(l.community), l.kind, std::string_view(l.author));
  };
  auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), key,
                             [&](const LoyaltyLabel& l, const auto& k) { return proj(l) < k; });
  std::vector<MonthKey> out;
  for (auto it = lo; it != sorted_.end() && proj(*it) == key; ++it) out.push_back(it->month);
  return out;
}

std::vector<std::string> LabelIndex::authors(std::string_view community, LabelKind kind) const {
  auto key = std::make_tuple(community, kind);
  auto proj = [](const LoyaltyLabel& l) { return std::make_tuple(std::string_view(l.community), l.kind); };
  auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), key,
                             [&](const LoyaltyLabel& l, const auto& k) { return proj(l) < k; });
  std::vector<std::string> out;
  for (auto it = lo; it != sorted_.end() && proj(*it) == key; ++it) {
    if (out.empty() || out.back() != it->author) out.push_back(it->author);
  }
  return out;
}

namespace {

void finish(CommunityLoyaltyReport& r) {
  const int denom = r.n_preferrers - r.n_left_platform;
  if (denom > 0) {
    r.loyalty_rate = static_cast<double>(r.n_sustained) / denom;
  } else {
    r.loyalty_rate.reset();
  }
}

}  // namespace

CommunityLoyaltyReport community_loyalty_rate(const ProfileTable& profiles,
                                              std::string_view community, MonthKey month,
                                              const LoyaltyParams& params) {
  params.validate();
  CommunityLoyaltyReport r;
  r.community = std::string(community);
  r.month = month;
  const MonthKey t1 = month.next();
  for (const UserMonthProfile& p : profiles.in_month(month)) {
    auto pref = preferred_community(p, params);
    if (!pref || *pref != community) continue;
    ++r.n_preferrers;
    const UserMonthProfile* next = profiles.find(p.author, t1);
    if (next == nullptr || next->total() == 0) {
      ++r.n_left_platform;
      continue;
    }
    auto pref_next = preferred_community(*next, params);
    if (pref_next && *pref_next == community) ++r.n_sustained;
  }
  finish(r);
  return r;
}

std::vector<CommunityLoyaltyReport> all_loyalty_reports(const ProfileTable& profiles,
                                                        const LoyaltyParams& params) {
  params.validate();
  std::map<std::pair<std::string, MonthKey>, CommunityLoyaltyReport> acc;
  for (MonthKey t : profiles.months()) {
    if (!has_successor(profiles, t)) continue;
    const MonthKey t1 = t.next();
    for (const UserMonthProfile& p : profiles.in_month(t)) {
      auto pref = preferred_community(p, params);
      if (!pref) continue;
      auto [it, inserted] = acc.try_emplace({*pref, t});
      CommunityLoyaltyReport& r = it->second;
      if (inserted) {
        r.community = *pref;
        r.month = t;
      }
      ++r.n_preferrers;
      const UserMonthProfile* next = profiles.find(p.author, t1);
      if (next == nullptr || next->total() == 0) {
        ++r.n_left_platform;
        continue;
      }
      auto pref_next = preferred_community(*next, params);
      if (pref_next && *pref_next == *pref) ++r.n_sustained;
    }
  }
  std::vector<CommunityLoyaltyReport> out;
  out.reserve(acc.size());
  for (auto& [key, r] : acc) {
    finish(r);
    out.push_back(std::move(r));
  }
  return out;
}

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::Loyal: return "loyal";
    case Tier::Middle: return "middle";
    case Tier::NonLoyal: return "nonloyal";
  }
  return "middle";
}

std::optional<double> pooled_rate(const std::vector<CommunityLoyaltyReport>& reports,
                                  std::string_view community) {
  long sustained = 0, denom = 0;
  for (const auto& r : reports) {
    if (r.community != community) continue;
    sustained += r.n_sustained;
    denom += r.n_preferrers - r.n_left_platform;
  }
  if (denom <= 0) return std::nullopt;
  return static_cast<double>(sustained) / static_cast<double>(denom);
}

std::vector<CommunityTier> tier_communities(const std::vector<CommunityLoyaltyReport>& reports,
                                            int min_loyal_users) {
  std::map<std::string, std::pair<long, long>> pooled;  // sustained, denominator
  std::map<std::string, int> max_sustained;
  for (const auto& r : reports) {
    auto& [s, d] = pooled[r.community];
    s += r.n_sustained;
    d += r.n_preferrers - r.n_left_platform;
    int& m = max_sustained[r.community];
    m = std::max(m, r.n_sustained);
  }
  std::vector<CommunityTier> out;
  for (const auto& [community, sd] : pooled) {
    if (max_sustained[community] < min_loyal_users || sd.second <= 0) continue;
    out.push_back({community, static_cast<double>(sd.first) / static_cast<double>(sd.second),
                   Tier::Middle});
  }
  if (out.size() < 2) {
    throw std::invalid_argument("tier_communities: need at least 2 eligible communities, have " +
                                std::to_string(out.size()));
  }
  std::sort(out.begin(), out.end(), [](const CommunityTier& a, const CommunityTier& b) {
    if (a.mean_loyalty_rate != b.mean_loyalty_rate) return a.mean_loyalty_rate > b.mean_loyalty_rate;
    return a.community < b.community;
  });
  const std::size_t q = std::max<std::size_t>(1, out.size() / 4);
  for (std::size_t i = 0; i < q; ++i) {
    out[i].tier = Tier::Loyal;
    out[out.size() - 1 - i].tier = Tier::NonLoyal;
  }
  return out;
}

std::vector<std::pair<std::string, int>> loyal_tenures(const LabelIndex& labels,
                                                       std::string_view community) {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& author : labels.authors(community, LabelKind::Loyal)) {
    out.emplace_back(author, static_cast<int>(labels.months(author, community, LabelKind::Loyal).size()));
  }
  return out;
}

CommunityDescriptives community_descriptives(const corpus::CorpusStore& store,
                                             const LabelIndex& labels, std::string_view community) {
  if (!store.has_community(community)) {
    throw std::invalid_argument("community not in corpus: " + std::string(community));
  }
  CommunityDescriptives d;
  d.community = std::string(community);

  std::size_t active_months = 0, commenter_months = 0, n_comments = 0;
  for (MonthKey m : store.months()) {
    auto idx = store.comments_in(community, m);
    if (idx.empty()) continue;
    std::set<std::string_view> authors;
    for (std::size_t i : idx) authors.insert(store.comments()[i].author);
    ++active_months;
    commenter_months += authors.size();
    n_comments += idx.size();
  }
  d.commenters_per_month = static_cast<double>(commenter_months) / static_cast<double>(active_months);
  d.comments_per_user = static_cast<double>(n_comments) / static_cast<double>(commenter_months);

  std::set<std::string_view> post_ids;
  for (std::size_t i : store.comments_in(community)) post_ids.insert(store.comments()[i].post_id);
  std::vector<double> lengths, contributors;
  for (std::string_view pid : post_ids) {
    auto idx = store.comments_on_post(pid);
    std::set<std::string_view> authors;
    for (std::size_t i : idx) authors.insert(store.comments()[i].author);
    lengths.push_back(static_cast<double>(idx.size()));
    contributors.push_back(static_cast<double>(authors.size()));
  }
  d.thread_length_median = statkit::median(lengths);
  d.thread_unique_contributors_median = statkit::median(contributors);

  auto tenures = loyal_tenures(labels, community);
  if (!tenures.empty()) {
    double sum = 0;
    for (const auto& [author, months] : tenures) sum += months;
    d.loyal_tenure_mean = sum / static_cast<double>(tenures.size());
  }
  return d;
}

}  // namespace loyaltylab::loyalty
