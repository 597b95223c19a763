#pragma once

// Fifty users over 2014-01..2014-03 in communities alpha, beta and gamma,
// arranged to hit every labeling boundary. Expected values below were worked
// out by hand from the activity table, not by running the library.

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

#include "corpus_builder.hpp"
#include "loyaltylab/loyalty.hpp"

namespace testsupport::definition {

inline const MonthKey kJan{2014, 1};
inline const MonthKey kFeb{2014, 2};
inline const MonthKey kMar{2014, 3};

struct Activity {
  std::string user;
  int month;  // 1..3
  std::string community;
  int top_level;
  int replies;
};

inline std::string uid(int i) { return (i < 10 ? "u0" : "u") + std::to_string(i); }

inline std::vector<Activity> activity_table() {
  std::vector<Activity> a;
  auto add = [&](int user, int month, const char* c, int top, int rep = 0) {
    a.push_back({uid(user), month, c, top, rep});
  };
  // u01-u20: steady in alpha.
  for (int u = 1; u <= 20; ++u) {
    for (int m = 1; m <= 3; ++m) add(u, m, "alpha", 10);
  }
  // u21-u25: switch from alpha to beta; u22 moves on to gamma in March.
  for (int u = 21; u <= 25; ++u) {
    add(u, 1, "alpha", 10);
    add(u, 2, "beta", 10);
    add(u, 3, u == 22 ? "gamma" : "beta", 10);
  }
  // u26-u28: alpha in January, then leave the platform.
  for (int u = 26; u <= 28; ++u) add(u, 1, "alpha", 10);
  // u29: exactly ten, split 5/5 in January and February.
  add(29, 1, "alpha", 5), add(29, 1, "beta", 5);
  add(29, 2, "alpha", 5), add(29, 2, "beta", 5);
  // u30: exactly half in alpha.
  add(30, 1, "alpha", 5), add(30, 1, "beta", 3), add(30, 1, "gamma", 2);
  add(30, 2, "alpha", 5), add(30, 2, "beta", 4), add(30, 2, "gamma", 1);
  add(30, 3, "alpha", 10);
  // u31: 40% in January (plurality only), then alpha.
  add(31, 1, "alpha", 4), add(31, 1, "beta", 3), add(31, 1, "gamma", 3);
  add(31, 2, "alpha", 10);
  add(31, 3, "alpha", 10);
  // u32: nine top-level comments plus replies; never eligible.
  add(32, 1, "alpha", 9, 5);
  add(32, 2, "alpha", 9);
  add(32, 3, "alpha", 9);
  // u33: exactly ten top-level comments, replies elsewhere.
  add(33, 1, "alpha", 10), add(33, 1, "gamma", 0, 3);
  add(33, 2, "alpha", 10);
  // u34-u38: three-comment alpha vagrants who are loyal to beta.
  for (int u = 34; u <= 38; ++u) {
    add(u, 1, "beta", 10), add(u, 1, "alpha", 3);
    add(u, 2, "beta", 10);
    add(u, 3, "beta", 10);
  }
  // u39: four alpha comments, one too many for vagrancy.
  add(39, 1, "beta", 10), add(39, 1, "alpha", 4);
  add(39, 2, "beta", 10);
  // u40: returns to alpha with a reply.
  add(40, 1, "beta", 10), add(40, 1, "alpha", 1);
  add(40, 2, "beta", 10), add(40, 2, "alpha", 0, 1);
  add(40, 3, "beta", 10);
  // u41: three alpha comments, then leaves; back in March.
  add(41, 1, "alpha", 3);
  add(41, 3, "gamma", 2);
  // u42: gamma vagrant who is active in alpha next month.
  add(42, 1, "gamma", 2);
  add(42, 2, "alpha", 1);
  // u43: replies only in alpha.
  add(43, 1, "beta", 10), add(43, 1, "alpha", 0, 3);
  add(43, 2, "beta", 10);
  // u44-u47: steady in gamma.
  for (int u = 44; u <= 47; ++u) {
    for (int m = 1; m <= 3; ++m) add(u, m, "gamma", 10);
  }
  // u48: gamma, then a 5/5 tie broken towards alpha, then alpha.
  add(48, 1, "gamma", 10);
  add(48, 2, "gamma", 5), add(48, 2, "alpha", 5);
  add(48, 3, "alpha", 10);
  // u49: two alpha comments two months running, then one in beta.
  add(49, 1, "alpha", 2);
  add(49, 2, "alpha", 2);
  add(49, 3, "beta", 1);
  // u50: three beta comments, then gamma.
  add(50, 1, "beta", 3);
  add(50, 2, "gamma", 10);
  add(50, 3, "gamma", 10);
  return a;
}

inline CorpusStore build_store() {
  const MonthKey months[] = {kJan, kFeb, kMar};
  CorpusBuilder b;
  const auto table = activity_table();
  for (const auto& a : table) b.tops(a.user, a.community, months[a.month - 1], a.top_level);
  for (const auto& a : table) b.replies(a.user, a.community, months[a.month - 1], a.replies);
  return b.build();
}

using loyaltylab::loyalty::LabelKind;
using loyaltylab::loyalty::LoyaltyLabel;

inline std::vector<LoyaltyLabel> expected_labels() {
  std::vector<LoyaltyLabel> out;
  auto loyal = [&](int u, const char* c, MonthKey m) { out.push_back({uid(u), c, m, LabelKind::Loyal}); };
  auto vagrant = [&](int u, const char* c, MonthKey m) { out.push_back({uid(u), c, m, LabelKind::Vagrant}); };
  for (int u = 1; u <= 20; ++u) loyal(u, "alpha", kJan), loyal(u, "alpha", kFeb);
  loyal(29, "alpha", kJan);
  loyal(30, "alpha", kJan), loyal(30, "alpha", kFeb);
  loyal(31, "alpha", kFeb);
  loyal(33, "alpha", kJan);
  loyal(48, "alpha", kFeb);
  for (int u : {21, 23, 24, 25}) loyal(u, "beta", kFeb);
  for (int u = 34; u <= 38; ++u) loyal(u, "beta", kJan), loyal(u, "beta", kFeb);
  loyal(39, "beta", kJan);
  loyal(40, "beta", kJan), loyal(40, "beta", kFeb);
  loyal(43, "beta", kJan);
  for (int u = 44; u <= 47; ++u) loyal(u, "gamma", kJan), loyal(u, "gamma", kFeb);
  loyal(50, "gamma", kFeb);

  for (int u = 34; u <= 38; ++u) vagrant(u, "alpha", kJan);
  vagrant(49, "alpha", kFeb);
  vagrant(31, "beta", kJan);
  vagrant(50, "beta", kJan);
  vagrant(31, "gamma", kJan);
  vagrant(42, "gamma", kJan);
  vagrant(30, "gamma", kFeb);
  std::sort(out.begin(), out.end());
  return out;
}

/// Ties among strict-mode preferrers with a successor month: u29 in January
/// and February, u48 in February.
inline constexpr std::size_t kExpectedTies = 3;

struct ExpectedRate {
  std::string community;
  MonthKey month;
  int preferrers, sustained, left;
  int rate_num, rate_den;
};

/// Plurality-mode reports.
inline std::vector<ExpectedRate> expected_rates() {
  return {
      {"alpha", kJan, 31, 23, 3, 23, 28}, {"alpha", kFeb, 23, 22, 1, 22, 22},
      {"beta", kJan, 8, 8, 0, 8, 8},      {"beta", kFeb, 13, 10, 2, 10, 11},
      {"gamma", kJan, 5, 4, 0, 4, 5},     {"gamma", kFeb, 5, 5, 0, 5, 5},
  };
}

/// Pooled plurality-mode rates: alpha 45/50, beta 18/19, gamma 9/10.
inline std::vector<std::tuple<std::string, int, int>> expected_pooled() {
  return {{"alpha", 45, 50}, {"beta", 18, 19}, {"gamma", 9, 10}};
}

}  // namespace testsupport::definition
