#include <algorithm>
#include <set>

#include "corpus_builder.hpp"
#include "definition_fixture.hpp"
#include "doctest.h"
#include "loyaltylab/loyalty.hpp"
#include "loyaltylab/synthgen.hpp"

using namespace loyaltylab;
using namespace loyaltylab::loyalty;
using corpus::MonthKey;
using corpus::UserMonthProfile;

namespace {

UserMonthProfile profile(std::initializer_list<std::pair<const char*, int>> top) {
  UserMonthProfile p;
  p.author = "u";
  p.month = {2014, 1};
  for (auto [c, n] : top) {
    p.per_community_top_level[c] = n;
    p.per_community_total[c] = n;
  }
  return p;
}

const MonthKey kT{2014, 5};
const MonthKey kT1{2014, 6};

}  // namespace

TEST_CASE("share threshold is inclusive") {
  const LoyaltyParams params;
  CHECK(prefers(profile({{"A", 5}, {"B", 5}}), "A", params) == Preference::Prefers);
  CHECK(prefers(profile({{"A", 5}, {"B", 3}, {"C", 2}}), "A", params) == Preference::Prefers);
  CHECK(prefers(profile({{"A", 4}, {"B", 3}, {"C", 3}}), "A", params) == Preference::DoesNotPrefer);
  CHECK(prefers(profile({{"A", 9}}), "A", params) == Preference::NotEligible);
}

TEST_CASE("relaxed mode is strict plurality") {
  const auto params = LoyaltyParams::community_level();
  CHECK(prefers(profile({{"A", 4}, {"B", 3}, {"C", 3}}), "A", params) == Preference::Prefers);
  CHECK(prefers(profile({{"A", 5}, {"B", 5}}), "A", params) == Preference::DoesNotPrefer);
  CHECK(prefers(profile({{"A", 9}}), "A", params) == Preference::NotEligible);
}

TEST_CASE("equal shares break towards the smaller name") {
  bool tie = false, eligible = false;
  auto pref = preferred_community(profile({{"zeta", 5}, {"beta", 5}}), LoyaltyParams{}, &eligible, &tie);
  CHECK(eligible);
  CHECK(tie);
  REQUIRE(pref);
  CHECK(*pref == "beta");
}

TEST_CASE("params validation") {
  LoyaltyParams p;
  p.preference_threshold = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.vagrant_min = 4;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("loyal requires preference in consecutive months") {
  testsupport::CorpusBuilder b;
  b.tops("steady", "A", kT, 10);
  b.tops("steady", "A", kT1, 10);
  b.tops("mover", "A", kT, 10);
  b.tops("mover", "B", kT1, 10);
  const auto labels = label_loyal(corpus::build_profiles(b.build()), LoyaltyParams{}).labels;
  REQUIRE(labels.size() == 1);
  CHECK(labels[0] == LoyaltyLabel{"steady", "A", kT, LabelKind::Loyal});
}

TEST_CASE("vagrant definition cases") {
  testsupport::CorpusBuilder b;
  b.tops("v", "A", kT, 2);
  b.tops("v", "B", kT1, 5);
  b.tops("churn", "A", kT, 2);
  b.tops("four", "A", kT, 4);
  b.tops("four", "B", kT1, 1);
  const auto labels = label_vagrants(corpus::build_profiles(b.build()), LoyaltyParams{});
  REQUIRE(labels.size() == 1);
  CHECK(labels[0] == LoyaltyLabel{"v", "A", kT, LabelKind::Vagrant});
}

TEST_CASE("loyalty rate excludes platform leavers") {
  testsupport::CorpusBuilder b;
  for (const char* u : {"a", "b", "c", "d"}) b.tops(u, "A", kT, 10);
  b.tops("a", "A", kT1, 10);
  b.tops("b", "A", kT1, 10);
  b.tops("c", "B", kT1, 10);  // switches
  // d leaves the platform.
  const auto profiles = corpus::build_profiles(b.build());
  const auto r = community_loyalty_rate(profiles, "A", kT, LoyaltyParams::community_level());
  CHECK(r.n_preferrers == 4);
  CHECK(r.n_sustained == 2);
  CHECK(r.n_left_platform == 1);
  REQUIRE(r.loyalty_rate);
  CHECK(*r.loyalty_rate == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("all preferrers sustain gives rate 1 and all leave gives no rate") {
  testsupport::CorpusBuilder b;
  for (const char* u : {"a", "b"}) {
    b.tops(u, "A", kT, 10);
    b.tops(u, "A", kT1, 10);
  }
  b.tops("c", "C", kT, 10);
  b.tops("a", "A", kT1.next(), 1);
  const auto profiles = corpus::build_profiles(b.build());
  const auto params = LoyaltyParams::community_level();
  CHECK(*community_loyalty_rate(profiles, "A", kT, params).loyalty_rate == 1.0);
  CHECK_FALSE(community_loyalty_rate(profiles, "C", kT, params).loyalty_rate);
}

TEST_CASE("hand-computed fixture: labels") {
  using namespace testsupport::definition;
  const auto store = build_store();
  const auto profiles = corpus::build_profiles(store);
  std::size_t ties = 0;
  const auto labels = label_users(profiles, LoyaltyParams{}, &ties);
  const auto expected = expected_labels();
  CHECK(labels.size() == expected.size());
  for (const auto& l : expected) {
    CHECK_MESSAGE(std::binary_search(labels.begin(), labels.end(), l),
                  "missing " << l.author << " " << l.community << " " << l.month.str());
  }
  for (const auto& l : labels) {
    CHECK_MESSAGE(std::binary_search(expected.begin(), expected.end(), l),
                  "unexpected " << l.author << " " << l.community << " " << l.month.str());
  }
  CHECK(ties == kExpectedTies);
}

TEST_CASE("hand-computed fixture: plurality rates") {
  using namespace testsupport::definition;
  const auto profiles = corpus::build_profiles(build_store());
  const auto reports = all_loyalty_reports(profiles, LoyaltyParams::community_level());
  const auto expected = expected_rates();
  REQUIRE(reports.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& r = reports[i];
    const auto& e = expected[i];
    CHECK(r.community == e.community);
    CHECK(r.month == e.month);
    CHECK(r.n_preferrers == e.preferrers);
    CHECK(r.n_sustained == e.sustained);
    CHECK(r.n_left_platform == e.left);
    REQUIRE(r.loyalty_rate);
    CHECK(*r.loyalty_rate == static_cast<double>(e.rate_num) / e.rate_den);
    const auto single = community_loyalty_rate(profiles, e.community, e.month, LoyaltyParams::community_level());
    CHECK(single.n_sustained == r.n_sustained);
    CHECK(single.loyalty_rate == r.loyalty_rate);
  }
  for (const auto& [c, num, den] : expected_pooled()) {
    CHECK(pooled_rate(reports, c) == static_cast<double>(num) / den);
  }
}

TEST_CASE("hand-computed fixture: share-mode rate for alpha in January") {
  using namespace testsupport::definition;
  const auto profiles = corpus::build_profiles(build_store());
  // Share mode: u31 drops out as a preferrer, u29 joins through the tie.
  const auto r = community_loyalty_rate(profiles, "alpha", kJan, LoyaltyParams{});
  CHECK(r.n_preferrers == 31);
  CHECK(r.n_sustained == 23);
  CHECK(r.n_left_platform == 3);
}

namespace {

std::vector<CommunityLoyaltyReport> reports_with_rates(const std::vector<double>& rates, int sustained_cap = 100) {
  std::vector<CommunityLoyaltyReport> out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    CommunityLoyaltyReport r;
    r.community = "c" + std::to_string(i);
    r.month = kT;
    r.n_preferrers = 100;
    r.n_sustained = static_cast<int>(rates[i] * 100 + 0.5);
    r.n_sustained = std::min(r.n_sustained, sustained_cap);
    r.loyalty_rate = r.n_sustained / 100.0;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("eight communities: top two loyal, bottom two non-loyal") {
  const auto tiers = tier_communities(reports_with_rates({0.3, 0.1, 0.8, 0.5, 0.2, 0.7, 0.4, 0.6}), 0);
  REQUIRE(tiers.size() == 8);
  std::set<std::string> loyal, nonloyal;
  for (const auto& t : tiers) {
    if (t.tier == Tier::Loyal) loyal.insert(t.community);
    if (t.tier == Tier::NonLoyal) nonloyal.insert(t.community);
  }
  CHECK(loyal == std::set<std::string>{"c2", "c5"});
  CHECK(nonloyal == std::set<std::string>{"c1", "c4"});
  CHECK(tiers.front().mean_loyalty_rate == doctest::Approx(0.8));
}

TEST_CASE("tier screen uses the maximum monthly sustained count") {
  auto reports = reports_with_rates({0.5, 0.6, 0.7});
  reports[0].n_sustained = 24;
  auto second = reports[0];
  second.month = kT1;
  second.n_sustained = 24;
  reports.push_back(second);
  const auto tiers = tier_communities(reports, 25);
  CHECK(tiers.size() == 2);
  for (const auto& t : tiers) CHECK(t.community != "c0");
  reports[0].n_sustained = 25;
  CHECK(tier_communities(reports, 25).size() == 3);
  CHECK_THROWS_AS(tier_communities(reports_with_rates({0.5}), 0), std::invalid_argument);
}

TEST_CASE("descriptives: thread length, contributors, tenure") {
  testsupport::CorpusBuilder b;
  const MonthKey mar{2014, 3};
  const auto first = b.top("a", "A", mar);
  b.reply_to("b", first);
  b.reply_to("a", first);
  b.top("c", "A", mar);
  const auto store = b.build();
  std::vector<LoyaltyLabel> labels;
  for (MonthKey m : {MonthKey{2014, 3}, MonthKey{2014, 4}, MonthKey{2014, 7}}) {
    labels.push_back({"a", "A", m, LabelKind::Loyal});
  }
  labels.push_back({"b", "A", mar, LabelKind::Loyal});
  labels.push_back({"c", "A", mar, LabelKind::Vagrant});
  const LabelIndex index(labels);
  const auto d = community_descriptives(store, index, "A");
  CHECK(d.thread_length_median == 4);
  CHECK(d.thread_unique_contributors_median == 3);
  CHECK(d.commenters_per_month == 3);
  CHECK(d.comments_per_user == doctest::Approx(4.0 / 3.0));
  REQUIRE(d.loyal_tenure_mean);
  CHECK(*d.loyal_tenure_mean == 2.0);
  const auto tenures = loyal_tenures(index, "A");
  REQUIRE(tenures.size() == 2);
  CHECK(tenures[0] == std::pair<std::string, int>{"a", 3});
  CHECK_THROWS_AS(community_descriptives(store, index, "missing"), std::invalid_argument);
}

TEST_CASE("label index queries") {
  const LabelIndex index({{"b", "A", kT, LabelKind::Loyal},
                          {"a", "A", kT1, LabelKind::Loyal},
                          {"a", "A", kT, LabelKind::Loyal},
                          {"a", "B", kT, LabelKind::Vagrant}});
  CHECK(index.has("a", "A", kT, LabelKind::Loyal));
  CHECK_FALSE(index.has("a", "A", kT, LabelKind::Vagrant));
  CHECK(index.months("a", "A", LabelKind::Loyal) == std::vector<MonthKey>{kT, kT1});
  CHECK(index.authors("A", LabelKind::Loyal) == std::vector<std::string>{"a", "b"});
  CHECK(index.authors("B", LabelKind::Loyal).empty());
}

TEST_CASE("planted synthetic loyal and vagrant sets are recovered exactly") {
  auto cfg = synthgen::SynthConfig::with_communities(2, 0.3, 0.7);
  cfg.users_per_community = 500;
  cfg.render_text = false;
  cfg.seed = 12;
  const auto synth = synthgen::generate(cfg);
  const auto store = corpus::CorpusStore(synth.comments, synth.posts);
  const auto profiles = corpus::build_profiles(store);
  const auto loyal = label_loyal(profiles, LoyaltyParams{}).labels;
  const auto vagrant = label_vagrants(profiles, LoyaltyParams{});
  CHECK(loyal.size() > 100);
  CHECK(loyal == synth.truth.loyal);
  CHECK(vagrant == synth.truth.vagrant);
}

TEST_CASE("planted two-tier population is tiered correctly") {
  auto cfg = synthgen::SynthConfig::with_communities(8, 0.2, 0.9);
  cfg.users_per_community = 300;
  cfg.render_text = false;
  cfg.seed = 5;
  const auto synth = synthgen::generate(cfg);
  const auto profiles = corpus::build_profiles(corpus::CorpusStore(synth.comments, synth.posts));
  const auto tiers = tier_communities(all_loyalty_reports(profiles, LoyaltyParams::community_level()), 25);
  REQUIRE(tiers.size() == 8);
  // with_communities orders stay probabilities descending: c00, c01 planted high; c06, c07 low.
  std::set<std::string> loyal, nonloyal;
  for (const auto& t : tiers) {
    if (t.tier == Tier::Loyal) loyal.insert(t.community);
    if (t.tier == Tier::NonLoyal) nonloyal.insert(t.community);
  }
  CHECK(loyal == std::set<std::string>{"c00", "c01"});
  CHECK(nonloyal == std::set<std::string>{"c06", "c07"});
}
