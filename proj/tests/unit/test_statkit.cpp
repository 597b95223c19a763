#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "loyaltylab/rng.hpp"
#include "loyaltylab/statkit.hpp"

using namespace loyaltylab;
using namespace loyaltylab::statkit;

namespace {

std::vector<double> normal_sample(Rng& r, std::size_t n, double mean = 0.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.normal(mean, 1.0);
  return v;
}

}  // namespace

TEST_CASE("midranks average ties") {
  CHECK(midranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("descriptive helpers") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(median({}) == 0);
  CHECK(mean(std::vector<double>{1, 2, 3, 6}) == 3);
  CHECK(stddev(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9}) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(stddev(std::vector<double>{5}) == 0);
  const std::vector<double> sorted{1, 2, 3, 4};
  CHECK(quantile_sorted(sorted, 0.5) == 2.5);
  CHECK(quantile_sorted(sorted, 0.0) == 1);
  CHECK(quantile_sorted(sorted, 1.0) == 4);
}

TEST_CASE("Mann-Whitney examples") {
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  const auto r = mann_whitney_u(x, y);
  CHECK(r.statistic == 0);
  CHECK(r.exact);
  CHECK(r.p_value == doctest::Approx(0.1));
  const auto same = mann_whitney_u(x, x);
  CHECK(same.p_value == doctest::Approx(1.0));
  CHECK_THROWS_AS(mann_whitney_u(x, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("Mann-Whitney detects a 1 SD shift at n=200") {
  Rng r(1);
  const auto x = normal_sample(r, 200), y = normal_sample(r, 200, 1.0);
  const auto t = mann_whitney_u(x, y);
  CHECK_FALSE(t.exact);
  CHECK(t.p_value < 0.01);
}

TEST_CASE("Mann-Whitney exact and normal modes agree at moderate n") {
  Rng r(2);
  const auto x = normal_sample(r, 30), y = normal_sample(r, 30, 0.4);
  const auto exact = mann_whitney_u(x, y, PValueMode::Exact);
  const auto approx = mann_whitney_u(x, y, PValueMode::Normal);
  CHECK(exact.statistic == approx.statistic);
  CHECK(std::fabs(exact.p_value - approx.p_value) < 0.01);
}

TEST_CASE("Wilcoxon examples") {
  const auto r = wilcoxon_signed_rank(std::vector<double>{1, 2, 3});
  CHECK(r.statistic == 0);
  CHECK(r.p_value == doctest::Approx(0.25));
  CHECK(wilcoxon_signed_rank(std::vector<double>{-1, 1}).p_value == doctest::Approx(1.0));
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{0, 0, 0}), std::invalid_argument);
  // Zeros are dropped before ranking.
  CHECK(wilcoxon_signed_rank(std::vector<double>{0, 1, 2, 3}).p_value == doctest::Approx(0.25));
}

TEST_CASE("binomial sign test examples") {
  CHECK(binomial_sign_test(10, 10).p_value == doctest::Approx(2.0 / 1024.0));
  CHECK(binomial_sign_test(5, 10).p_value == doctest::Approx(1.0));
  CHECK(binomial_sign_test(0, 10).p_value == doctest::Approx(2.0 / 1024.0));
  const auto big = binomial_sign_test(230, 242);
  CHECK(big.p_value < 1e-9);
  CHECK(big.p_value > 0.0);
}

TEST_CASE("binomial tail matches direct summation") {
  // Upper tail by exact integer binomial coefficients.
  auto choose = [](int n, int k) {
    double c = 1;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
  };
  for (int n = 1; n <= 30; ++n) {
    for (int k = 0; k <= n; ++k) {
      double lower = 0, upper = 0;
      for (int i = 0; i <= k; ++i) lower += choose(n, i);
      for (int i = k; i <= n; ++i) upper += choose(n, i);
      const double expected = std::min(1.0, 2.0 * std::min(lower, upper) / std::ldexp(1.0, n));
      CHECK(binomial_sign_test(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(n)).p_value ==
            doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("Spearman examples") {
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}).statistic == doctest::Approx(-1.0));
  CHECK(spearman(std::vector<double>{1, 5, 9, 10}, std::vector<double>{0.1, 0.2, 7, 8}).statistic ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST_CASE("Spearman on independent samples is rarely significant") {
  Rng r(3);
  int significant = 0;
  for (int run = 0; run < 100; ++run) {
    const auto x = normal_sample(r, 500), y = normal_sample(r, 500);
    const auto t = spearman(x, y);
    CHECK(std::fabs(t.statistic) < 0.15);
    significant += t.p_value <= 0.05;
  }
  CHECK(significant <= 10);
}

TEST_CASE("bootstrap basics") {
  const std::vector<double> c(10, 4.2);
  const auto [lo, hi] = bootstrap_ci(c, Statistic::Mean, 0.99, 500, 1);
  CHECK(lo == doctest::Approx(4.2).epsilon(1e-12));
  CHECK(hi == doctest::Approx(4.2).epsilon(1e-12));
  CHECK(hi - lo < 1e-12);
  Rng r(4);
  const auto v = normal_sample(r, 40);
  const double m = mean(v);
  const auto ci = bootstrap_ci(v, Statistic::Mean, 0.99, 2000, 9);
  CHECK(ci.first <= m);
  CHECK(m <= ci.second);
  CHECK(bootstrap_ci(v, Statistic::Median, 0.9, 300, 2) == bootstrap_ci(v, Statistic::Median, 0.9, 300, 2));
  CHECK_THROWS_AS(bootstrap_ci(std::vector<double>{1}, Statistic::Mean, 0.9, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_ci(v, Statistic::Mean, 1.0, 10, 1), std::invalid_argument);
}

TEST_CASE("bootstrap coverage is near nominal") {
  Rng r(5);
  int covered = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const auto v = normal_sample(r, 60);
    const auto [lo, hi] = bootstrap_ci(v, Statistic::Mean, 0.9, 1000, derive_seed(77, static_cast<std::uint64_t>(t)));
    covered += lo <= 0.0 && 0.0 <= hi;
  }
  const double coverage = static_cast<double>(covered) / trials;
  CHECK(coverage > 0.87);
  CHECK(coverage < 0.93);
}

TEST_CASE("Holm step-down traces") {
  CHECK(holm_bonferroni(std::vector<double>{0.01, 0.04}) == std::vector<bool>{true, true});
  CHECK(holm_bonferroni(std::vector<double>{0.03, 0.04}) == std::vector<bool>{false, false});
  CHECK(holm_bonferroni(std::vector<double>{0.04}) == std::vector<bool>{true});
  CHECK(holm_bonferroni(std::vector<double>{0.04, 0.001, 0.02}) == std::vector<bool>{true, true, true});
  CHECK(holm_bonferroni(std::vector<double>{0.04, 0.001, 0.03}) == std::vector<bool>{false, true, false});
  CHECK(holm_bonferroni(std::vector<double>{0.5, 0.001, 0.03}) == std::vector<bool>{false, true, false});
}

TEST_CASE("normal two-sided p") {
  CHECK(normal_two_sided_p(0.0) == doctest::Approx(1.0));
  CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05));
}

namespace {

std::vector<PanelRow> planted_panel(std::uint64_t seed, double beta, double noise, int communities = 30, int months = 12) {
  Rng r(seed);
  std::vector<double> feature;
  for (int i = 0; i < communities * months; ++i) feature.push_back(r.normal(3.0, 2.0));
  const double sd = stddev(feature);
  const double m = mean(feature);
  std::vector<PanelRow> rows;
  for (int c = 0; c < communities; ++c) {
    const double offset = 0.2 + 0.01 * c;
    for (int t = 0; t < months; ++t) {
      const std::size_t i = static_cast<std::size_t>(c * months + t);
      PanelRow row;
      row.community = "c" + std::to_string(100 + c);
      row.month = "m" + std::to_string(10 + t);
      row.loyalty_rate_now = 0.3 + 0.4 * r.uniform01();
      row.network_feature = feature[i];
      row.loyalty_rate_next = offset + 0.5 * row.loyalty_rate_now + beta * (feature[i] - m) / sd + 0.003 * t +
                              r.normal(0.0, noise);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace

TEST_CASE("panel regression recovers a planted per-SD coefficient") {
  const auto rows = planted_panel(11, -0.02, 0.01);
  const auto fit = panel_regression(rows);
  CHECK(fit.n_obs == rows.size());
  CHECK(fit.coefficient("network_feature") == doctest::Approx(-0.02).epsilon(0.25));
  CHECK(std::fabs(fit.coefficient("network_feature") + 0.02) < 0.005);
  CHECK(fit.coefficient("loyalty_rate_now") == doctest::Approx(0.5).epsilon(0.05));
  CHECK(fit.term("network_feature").p_value < 1e-6);
  CHECK(fit.feature_sd == doctest::Approx(2.0).epsilon(0.15));
  CHECK(fit.terms.size() == 3 + 29 + 11);
}

TEST_CASE("panel regression matches an exact noiseless fit") {
  const auto rows = planted_panel(12, 0.05, 0.0, 5, 6);
  const auto fit = panel_regression(rows);
  CHECK(fit.coefficient("network_feature") == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(fit.coefficient("loyalty_rate_now") == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fit.coefficient("community[c101]") == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(fit.coefficient("month[m11]") == doctest::Approx(0.003).epsilon(1e-6));
}

TEST_CASE("constant network feature is reported as rank deficient") {
  auto rows = planted_panel(13, -0.02, 0.01, 6, 5);
  for (auto& r : rows) r.network_feature = 0.0;
  try {
    panel_regression(rows);
    FAIL("expected RankDeficientError");
  } catch (const RankDeficientError& e) {
    CHECK(std::find(e.collinear_terms.begin(), e.collinear_terms.end(), "network_feature") !=
          e.collinear_terms.end());
  }
}
