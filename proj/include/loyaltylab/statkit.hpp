#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace loyaltylab::statkit {

enum class Method { MannWhitneyU, WilcoxonSigned, BinomialSign, Spearman };
std::string_view to_string(Method m);

/// How a rank test computes its p-value.
enum class PValueMode {
  Auto,    // exact when the sample is small enough, normal approximation otherwise
  Exact,   // always exact (counting DP over doubled midranks)
  Normal,  // always the tie- and continuity-corrected normal approximation
};

/// Sample sizes at or below this use exact p-values in Auto mode.
inline constexpr std::size_t kExactLimit = 50;

struct TestResult {
  Method method = Method::MannWhitneyU;
  double statistic = 0.0;
  double p_value = 1.0;  // in (0, 1]
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool exact = false;
  /// p underflowed machine epsilon and was floored; report as "< floor".
  bool floored = false;
};

/// Smallest reportable p-value.
double p_floor();

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> midranks(std::span<const double> values);

double mean(std::span<const double> v);
/// Median (mean of the two middle values for even sizes); 0 for empty input.
double median(std::vector<double> v);
/// Sample standard deviation (n - 1); 0 when fewer than two values.
double stddev(std::span<const double> v);
/// Linear-interpolation quantile (type 7) of a sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);
double pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided Mann-Whitney U test. statistic = U of x (midranks for ties).
/// Throws std::invalid_argument if either sample is empty.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          PValueMode mode = PValueMode::Auto);

/// Two-sided Wilcoxon signed-rank test on paired differences. Zeros are
/// dropped; statistic = min(W+, W-). Throws if no nonzero difference remains.
TestResult wilcoxon_signed_rank(std::span<const double> diffs, PValueMode mode = PValueMode::Auto);

/// Two-sided exact binomial test, p = min(1, 2 * smaller tail).
TestResult binomial_sign_test(std::uint64_t k, std::uint64_t n, double p0 = 0.5);

/// Spearman's rho with a t-approximation p-value (n - 2 df).
/// Throws if sizes differ, n < 3, or either rank vector is constant.
TestResult spearman(std::span<const double> x, std::span<const double> y);

enum class Statistic { Mean, Median };

/// Percentile bootstrap interval. Throws std::invalid_argument if fewer than
/// two values or level not in (0, 1).
std::pair<double, double> bootstrap_ci(std::span<const double> values, Statistic statistic,
                                       double level, std::size_t n_resamples, std::uint64_t seed);

/// Holm step-down rejections, in input order.
std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha = 0.05);

/// Two-sided normal p-value for a z-score.
double normal_two_sided_p(double z);

struct PanelRow {
  std::string community;
  std::string month;
  double loyalty_rate_next = 0.0;
  double loyalty_rate_now = 0.0;
  double network_feature = 0.0;
};

struct RegressionTerm {
  std::string name;
  double coefficient = 0.0;
  double std_error = 0.0;
  double z_score = 0.0;
  double p_value = 1.0;
};

struct RegressionResult {
  std::vector<RegressionTerm> terms;
  std::size_t n_obs = 0;
  double feature_sd = 0.0;  // SD used to standardize network_feature

  const RegressionTerm& term(std::string_view name) const;
  double coefficient(std::string_view name) const { return term(name).coefficient; }
  double std_error(std::string_view name) const { return term(name).std_error; }
  double z_score(std::string_view name) const { return term(name).z_score; }
};

/// Raised when the design matrix is rank deficient; names the dropped terms.
class RankDeficientError : public std::invalid_argument {
 public:
  RankDeficientError(const std::string& what, std::vector<std::string> terms)
      : std::invalid_argument(what), collinear_terms(std::move(terms)) {}
  std::vector<std::string> collinear_terms;
};

/// OLS of loyalty_rate_next on intercept, loyalty_rate_now, the standardized
/// network feature, and community and month indicators (first level of each
/// is the reference). Terms are named "intercept", "loyalty_rate_now",
/// "network_feature", "community[<name>]", "month[<key>]".
RegressionResult panel_regression(std::span<const PanelRow> rows);

}  // namespace loyaltylab::statkit
