#include "loyaltylab/statkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "loyaltylab/rng.hpp"

namespace loyaltylab::statkit {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::MannWhitneyU: return "mann_whitney_u";
    case Method::WilcoxonSigned: return "wilcoxon_signed_rank";
    case Method::BinomialSign: return "binomial_sign";
    case Method::Spearman: return "spearman";
  }
  return "unknown";
}

double p_floor() { return std::numeric_limits<double>::epsilon(); }

namespace {

void finalize_p(TestResult& r, double p) {
  if (!(p == p)) p = 1.0;  // NaN guard for degenerate approximations
  p = std::min(1.0, p);
  if (p < p_floor()) {
    p = p_floor();
    r.floored = true;
  }
  r.p_value = p;
}

// Sum of (t^3 - t) over tie groups.
double tie_term(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double term = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double t = static_cast<double>(j - i);
    term += t * t * t - t;
    i = j;
  }
  return term;
}

// Doubled midranks are integers.
std::vector<long> doubled(const std::vector<double>& ranks) {
  std::vector<long> out(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) out[i] = std::lround(2.0 * ranks[i]);
  return out;
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("pearson: size mismatch");
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

double normal_two_sided_p(double z) {
  static const boost::math::normal_distribution<double> std_normal;
  return 2.0 * boost::math::cdf(boost::math::complement(std_normal, std::fabs(z)));
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, PValueMode mode) {
  if (x.empty() || y.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  TestResult r;
  r.method = Method::MannWhitneyU;
  r.n1 = x.size();
  r.n2 = y.size();
  const std::size_t nx = x.size(), ny = y.size(), n = nx + ny;

  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  double rank_sum_x = 0.0;
  for (std::size_t i = 0; i < nx; ++i) rank_sum_x += ranks[i];
  const double u = rank_sum_x - static_cast<double>(nx * (nx + 1)) / 2.0;
  r.statistic = u;

  const bool exact = mode == PValueMode::Exact || (mode == PValueMode::Auto && n <= kExactLimit);
  if (exact) {
    // count[k][s]: subsets of size k whose doubled-rank sum is s.
    const auto r2 = doubled(ranks);
    const long total = std::accumulate(r2.begin(), r2.end(), 0L);
    std::vector<std::vector<double>> count(nx + 1, std::vector<double>(total + 1, 0.0));
    count[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = std::min(nx, i + 1); k >= 1; --k) {
        auto& dst = count[k];
        const auto& src = count[k - 1];
        for (long s = total; s >= r2[i]; --s) dst[s] += src[s - r2[i]];
      }
    }
    long obs = 0;
    for (std::size_t i = 0; i < nx; ++i) obs += r2[i];
    // Mean of the doubled rank sum of x.
    const long centre = static_cast<long>(nx * (n + 1));
    const long dev_obs = std::labs(obs - centre);
    double extreme = 0.0, all = 0.0;
    for (long s = 0; s <= total; ++s) {
      const double c = count[nx][s];
      if (c == 0.0) continue;
      all += c;
      if (std::labs(s - centre) >= dev_obs) extreme += c;
    }
    r.exact = true;
    finalize_p(r, extreme / all);
    return r;
  }

  const double mu = static_cast<double>(nx) * static_cast<double>(ny) / 2.0;
  const double dn = static_cast<double>(n);
  const double var = static_cast<double>(nx) * static_cast<double>(ny) / 12.0 *
                     ((dn + 1.0) - tie_term(pooled) / (dn * (dn - 1.0)));
  if (var <= 0.0) {
    finalize_p(r, 1.0);
    return r;
  }
  const double z = std::max(0.0, std::fabs(u - mu) - 0.5) / std::sqrt(var);
  finalize_p(r, normal_two_sided_p(z));
  return r;
}

TestResult wilcoxon_signed_rank(std::span<const double> diffs, PValueMode mode) {
  std::vector<double> nonzero;
  for (double d : diffs) {
    if (d != 0.0) nonzero.push_back(d);
  }
  if (nonzero.empty()) throw std::invalid_argument("wilcoxon_signed_rank: all differences are zero");
  TestResult r;
  r.method = Method::WilcoxonSigned;
  const std::size_t n = nonzero.size();
  r.n1 = n;

  std::vector<double> mags(n);
  for (std::size_t i = 0; i < n; ++i) mags[i] = std::fabs(nonzero[i]);
  const auto ranks = midranks(mags);
  double w_plus = 0.0, w_minus = 0.0;
  for (std::size_t i = 0; i < n; ++i) (nonzero[i] > 0 ? w_plus : w_minus) += ranks[i];
  r.statistic = std::min(w_plus, w_minus);

  const bool exact = mode == PValueMode::Exact || (mode == PValueMode::Auto && n <= kExactLimit);
  if (exact) {
    const auto r2 = doubled(ranks);
    const long total = std::accumulate(r2.begin(), r2.end(), 0L);
    std::vector<double> count(total + 1, 0.0);
    count[0] = 1.0;
    for (long rank2 : r2) {
      for (long s = total; s >= rank2; --s) count[s] += count[s - rank2];
    }
    long obs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (nonzero[i] > 0) obs += r2[i];
    }
    const long dev_obs = std::labs(2 * obs - total);
    double extreme = 0.0;
    for (long s = 0; s <= total; ++s) {
      if (count[s] != 0.0 && std::labs(2 * s - total) >= dev_obs) extreme += count[s];
    }
    r.exact = true;
    finalize_p(r, extreme / std::ldexp(1.0, static_cast<int>(n)));
    return r;
  }

  const double dn = static_cast<double>(n);
  const double mu = dn * (dn + 1.0) / 4.0;
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term(mags) / 48.0;
  if (var <= 0.0) {
    finalize_p(r, 1.0);
    return r;
  }
  const double z = std::max(0.0, std::fabs(w_plus - mu) - 0.5) / std::sqrt(var);
  finalize_p(r, normal_two_sided_p(z));
  return r;
}

TestResult binomial_sign_test(std::uint64_t k, std::uint64_t n, double p0) {
  if (n == 0) throw std::invalid_argument("binomial_sign_test: n = 0");
  if (k > n) throw std::invalid_argument("binomial_sign_test: k > n");
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("binomial_sign_test: p0 not in (0,1)");
  TestResult r;
  r.method = Method::BinomialSign;
  r.statistic = static_cast<double>(k);
  r.n1 = n;
  r.exact = true;
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), p0);
  const double kd = static_cast<double>(k);
  const double lower = boost::math::cdf(dist, kd);
  const double upper = k == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, kd - 1.0));
  finalize_p(r, 2.0 * std::min(lower, upper));
  return r;
}

TestResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: size mismatch");
  if (x.size() < 3) throw std::invalid_argument("spearman: need at least 3 pairs");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  if (stddev(rx) == 0.0 || stddev(ry) == 0.0) {
    throw std::invalid_argument("spearman: zero rank variance");
  }
  TestResult r;
  r.method = Method::Spearman;
  r.n1 = x.size();
  const double rho = std::clamp(pearson(rx, ry), -1.0, 1.0);
  r.statistic = rho;
  const double df = static_cast<double>(x.size()) - 2.0;
  if (1.0 - rho * rho <= 0.0) {
    finalize_p(r, 0.0);
    return r;
  }
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  const boost::math::students_t_distribution<double> dist(df);
  finalize_p(r, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
  return r;
}

std::pair<double, double> bootstrap_ci(std::span<const double> values, Statistic statistic,
                                       double level, std::size_t n_resamples, std::uint64_t seed) {
  if (values.size() < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 values");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level not in (0,1)");
  if (n_resamples == 0) throw std::invalid_argument("bootstrap_ci: n_resamples = 0");
  Rng rng(seed);
  std::vector<double> stats(n_resamples);
  std::vector<double> sample(values.size());
  for (std::size_t b = 0; b < n_resamples; ++b) {
    for (auto& s : sample) s = values[rng.uniform_index(values.size())];
    stats[b] = statistic == Statistic::Mean ? mean(sample) : median(sample);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    if (p_values[order[i]] > alpha / static_cast<double>(m - i)) break;
    reject[order[i]] = true;
  }
  return reject;
}

}  // namespace loyaltylab::statkit
