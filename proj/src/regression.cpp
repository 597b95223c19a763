#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "loyaltylab/statkit.hpp"

namespace loyaltylab::statkit {

const RegressionTerm& RegressionResult::term(std::string_view name) const {
  for (const auto& t : terms) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no regression term " + std::string(name));
}

RegressionResult panel_regression(std::span<const PanelRow> rows) {
  std::set<std::string> communities, months;
  for (const auto& r : rows) {
    communities.insert(r.community);
    months.insert(r.month);
  }
  if (communities.size() < 2 || months.size() < 2) {
    throw std::invalid_argument("panel_regression: need at least 2 communities and 2 months");
  }

  std::vector<double> feature(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) feature[i] = rows[i].network_feature;
  const double f_mean = mean(feature);
  const double f_sd = stddev(feature);
  if (!(f_sd > 0.0)) {
    throw RankDeficientError("panel_regression: network_feature has zero variance",
                             {"network_feature"});
  }

  std::vector<std::string> names = {"intercept", "loyalty_rate_now", "network_feature"};
  std::map<std::string, Eigen::Index> community_col, month_col;
  for (auto it = std::next(communities.begin()); it != communities.end(); ++it) {
    community_col[*it] = static_cast<Eigen::Index>(names.size());
    names.push_back("community[" + *it + "]");
  }
  for (auto it = std::next(months.begin()); it != months.end(); ++it) {
    month_col[*it] = static_cast<Eigen::Index>(names.size());
    names.push_back("month[" + *it + "]");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(names.size());
  if (n <= p) {
    throw std::invalid_argument("panel_regression: " + std::to_string(n) +
                                " observations for " + std::to_string(p) + " terms");
  }
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = r.loyalty_rate_now;
    x(i, 2) = (r.network_feature - f_mean) / f_sd;
    if (auto it = community_col.find(r.community); it != community_col.end()) x(i, it->second) = 1.0;
    if (auto it = month_col.find(r.month); it != month_col.end()) x(i, it->second) = 1.0;
    y(i) = r.loyalty_rate_next;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::vector<std::string> dropped;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < p; ++k) dropped.push_back(names[static_cast<std::size_t>(perm(k))]);
    std::string what = "panel_regression: rank-deficient design; collinear terms:";
    for (const auto& d : dropped) what += " " + d;
    throw RankDeficientError(what, std::move(dropped));
  }

  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(n - p);
  const Eigen::MatrixXd xtx_inv =
      (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(p, p));

  RegressionResult out;
  out.n_obs = rows.size();
  out.feature_sd = f_sd;
  for (Eigen::Index k = 0; k < p; ++k) {
    RegressionTerm t;
    t.name = names[static_cast<std::size_t>(k)];
    t.coefficient = beta(k);
    t.std_error = std::sqrt(std::max(0.0, sigma2 * xtx_inv(k, k)));
    t.z_score = t.std_error > 0.0 ? t.coefficient / t.std_error : 0.0;
    t.p_value = std::max(p_floor(), normal_two_sided_p(t.z_score));
    out.terms.push_back(std::move(t));
  }
  return out;
}

}  // namespace loyaltylab::statkit
