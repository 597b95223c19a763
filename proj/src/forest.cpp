#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "loyaltylab/mlpredict.hpp"
#include "loyaltylab/parallel.hpp"
#include "loyaltylab/rng.hpp"
#include "loyaltylab/statkit.hpp"

namespace loyaltylab::mlpredict {

void ForestParams::validate() const {
  if (n_trees < 1) throw std::invalid_argument("ForestParams: n_trees must be >= 1");
  if (min_samples_split < 2) throw std::invalid_argument("ForestParams: min_samples_split must be >= 2");
  if (max_features && *max_features < 1) throw std::invalid_argument("ForestParams: max_features must be >= 1");
}

std::size_t ForestParams::features_per_split(std::size_t d) const {
  if (max_features) return std::min(*max_features, d);
  const auto r = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d))));
  return std::max<std::size_t>(1, r);
}

std::size_t Dataset::count(bool positive) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [&](const auto& r) { return r.positive == positive; }));
}

void Dataset::validate() const {
  std::set<std::string_view> units;
  for (const auto& r : rows) {
    if (r.features.size() != dim()) {
      throw std::invalid_argument("Dataset: row " + r.unit + " has " + std::to_string(r.features.size()) +
                                  " features, expected " + std::to_string(dim()));
    }
    if (!units.insert(r.unit).second) throw std::invalid_argument("Dataset: duplicated unit " + r.unit);
  }
}

std::vector<std::string> Dataset::groups() const {
  std::set<std::string> g;
  for (const auto& r : rows) g.insert(r.group);
  return {g.begin(), g.end()};
}

Dataset Dataset::select(std::span<const std::size_t> columns) const {
  Dataset out;
  for (std::size_t c : columns) {
    if (c >= dim()) throw std::invalid_argument("Dataset::select: column out of range");
    out.feature_names.push_back(feature_names[c]);
  }
  out.rows.reserve(rows.size());
  for (const auto& r : rows) {
    LabeledExample e{{}, r.positive, r.group, r.unit};
    e.features.reserve(columns.size());
    for (std::size_t c : columns) e.features.push_back(r.features[c]);
    out.rows.push_back(std::move(e));
  }
  return out;
}

bool DecisionTree::predict(std::span<const double> x) const {
  int i = 0;
  for (;;) {
    const TreeNode& node = nodes[static_cast<std::size_t>(i)];
    if (node.feature < 0) return node.positive;
    i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
}

std::size_t ForestModel::positive_votes(std::span<const double> x) const {
  if (x.size() != feature_count) throw std::invalid_argument("ForestModel: feature count mismatch");
  std::size_t votes = 0;
  for (const auto& t : trees) votes += t.predict(x);
  return votes;
}

bool ForestModel::predict(std::span<const double> x) const {
  return 2 * positive_votes(x) > trees.size();
}

namespace {

class TreeGrower {
 public:
  TreeGrower(const Dataset& data, std::size_t mtry, std::size_t min_split, std::uint64_t seed)
      : data_(data), mtry_(mtry), min_split_(min_split), rng_(seed) {}

  DecisionTree grow() {
    const std::size_t n = data_.rows.size();
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = rng_.uniform_index(n);
    std::sort(sample.begin(), sample.end());
    tree_.nodes.clear();
    build(sample, 0, n);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  bool label(std::size_t row) const { return data_.rows[row].positive; }
  double value(std::size_t row, std::size_t f) const { return data_.rows[row].features[f]; }

  int build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    std::size_t pos = 0;
    for (std::size_t i = begin; i < end; ++i) pos += label(idx[i]);
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes.back().positive = 2 * pos > n;
    if (n < min_split_ || pos == 0 || pos == n) return id;

    const Split split = best_split(idx, begin, end, pos);
    if (split.feature < 0) return id;

    const auto f = static_cast<std::size_t>(split.feature);
    auto mid_it = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                        idx.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](std::size_t r) { return value(r, f) <= split.threshold; });
    const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
    const int left = build(idx, begin, mid);
    const int right = build(idx, mid, end);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  // Visits features in random order until mtry non-constant ones have been
  // scored, as scikit-learn does.
  Split best_split(const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                   std::size_t pos_total) {
    const std::size_t n = end - begin;
    const std::size_t d = data_.dim();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);

    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, bool>> col(n);
    std::size_t scored = 0;
    for (std::size_t f : order) {
      if (scored == mtry_) break;
      for (std::size_t i = 0; i < n; ++i) col[i] = {value(idx[begin + i], f), label(idx[begin + i])};
      std::sort(col.begin(), col.end());
      if (col.front().first == col.back().first) continue;
      ++scored;
      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += col[i].second;
        if (col[i].first == col[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n - i - 1);
        const double pl = static_cast<double>(left_pos) / nl;
        const double pr = static_cast<double>(pos_total - left_pos) / nr;
        const double impurity = nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr);
        if (impurity < best.impurity) {
          double t = 0.5 * (col[i].first + col[i + 1].first);
          if (!(t < col[i + 1].first)) t = col[i].first;
          best = {static_cast<int>(f), t, impurity};
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  std::size_t mtry_;
  std::size_t min_split_;
  Rng rng_;
  DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(const Dataset& train, const ForestParams& params) {
  params.validate();
  train.validate();
  if (train.dim() == 0) throw std::invalid_argument("train_forest: no features");
  if (train.rows.size() < params.min_samples_split) {
    throw std::invalid_argument("train_forest: " + std::to_string(train.rows.size()) +
                                " rows < min_samples_split");
  }
  if (train.count(true) == 0 || train.count(false) == 0) {
    throw std::invalid_argument("train_forest: training data has a single class");
  }
  ForestModel model;
  model.feature_count = train.dim();
  model.trees.resize(params.n_trees);
  const std::size_t mtry = params.features_per_split(train.dim());
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    TreeGrower grower(train, mtry, params.min_samples_split, derive_seed(params.seed, t));
    model.trees[t] = grower.grow();
  });
  return model;
}

Evaluation evaluate(const ForestModel& model, const Dataset& test) {
  if (test.rows.empty()) throw std::invalid_argument("evaluate: empty test set");
  Evaluation e;
  e.n = test.rows.size();
  for (const auto& r : test.rows) {
    const bool pred = model.predict(r.features);
    if (pred && r.positive) ++e.true_positive;
    else if (!pred && !r.positive) ++e.true_negative;
    else if (pred) ++e.false_positive;
    else ++e.false_negative;
  }
  e.correct = e.true_positive + e.true_negative;
  e.accuracy = static_cast<double>(e.correct) / static_cast<double>(e.n);
  const auto test_result = statkit::binomial_sign_test(e.correct, e.n, 0.5);
  e.p_value = test_result.p_value;
  e.p_floored = test_result.floored;
  return e;
}

LocoResult loco_evaluate(const Dataset& data, const ForestParams& params) {
  const auto groups = data.groups();
  if (groups.size() < 2) throw std::invalid_argument("loco_evaluate: need at least 2 groups");
  LocoResult out;
  double sum = 0.0;
  for (const auto& g : groups) {
    Dataset train, test;
    train.feature_names = test.feature_names = data.feature_names;
    for (const auto& r : data.rows) (r.group == g ? test : train).rows.push_back(r);
    ForestParams fold = params;
    fold.seed = derive_seed(params.seed, "loco:" + g);
    const auto e = evaluate(train_forest(train, fold), test);
    sum += e.accuracy;
    out.folds.emplace_back(g, e);
  }
  out.mean_accuracy = sum / static_cast<double>(groups.size());
  return out;
}

}  // namespace loyaltylab::mlpredict
