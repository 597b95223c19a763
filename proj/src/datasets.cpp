#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "loyaltylab/csv.hpp"
#include "loyaltylab/mlpredict.hpp"
#include "loyaltylab/rng.hpp"

namespace loyaltylab::mlpredict {

namespace {

constexpr std::size_t kCommentBlock = 6;  // verbosity + 5 rates
constexpr std::size_t kPostBlock = 9;     // score, verbosity + 5 rates, esotericity, missing flag

void append_text(std::vector<double>& out, const textfeat::FeatureVector& f) {
  out.push_back(static_cast<double>(f.verbosity));
  out.push_back(f.rate_i);
  out.push_back(f.rate_you);
  out.push_back(f.rate_we);
  out.push_back(f.rate_affect_pos);
  out.push_back(f.rate_affect_neg);
}

// Downsamples the majority class to the minority size. Row order is kept.
void balance(Dataset& d, Rng& rng) {
  const std::size_t pos = d.count(true), neg = d.count(false);
  if (pos == neg) return;
  const bool major = pos > neg;
  std::vector<std::size_t> majority;
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    if (d.rows[i].positive == major) majority.push_back(i);
  }
  auto keep_idx = rng.sample_without_replacement(majority.size(), std::min(pos, neg));
  std::vector<bool> keep(d.rows.size(), false);
  for (std::size_t i = 0; i < d.rows.size(); ++i) keep[i] = d.rows[i].positive != major;
  for (std::size_t k : keep_idx) keep[majority[k]] = true;
  std::vector<LabeledExample> rows;
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    if (keep[i]) rows.push_back(std::move(d.rows[i]));
  }
  d.rows = std::move(rows);
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "comment_verbosity", "comment_rate_i",  "comment_rate_you",     "comment_rate_we",
      "comment_rate_affect_pos", "comment_rate_affect_neg", "post_score", "post_verbosity",
      "post_rate_i",       "post_rate_you",   "post_rate_we",         "post_rate_affect_pos",
      "post_rate_affect_neg", "post_esotericity", "post_esotericity_missing"};
  return names;
}

std::string_view to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::All: return "all";
    case FeatureGroup::PostScore: return "post_score";
    case FeatureGroup::Linguistic: return "linguistic";
  }
  return "?";
}

std::vector<std::size_t> feature_columns(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::All: {
      std::vector<std::size_t> all(feature_names().size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      return all;
    }
    case FeatureGroup::PostScore: return {6};
    case FeatureGroup::Linguistic: return {0, 1, 2, 3, 4, 5, 7, 8, 9, 10, 11, 12};
  }
  return {};
}

FeatureExtractor::FeatureExtractor(const corpus::CorpusStore& store, textfeat::Lexicons lexicons)
    : store_(store), lexicons_(std::move(lexicons)) {}

const std::vector<double>& FeatureExtractor::post_features(std::string_view post_id) {
  if (auto it = posts_.find(post_id); it != posts_.end()) return it->second;
  std::vector<double> f;
  f.reserve(kPostBlock);
  const corpus::Post* p = store_.find_post(post_id);
  if (p == nullptr) {
    f.assign(kPostBlock, 0.0);
    f.back() = 1.0;
  } else {
    const std::string text = p->text();
    f.push_back(static_cast<double>(p->score));
    append_text(f, textfeat::linguistic_features(text, lexicons_));
    const auto month = corpus::month_of(p->created_at);
    auto key = std::make_pair(p->community, month);
    auto idf = idf_.find(key);
    if (idf == idf_.end()) {
      idf = idf_.emplace(key, textfeat::idf_table(store_, p->community, month, lexicons_)).first;
    }
    const auto e = textfeat::esotericity(text, idf->second);
    f.push_back(e.value_or(0.0));
    f.push_back(e ? 0.0 : 1.0);
  }
  return posts_.emplace(std::string(post_id), std::move(f)).first->second;
}

std::vector<double> FeatureExtractor::comment_features(const corpus::Comment& comment) {
  std::vector<double> f;
  f.reserve(kCommentBlock + kPostBlock);
  append_text(f, textfeat::linguistic_features(comment.body, lexicons_));
  const auto& post = post_features(comment.post_id);
  f.insert(f.end(), post.begin(), post.end());
  return f;
}

const FeatureExtractor::AuthorComments& FeatureExtractor::comments_by_author(std::string_view community) {
  if (auto it = authors_.find(community); it != authors_.end()) return it->second;
  AuthorComments by;
  for (std::size_t idx : store_.comments_in(community)) {
    by[store_.comments()[idx].author].push_back(idx);
  }
  return authors_.emplace(std::string(community), std::move(by)).first->second;
}

std::optional<std::vector<double>> FeatureExtractor::first_k_features(std::string_view community,
                                                                      std::string_view author,
                                                                      std::size_t k) {
  if (k == 0) throw std::invalid_argument("first_k_features: k must be >= 1");
  const auto& by = comments_by_author(community);
  auto it = by.find(author);
  if (it == by.end() || it->second.size() < k) return std::nullopt;
  std::vector<double> mean(kCommentBlock + kPostBlock, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const auto f = comment_features(store_.comments()[it->second[j]]);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += f[d];
  }
  for (auto& v : mean) v /= static_cast<double>(k);
  return mean;
}

SplitDatasets build_first_k_dataset(const corpus::CorpusStore& store,
                                    const loyalty::LabelIndex& labels, std::string_view community,
                                    FeatureExtractor& features, const FirstKOptions& options) {
  if (options.train_end < options.train_begin || options.test_end < options.test_begin) {
    throw std::invalid_argument("build_first_k_dataset: empty window");
  }
  SplitDatasets out;
  out.train.feature_names = out.test.feature_names = feature_names();
  std::size_t too_few = 0;
  for (const auto& [author, idx] : features.comments_by_author(community)) {
    const auto arrival = store.comments()[idx.front()].month();
    Dataset* split = nullptr;
    if (arrival >= options.train_begin && arrival <= options.train_end) split = &out.train;
    else if (arrival >= options.test_begin && arrival <= options.test_end) split = &out.test;
    if (split == nullptr) continue;

    const auto loyal_months = labels.months(author, community, loyalty::LabelKind::Loyal);
    bool positive = false;
    if (!loyal_months.empty()) {
      const int first = loyal_months.front().ordinal() - arrival.ordinal();
      if (first > options.loyal_within_months) continue;  // loyal, but not early
      positive = true;
    }
    auto f = features.first_k_features(community, author, options.k);
    if (!f) {
      ++too_few;
      continue;
    }
    split->rows.push_back({std::move(*f), positive, std::string(community), author});
  }
  if (too_few > 0) {
    out.warnings.push_back(std::string(community) + ": " + std::to_string(too_few) +
                           " arriving users with fewer than k comments excluded");
  }
  for (auto [split, name] : {std::pair{&out.train, "train"}, std::pair{&out.test, "test"}}) {
    if (split->count(true) == 0 || split->count(false) == 0) {
      throw std::invalid_argument("build_first_k_dataset: " + std::string(community) + " " + name +
                                  " split lacks a class (" + std::to_string(split->count(true)) +
                                  " positive, " + std::to_string(split->count(false)) + " negative)");
    }
    Rng rng(derive_seed(options.seed, "first-k:" + std::string(community) + ":" + name));
    balance(*split, rng);
  }
  return out;
}

GroupedDataset build_loco_dataset(const corpus::CorpusStore& store,
                                  const loyalty::LabelIndex& labels,
                                  const std::vector<std::string>& communities,
                                  FeatureExtractor& features, std::size_t per_community,
                                  std::uint64_t seed) {
  GroupedDataset out;
  out.data.feature_names = feature_names();
  std::set<std::string> sorted(communities.begin(), communities.end());
  for (const auto& community : sorted) {
    std::vector<std::size_t> loyal, vagrant;
    for (std::size_t idx : store.comments_in(community)) {
      const auto& c = store.comments()[idx];
      if (!c.is_top_level()) continue;
      const auto month = c.month();
      if (labels.has(c.author, community, month, loyalty::LabelKind::Loyal)) loyal.push_back(idx);
      else if (labels.has(c.author, community, month, loyalty::LabelKind::Vagrant)) vagrant.push_back(idx);
    }
    const std::size_t m = std::min({per_community, loyal.size(), vagrant.size()});
    if (m < per_community) {
      out.warnings.push_back(community + ": " + std::to_string(loyal.size()) + " loyal and " +
                             std::to_string(vagrant.size()) + " vagrant comments; using " +
                             std::to_string(m) + " per cohort");
    }
    if (m == 0) continue;
    Rng rng(derive_seed(seed, "loco:" + community));
    for (auto [pool, positive] : {std::pair{&loyal, true}, std::pair{&vagrant, false}}) {
      auto pick = rng.sample_without_replacement(pool->size(), m);
      std::sort(pick.begin(), pick.end());
      for (std::size_t k : pick) {
        const auto& c = store.comments()[(*pool)[k]];
        out.data.rows.push_back({features.comment_features(c), positive, community, c.id});
      }
    }
  }
  return out;
}

Dataset shuffle_labels(const Dataset& data, std::uint64_t seed) {
  Dataset out = data;
  for (const auto& g : data.groups()) {
    std::vector<std::size_t> idx;
    std::vector<bool> lab;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
      if (out.rows[i].group == g) {
        idx.push_back(i);
        lab.push_back(out.rows[i].positive);
      }
    }
    Rng rng(derive_seed(seed, "shuffle:" + g));
    for (std::size_t i = lab.size(); i > 1; --i) {
      const std::size_t j = rng.uniform_index(i);
      const bool tmp = lab[i - 1];
      lab[i - 1] = lab[j];
      lab[j] = tmp;
    }
    for (std::size_t k = 0; k < idx.size(); ++k) out.rows[idx[k]].positive = lab[k];
  }
  return out;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  std::vector<std::string> header = {"unit", "group", "label"};
  header.insert(header.end(), data.feature_names.begin(), data.feature_names.end());
  out << csv::row(header);
  for (const auto& r : data.rows) {
    std::vector<std::string> cells = {r.unit, r.group, r.positive ? "1" : "0"};
    for (double v : r.features) cells.push_back(csv::num(v));
    out << csv::row(cells);
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("dataset CSV: missing header");
  auto header = csv::split(line);
  if (header.size() < 3 || header[0] != "unit" || header[1] != "group" || header[2] != "label") {
    throw InputError("dataset CSV: header must start with unit,group,label");
  }
  Dataset d;
  d.feature_names.assign(header.begin() + 3, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = csv::split(line);
    if (cells.size() != header.size()) {
      throw InputError("dataset CSV line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    if (cells[2] != "0" && cells[2] != "1") {
      throw InputError("dataset CSV line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    LabeledExample e{{}, cells[2] == "1", cells[1], cells[0]};
    for (std::size_t c = 3; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        e.features.push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InputError("dataset CSV line " + std::to_string(line_no) + ": bad number '" + cells[c] + "'");
      }
    }
    d.rows.push_back(std::move(e));
  }
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("dataset CSV: ") + e.what());
  }
  return d;
}

}  // namespace loyaltylab::mlpredict
