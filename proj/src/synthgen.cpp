#include "loyaltylab/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "loyaltylab/rng.hpp"
#include "loyaltylab/textfeat.hpp"

namespace loyaltylab::synthgen {

namespace {

using nlohmann::json;

enum class Archetype { Focused, Wanderer, Casual };

struct Activity {
  std::size_t user;
  int month;       // offset from first_month
  int community;
  int top_level;
  bool focused;    // the user's focus community this month
};

struct UserCounts {
  int top = 0;
  int total = 0;
};

std::string base36(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdefghijklmnopqrstuvwxyz";
  std::string s;
  do {
    s += digits[v % 36];
    v /= 36;
  } while (v);
  std::reverse(s.begin(), s.end());
  return s;
}

// Consonant-vowel syllables; words of a fixed syllable count never collide
// across lengths, and real lexicon words are skipped.
class Vocabulary {
 public:
  Vocabulary(std::size_t common, std::size_t esoteric_per_community, std::size_t n_communities) {
    const auto lx = textfeat::Lexicons::defaults();
    auto reserved = [&](const std::string& w) {
      return lx.pronoun_i.contains(w) || lx.pronoun_you.contains(w) || lx.pronoun_we.contains(w) ||
             lx.affect_positive.contains(w) || lx.affect_negative.contains(w) || lx.stopwords.contains(w);
    };
    for (std::size_t k = 0; common_.size() < common; ++k) {
      auto w = word(k, 2);
      if (!reserved(w)) common_.push_back(std::move(w));
    }
    esoteric_.resize(n_communities);
    std::size_t k = 0;
    for (auto& list : esoteric_) {
      while (list.size() < esoteric_per_community) {
        auto w = word(k++, 3);
        if (!reserved(w)) list.push_back(std::move(w));
      }
    }
  }

  const std::string& common(Rng& rng) const { return common_[rng.uniform_index(common_.size())]; }
  const std::string& esoteric(int community, Rng& rng) const {
    const auto& list = esoteric_[static_cast<std::size_t>(community)];
    return list[rng.uniform_index(list.size())];
  }

 private:
  static std::string word(std::size_t k, int syllables) {
    static constexpr char consonants[] = "bdfgklmnprstvz";
    static constexpr char vowels[] = "aeiou";
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      const std::size_t syl = k % 70;
      k /= 70;
      w += consonants[syl / 5];
      w += vowels[syl % 5];
    }
    return w;
  }

  std::vector<std::string> common_;
  std::vector<std::vector<std::string>> esoteric_;
};

struct WordLists {
  std::vector<std::string> i, you, we, pos, neg;
};

WordLists word_lists() {
  const auto lx = textfeat::Lexicons::defaults();
  return {{lx.pronoun_i.begin(), lx.pronoun_i.end()},
          {lx.pronoun_you.begin(), lx.pronoun_you.end()},
          {lx.pronoun_we.begin(), lx.pronoun_we.end()},
          {lx.affect_positive.begin(), lx.affect_positive.end()},
          {lx.affect_negative.begin(), lx.affect_negative.end()}};
}

std::string render_comment(const CohortProfile& p, const WordLists& words, const Vocabulary& vocab,
                           Rng& rng) {
  const auto n = 1 + rng.poisson(p.length_mean);
  std::string out;
  for (std::int64_t t = 0; t < n; ++t) {
    if (t) out += ' ';
    const double r = rng.uniform01();
    double acc = p.rate_i;
    auto pick = [&](const std::vector<std::string>& list) -> const std::string& {
      return list[rng.uniform_index(list.size())];
    };
    if (r < acc) {
      out += pick(words.i);
    } else if (r < (acc += p.rate_you)) {
      out += pick(words.you);
    } else if (r < (acc += p.rate_we)) {
      out += pick(words.we);
    } else if (r < (acc += p.rate_affect_pos)) {
      out += pick(words.pos);
    } else if (r < (acc += p.rate_affect_neg)) {
      out += pick(words.neg);
    } else {
      out += vocab.common(rng);
    }
  }
  out += '.';
  return out;
}

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string("SynthConfig: ") + name + " must be in [0, 1]");
}

void check_profile(const CohortProfile& p, const char* name) {
  const std::string n = name;
  check_unit(p.niche_choice_prob, (n + ".niche_choice_prob").c_str());
  for (double r : {p.rate_i, p.rate_you, p.rate_we, p.rate_affect_pos, p.rate_affect_neg}) {
    check_unit(r, (n + " lexicon rate").c_str());
  }
  if (p.rate_i + p.rate_you + p.rate_we + p.rate_affect_pos + p.rate_affect_neg > 1.0) {
    throw std::invalid_argument("SynthConfig: " + n + " lexicon rates sum above 1");
  }
  if (!(p.length_mean >= 0.0)) throw std::invalid_argument("SynthConfig: " + n + ".length_mean must be >= 0");
}

json profile_json(const CohortProfile& p) {
  return {{"niche_choice_prob", p.niche_choice_prob}, {"rate_i", p.rate_i},
          {"rate_you", p.rate_you},                   {"rate_we", p.rate_we},
          {"rate_affect_pos", p.rate_affect_pos},     {"rate_affect_neg", p.rate_affect_neg},
          {"length_mean", p.length_mean}};
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (auto it = j.find(key); it != j.end()) target = it->template get<T>();
}

CohortProfile profile_from_json(const json& j, CohortProfile p) {
  read(j, "niche_choice_prob", p.niche_choice_prob);
  read(j, "rate_i", p.rate_i);
  read(j, "rate_you", p.rate_you);
  read(j, "rate_we", p.rate_we);
  read(j, "rate_affect_pos", p.rate_affect_pos);
  read(j, "rate_affect_neg", p.rate_affect_neg);
  read(j, "length_mean", p.length_mean);
  return p;
}

json label_json(const loyalty::LoyaltyLabel& l) {
  return {{"author", l.author}, {"community", l.community}, {"month", l.month.str()}};
}

}  // namespace

SynthConfig SynthConfig::with_communities(std::size_t n, double lo, double hi) {
  SynthConfig c;
  for (std::size_t i = 0; i < n; ++i) {
    CommunitySpec s;
    s.name = (i < 10 ? "c0" : "c") + std::to_string(i);
    s.stay_probability = n == 1 ? hi : hi - (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    c.communities.push_back(s);
  }
  return c;
}

void SynthConfig::validate() const {
  if (communities.empty()) throw std::invalid_argument("SynthConfig: no communities");
  std::set<std::string> names;
  for (const auto& c : communities) {
    if (c.name.empty()) throw std::invalid_argument("SynthConfig: community with empty name");
    if (!names.insert(c.name).second) throw std::invalid_argument("SynthConfig: duplicate community " + c.name);
    check_unit(c.stay_probability, "stay_probability");
    if (!(c.reply_rate >= 0.0)) throw std::invalid_argument("SynthConfig: reply_rate must be >= 0");
  }
  if (users_per_community == 0) throw std::invalid_argument("SynthConfig: users_per_community must be >= 1");
  if (n_months < 2) throw std::invalid_argument("SynthConfig: n_months must be >= 2");
  if (arrival_months < 1 || arrival_months > n_months) {
    throw std::invalid_argument("SynthConfig: arrival_months must be in [1, n_months]");
  }
  check_unit(loyal_fraction, "loyal_fraction");
  check_unit(vagrant_rate, "vagrant_rate");
  if (loyal_fraction + vagrant_rate > 1.0) {
    throw std::invalid_argument("SynthConfig: loyal_fraction + vagrant_rate exceeds 1");
  }
  check_unit(leave_rate, "leave_rate");
  check_unit(switch_focus_prob, "switch_focus_prob");
  if (comments_per_loyal_user_month < 10) {
    throw std::invalid_argument("SynthConfig: comments_per_loyal_user_month must be >= 10");
  }
  if (!(focused_extra_mean >= 0.0)) throw std::invalid_argument("SynthConfig: focused_extra_mean must be >= 0");
  if (!(focused_off_home_max >= 0.0 && focused_off_home_max < 0.5)) {
    throw std::invalid_argument("SynthConfig: focused_off_home_max must be in [0, 0.5)");
  }
  if (vagrant_rate > 0.0 && communities.size() < 2) {
    throw std::invalid_argument("SynthConfig: vagrants need at least 2 communities");
  }
  if (posts_per_community_month < 2) {
    throw std::invalid_argument("SynthConfig: posts_per_community_month must be >= 2");
  }
  check_unit(niche_post_fraction, "niche_post_fraction");
  if (!(niche_score_mean >= 0.0 && mainstream_score_mean >= 0.0)) {
    throw std::invalid_argument("SynthConfig: score means must be >= 0");
  }
  if (esoteric_vocab_size < 1 || common_vocab_size < 1) {
    throw std::invalid_argument("SynthConfig: vocabulary sizes must be >= 1");
  }
  if (common_vocab_size > 4000 || esoteric_vocab_size * communities.size() > 300000) {
    throw std::invalid_argument("SynthConfig: vocabulary too large");
  }
  check_profile(loyal_cohort, "loyal_cohort");
  check_profile(vagrant_cohort, "vagrant_cohort");
  check_unit(casual_reply_factor, "casual_reply_factor");
  check_unit(reply_to_reply_prob, "reply_to_reply_prob");
}

json to_json(const SynthConfig& c) {
  json communities = json::array();
  for (const auto& s : c.communities) {
    communities.push_back({{"name", s.name}, {"stay_probability", s.stay_probability}, {"reply_rate", s.reply_rate}});
  }
  return {{"communities", communities},
          {"users_per_community", c.users_per_community},
          {"first_month", c.first_month.str()},
          {"n_months", c.n_months},
          {"arrival_months", c.arrival_months},
          {"loyal_fraction", c.loyal_fraction},
          {"vagrant_rate", c.vagrant_rate},
          {"leave_rate", c.leave_rate},
          {"switch_focus_prob", c.switch_focus_prob},
          {"comments_per_loyal_user_month", c.comments_per_loyal_user_month},
          {"focused_extra_mean", c.focused_extra_mean},
          {"focused_off_home_max", c.focused_off_home_max},
          {"posts_per_community_month", c.posts_per_community_month},
          {"niche_post_fraction", c.niche_post_fraction},
          {"niche_score_mean", c.niche_score_mean},
          {"mainstream_score_mean", c.mainstream_score_mean},
          {"esoteric_vocab_size", c.esoteric_vocab_size},
          {"common_vocab_size", c.common_vocab_size},
          {"loyal_cohort", profile_json(c.loyal_cohort)},
          {"vagrant_cohort", profile_json(c.vagrant_cohort)},
          {"casual_reply_factor", c.casual_reply_factor},
          {"reply_to_reply_prob", c.reply_to_reply_prob},
          {"render_text", c.render_text},
          {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const json& j) {
  try {
    SynthConfig c;
    if (auto it = j.find("n_communities"); it != j.end()) {
      c = SynthConfig::with_communities(it->get<std::size_t>());
    }
    if (auto it = j.find("communities"); it != j.end()) {
      c.communities.clear();
      for (const auto& s : *it) {
        CommunitySpec spec;
        read(s, "name", spec.name);
        read(s, "stay_probability", spec.stay_probability);
        read(s, "reply_rate", spec.reply_rate);
        c.communities.push_back(spec);
      }
    }
    read(j, "users_per_community", c.users_per_community);
    if (auto it = j.find("first_month"); it != j.end()) c.first_month = MonthKey::parse(it->get<std::string>());
    read(j, "n_months", c.n_months);
    read(j, "arrival_months", c.arrival_months);
    read(j, "loyal_fraction", c.loyal_fraction);
    read(j, "vagrant_rate", c.vagrant_rate);
    read(j, "leave_rate", c.leave_rate);
    read(j, "switch_focus_prob", c.switch_focus_prob);
    read(j, "comments_per_loyal_user_month", c.comments_per_loyal_user_month);
    read(j, "focused_extra_mean", c.focused_extra_mean);
    read(j, "focused_off_home_max", c.focused_off_home_max);
    read(j, "posts_per_community_month", c.posts_per_community_month);
    read(j, "niche_post_fraction", c.niche_post_fraction);
    read(j, "niche_score_mean", c.niche_score_mean);
    read(j, "mainstream_score_mean", c.mainstream_score_mean);
    read(j, "esoteric_vocab_size", c.esoteric_vocab_size);
    read(j, "common_vocab_size", c.common_vocab_size);
    if (auto it = j.find("loyal_cohort"); it != j.end()) c.loyal_cohort = profile_from_json(*it, c.loyal_cohort);
    if (auto it = j.find("vagrant_cohort"); it != j.end()) c.vagrant_cohort = profile_from_json(*it, c.vagrant_cohort);
    read(j, "casual_reply_factor", c.casual_reply_factor);
    read(j, "reply_to_reply_prob", c.reply_to_reply_prob);
    read(j, "render_text", c.render_text);
    read(j, "seed", c.seed);
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("synth config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("synth config: ") + e.what());
  }
}

SynthCorpus generate(const SynthConfig& config) {
  config.validate();
  const int nc = static_cast<int>(config.communities.size());
  const int nm = config.n_months;
  const std::size_t n_users = config.users_per_community * static_cast<std::size_t>(nc);
  auto month_key = [&](int m) { return MonthKey::from_ordinal(config.first_month.ordinal() + m); };

  // Schedule: per-user monthly states, emitted as top-level activity.
  std::vector<std::string> names(n_users);
  std::vector<Archetype> archetype(n_users);
  std::vector<Activity> activity;
  std::vector<std::vector<int>> focus(n_users, std::vector<int>(static_cast<std::size_t>(nm), -1));
  for (std::size_t u = 0; u < n_users; ++u) {
    const int home = static_cast<int>(u / config.users_per_community);
    names[u] = "u" + config.communities[static_cast<std::size_t>(home)].name + "_" +
               std::to_string(u % config.users_per_community);
    Rng rng(derive_seed(config.seed, "user:" + names[u]));
    const double a = rng.uniform01();
    archetype[u] = a < config.loyal_fraction ? Archetype::Focused
                   : a < config.loyal_fraction + config.vagrant_rate ? Archetype::Wanderer
                                                                      : Archetype::Casual;
    const int arrival = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(config.arrival_months)));
    int current_focus = archetype[u] == Archetype::Focused ? home : -1;
    std::vector<int> previous;  // wanderer's communities last month
    auto other_than = [&](int c) {
      int o = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(nc - 1)));
      return o >= c ? o + 1 : o;
    };
    for (int m = arrival; m < nm; ++m) {
      if (m > arrival) {
        if (rng.bernoulli(config.leave_rate)) break;
        if (current_focus >= 0 &&
            !rng.bernoulli(config.communities[static_cast<std::size_t>(current_focus)].stay_probability)) {
          current_focus = (nc > 1 && rng.bernoulli(config.switch_focus_prob)) ? other_than(current_focus) : -1;
        }
      }
      if (current_focus >= 0) {
        focus[u][static_cast<std::size_t>(m)] = current_focus;
        const int total = config.comments_per_loyal_user_month +
                          static_cast<int>(rng.poisson(config.focused_extra_mean));
        const int off_cap = nc > 1 ? static_cast<int>(std::floor(config.focused_off_home_max * total)) : 0;
        const int off = static_cast<int>(rng.uniform_int(0, off_cap));
        std::vector<int> counts(static_cast<std::size_t>(nc), 0);
        counts[static_cast<std::size_t>(current_focus)] = total - off;
        for (int k = 0; k < off; ++k) ++counts[static_cast<std::size_t>(other_than(current_focus))];
        for (int c = 0; c < nc; ++c) {
          if (counts[static_cast<std::size_t>(c)] > 0) {
            activity.push_back({u, m, c, counts[static_cast<std::size_t>(c)], c == current_focus});
          }
        }
        continue;
      }
      std::vector<int> visit;
      if (m == arrival) {
        visit.push_back(home);
      } else if (archetype[u] == Archetype::Wanderer) {
        std::vector<int> pool;
        for (int c = 0; c < nc; ++c) {
          if (std::find(previous.begin(), previous.end(), c) == previous.end()) pool.push_back(c);
        }
        const auto k = 1 + rng.uniform_index(std::min<std::size_t>(3, pool.size()));
        for (std::size_t idx : rng.sample_without_replacement(pool.size(), k)) visit.push_back(pool[idx]);
      } else {
        const auto k = 1 + rng.uniform_index(std::min<std::size_t>(3, static_cast<std::size_t>(nc)));
        for (std::size_t idx : rng.sample_without_replacement(static_cast<std::size_t>(nc), k)) {
          visit.push_back(static_cast<int>(idx));
        }
      }
      std::sort(visit.begin(), visit.end());
      for (int c : visit) {
        activity.push_back({u, m, c, static_cast<int>(rng.uniform_int(1, 3)), false});
      }
      previous = visit;
    }
  }

  // Group activity by (month, community).
  std::vector<std::vector<std::size_t>> by_cell(static_cast<std::size_t>(nm * nc));
  for (std::size_t i = 0; i < activity.size(); ++i) {
    by_cell[static_cast<std::size_t>(activity[i].month * nc + activity[i].community)].push_back(i);
  }

  const Vocabulary vocab(config.common_vocab_size, config.esoteric_vocab_size, static_cast<std::size_t>(nc));
  const WordLists words = word_lists();
  SynthCorpus out;
  std::uint64_t next_comment = 0, next_post = 0;
  // (user, month, community) -> counts, for the vagrant oracle.
  std::map<std::tuple<std::size_t, int, int>, UserCounts> counts;

  for (int m = 0; m < nm; ++m) {
    const MonthKey key = month_key(m);
    const std::int64_t start = key.start_epoch();
    const std::int64_t end = key.next().start_epoch();
    const std::int64_t len = end - start;
    for (int c = 0; c < nc; ++c) {
      const auto& spec = config.communities[static_cast<std::size_t>(c)];
      Rng rng(derive_seed(config.seed, "cell:" + spec.name + ":" + key.str()));

      // Posts.
      std::vector<std::size_t> niche, mainstream;  // indices into out.posts
      for (std::size_t p = 0; p < config.posts_per_community_month; ++p) {
        const bool is_niche = p == 0 ? true : p == 1 ? false : rng.bernoulli(config.niche_post_fraction);
        corpus::Post post;
        post.id = "p" + base36(next_post++);
        post.community = spec.name;
        post.author = names[rng.uniform_index(n_users)];
        post.created_at = start + rng.uniform_int(0, len / 4);
        post.score = rng.poisson(is_niche ? config.niche_score_mean : config.mainstream_score_mean);
        if (config.render_text) {
          std::string title, body;
          for (int w = 0; w < 6; ++w) title += (w ? " " : "") + vocab.common(rng);
          const int filler = is_niche ? 14 : 20;
          for (int w = 0; w < filler; ++w) body += (w ? " " : "") + vocab.common(rng);
          if (is_niche) {
            for (int w = 0; w < 3; ++w) {
              const std::string& e = vocab.esoteric(c, rng);
              body += " " + e + " " + e;
            }
          }
          post.title = std::move(title);
          post.body = std::move(body);
        } else {
          post.title = "post " + post.id;
        }
        (is_niche ? niche : mainstream).push_back(out.posts.size());
        out.posts.push_back(std::move(post));
      }

      // Top-level comments.
      const std::size_t cell_first = out.comments.size();
      const auto& cell = by_cell[static_cast<std::size_t>(m * nc + c)];
      std::vector<std::size_t> reply_authors;
      for (std::size_t ai : cell) {
        const Activity& a = activity[ai];
        const auto& profile =
            archetype[a.user] == Archetype::Focused ? config.loyal_cohort : config.vagrant_cohort;
        for (int k = 0; k < a.top_level; ++k) {
          const auto& pool = rng.bernoulli(profile.niche_choice_prob) ? niche : mainstream;
          const corpus::Post& post = out.posts[pool[rng.uniform_index(pool.size())]];
          corpus::Comment cm;
          cm.id = "c" + base36(next_comment++);
          cm.post_id = post.id;
          cm.community = spec.name;
          cm.author = names[a.user];
          cm.created_at = post.created_at + 1 + rng.uniform_int(0, start + 3 * len / 4 - post.created_at - 1);
          cm.score = 1 + rng.poisson(3.0);
          if (config.render_text) cm.body = render_comment(profile, words, vocab, rng);
          out.comments.push_back(std::move(cm));
        }
        auto& uc = counts[{a.user, m, c}];
        uc.top += a.top_level;
        uc.total += a.top_level;
        const double rate = spec.reply_rate * (a.focused ? 1.0 : config.casual_reply_factor);
        const auto n_replies = rng.poisson(rate);
        for (std::int64_t r = 0; r < n_replies; ++r) reply_authors.push_back(a.user);
      }
      const std::size_t n_top = out.comments.size() - cell_first;

      // Replies, each after its parent and inside the month.
      rng.shuffle(reply_authors);
      std::vector<std::size_t> replies;  // indices into out.comments
      for (std::size_t u : reply_authors) {
        if (n_top == 0) break;
        std::size_t parent = cell_first + rng.uniform_index(n_top);
        if (!replies.empty() && rng.bernoulli(config.reply_to_reply_prob)) {
          const std::size_t cand = replies[rng.uniform_index(replies.size())];
          if (out.comments[cand].created_at < end - 3) parent = cand;
        }
        const corpus::Comment& pc = out.comments[parent];
        corpus::Comment cm;
        cm.id = "c" + base36(next_comment++);
        cm.parent_id = pc.id;
        cm.post_id = pc.post_id;
        cm.community = spec.name;
        cm.author = names[u];
        cm.created_at = pc.created_at + 1 + rng.uniform_int(0, std::min<std::int64_t>(86400, end - 3 - pc.created_at));
        cm.score = 1 + rng.poisson(2.0);
        if (config.render_text) {
          const auto& profile =
              archetype[u] == Archetype::Focused ? config.loyal_cohort : config.vagrant_cohort;
          cm.body = render_comment(profile, words, vocab, rng);
        }
        ++counts[{u, m, c}].total;
        replies.push_back(out.comments.size());
        out.comments.push_back(std::move(cm));
      }
    }
  }

  std::map<std::string, std::int64_t> per_post;
  for (const auto& cm : out.comments) ++per_post[cm.post_id];
  for (auto& p : out.posts) p.num_comments = per_post[p.id];
  std::sort(out.comments.begin(), out.comments.end(), [](const auto& a, const auto& b) {
    return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
  });
  std::sort(out.posts.begin(), out.posts.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  // Ground truth.
  GroundTruth& truth = out.truth;
  for (std::size_t u = 0; u < n_users; ++u) {
    for (int m = 0; m + 1 < nm; ++m) {
      const int f = focus[u][static_cast<std::size_t>(m)];
      if (f >= 0 && focus[u][static_cast<std::size_t>(m + 1)] == f) {
        truth.loyal.push_back({names[u], config.communities[static_cast<std::size_t>(f)].name, month_key(m),
                               loyalty::LabelKind::Loyal});
      }
    }
    if (archetype[u] == Archetype::Focused) truth.loyal_cohort_users.push_back(names[u]);
  }
  std::map<std::pair<std::size_t, int>, int> active;  // (user, month) -> any comments
  for (const auto& [k, v] : counts) active[{std::get<0>(k), std::get<1>(k)}] += v.total;
  for (const auto& [k, v] : counts) {
    const auto [u, m, c] = k;
    if (m + 1 >= nm || v.top < 1 || v.top > 3) continue;
    auto next_any = active.find({u, m + 1});
    if (next_any == active.end() || next_any->second == 0) continue;
    auto next_c = counts.find({u, m + 1, c});
    if (next_c != counts.end() && next_c->second.total > 0) continue;
    truth.vagrant.push_back({names[u], config.communities[static_cast<std::size_t>(c)].name, month_key(m),
                             loyalty::LabelKind::Vagrant});
  }
  for (const auto& [k, v] : counts) {
    const auto [u, m, c] = k;
    auto key = std::make_pair(names[u], config.communities[static_cast<std::size_t>(c)].name);
    auto [it, inserted] = truth.arrivals.try_emplace(key, month_key(m));
    if (!inserted && month_key(m) < it->second) it->second = month_key(m);
  }
  std::sort(truth.loyal.begin(), truth.loyal.end());
  std::sort(truth.vagrant.begin(), truth.vagrant.end());
  std::sort(truth.loyal_cohort_users.begin(), truth.loyal_cohort_users.end());
  for (const auto& s : config.communities) truth.planted_loyalty_rate[s.name] = s.stay_probability;
  for (auto [name, p] : {std::pair{"loyal", &config.loyal_cohort}, std::pair{"vagrant", &config.vagrant_cohort}}) {
    truth.cohort_means[name] = {p->rate_i, p->rate_you, p->rate_we, p->rate_affect_pos, p->rate_affect_neg,
                                1.0 + p->length_mean};
  }
  return out;
}

json to_json(const GroundTruth& t) {
  json loyal = json::array(), vagrant = json::array(), rates = json::object(), cohorts = json::object();
  for (const auto& l : t.loyal) loyal.push_back(label_json(l));
  for (const auto& l : t.vagrant) vagrant.push_back(label_json(l));
  for (const auto& [c, r] : t.planted_loyalty_rate) rates[c] = r;
  for (const auto& [name, m] : t.cohort_means) {
    cohorts[name] = {{"rate_i", m.rate_i},   {"rate_you", m.rate_you},
                     {"rate_we", m.rate_we}, {"rate_affect_pos", m.rate_affect_pos},
                     {"rate_affect_neg", m.rate_affect_neg}, {"verbosity", m.verbosity}};
  }
  return {{"planted_loyal", loyal},
          {"planted_vagrant", vagrant},
          {"planted_loyalty_rate", rates},
          {"loyal_cohort_users", t.loyal_cohort_users},
          {"cohort_means", cohorts}};
}

void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus, const SynthConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("comments.jsonl");
    for (const auto& c : corpus.comments) f << corpus::to_dump_record(c) << '\n';
  }
  {
    auto f = open("posts.jsonl");
    for (const auto& p : corpus.posts) f << corpus::to_dump_record(p) << '\n';
  }
  auto f = open("ground_truth.json");
  json j = to_json(corpus.truth);
  j["config"] = to_json(config);
  f << j.dump(1) << '\n';
}

}  // namespace loyaltylab::synthgen
