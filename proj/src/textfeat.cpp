#include "loyaltylab/textfeat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "loyaltylab/csv.hpp"
#include "loyaltylab/rng.hpp"

namespace loyaltylab::textfeat {

namespace {

enum class CharClass { Word, Apostrophe, Separator };

// Decodes one UTF-8 sequence at text[i]; advances i. Invalid bytes decode
// to U+FFFD so they separate.
char32_t decode(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > text.size()) {
    ++i;
    return 0xFFFD;
  }
  char32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b >> 6) != 0x2) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    if (cp == '\'') return CharClass::Apostrophe;
    const bool alnum = (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    return alnum ? CharClass::Word : CharClass::Separator;
  }
  if (cp == 0x2018 || cp == 0x2019) return CharClass::Apostrophe;
  if (cp <= 0xBF || cp == 0xD7 || cp == 0xF7) return CharClass::Separator;  // Latin-1 punctuation
  if (cp >= 0x2000 && cp <= 0x206F) return CharClass::Separator;            // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return CharClass::Separator;            // CJK punctuation
  if (cp == 0xFEFF || cp == 0xFFFD) return CharClass::Separator;
  return CharClass::Word;
}

void flush(std::string& cur, std::vector<std::string>& out) {
  while (!cur.empty() && cur.back() == '\'') cur.pop_back();
  if (!cur.empty()) out.push_back(std::move(cur));
  cur.clear();
}

WordSet words(std::initializer_list<const char*> list) {
  WordSet s;
  for (const char* w : list) s.emplace(w);
  return s;
}

bool ascii_alpha(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  });
}

double rate(std::size_t hits, std::size_t n) {
  return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = decode(text, i);
    switch (classify(cp)) {
      case CharClass::Word:
        if (cp < 0x80) {
          const char c = static_cast<char>(cp);
          cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        } else {
          cur.append(text.substr(start, i - start));
        }
        break;
      case CharClass::Apostrophe:
        if (!cur.empty()) cur += '\'';
        break;
      case CharClass::Separator:
        flush(cur, out);
        break;
    }
  }
  flush(cur, out);
  return out;
}

Lexicons Lexicons::defaults() {
  Lexicons lx;
  lx.pronoun_i = words({"i", "i'm", "me", "my", "mine", "myself"});
  lx.pronoun_you = words({"you", "your", "yours", "you're", "yourself"});
  lx.pronoun_we = words({"we", "us", "our", "ours", "we're"});
  lx.affect_positive = words({"amazing", "awesome", "beautiful", "best", "cool", "enjoy", "excellent",
                              "fun", "glad", "good", "great", "happy", "love", "nice", "thank",
                              "thanks", "wonderful"});
  lx.affect_negative = words({"afraid", "angry", "annoying", "awful", "bad", "boring", "fear", "hate",
                              "horrible", "hurt", "sad", "sorry", "stupid", "terrible", "ugly",
                              "upset", "worst", "wrong"});
  lx.stopwords = words({"a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at",
                        "be", "because", "been", "but", "by", "can", "could", "did", "do", "does",
                        "for", "from", "get", "had", "has", "have", "he", "her", "here", "him",
                        "his", "how", "if", "in", "into", "is", "it", "its", "just", "like",
                        "more", "most", "no", "not", "now", "of", "on", "one", "only", "or",
                        "other", "out", "she", "so", "some", "than", "that", "the", "their",
                        "them", "then", "there", "these", "they", "this", "those", "to", "too",
                        "up", "very", "was", "were", "what", "when", "where", "which", "who",
                        "why", "will", "with", "would", "yes"});
  return lx;
}

void Lexicons::validate() const {
  auto check_lower = [](const WordSet& s, const char* name) {
    for (const auto& w : s) {
      if (std::any_of(w.begin(), w.end(), [](char c) { return c >= 'A' && c <= 'Z'; })) {
        throw std::invalid_argument(std::string("lexicon ") + name + ": word not lowercase: " + w);
      }
    }
  };
  check_lower(pronoun_i, "i");
  check_lower(pronoun_you, "you");
  check_lower(pronoun_we, "we");
  check_lower(affect_positive, "affect_positive");
  check_lower(affect_negative, "affect_negative");
  check_lower(stopwords, "stopwords");
  if (noun_vocabulary) check_lower(*noun_vocabulary, "nouns");
  const WordSet* groups[] = {&pronoun_i, &pronoun_you, &pronoun_we};
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      for (const auto& w : *groups[a]) {
        if (groups[b]->contains(w)) throw std::invalid_argument("lexicon: pronoun in two groups: " + w);
      }
    }
  }
}

bool Lexicons::is_noun(std::string_view token) const {
  if (noun_vocabulary) return noun_vocabulary->contains(token);
  return token.size() >= 3 && ascii_alpha(token) && !stopwords.contains(token);
}

WordSet read_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open lexicon file: " + path.string());
  WordSet out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string w = line.substr(first, last - first + 1);
    std::transform(w.begin(), w.end(), w.begin(),
                   [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; });
    out.insert(std::move(w));
  }
  return out;
}

Lexicons load_lexicons(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("lexicon directory not found: " + dir.string());
  Lexicons lx = Lexicons::defaults();
  auto load = [&](const char* file, WordSet& target) {
    const auto p = dir / file;
    if (std::filesystem::exists(p)) target = read_word_list(p);
  };
  load("i.txt", lx.pronoun_i);
  load("you.txt", lx.pronoun_you);
  load("we.txt", lx.pronoun_we);
  load("affect_positive.txt", lx.affect_positive);
  load("affect_negative.txt", lx.affect_negative);
  load("stopwords.txt", lx.stopwords);
  if (std::filesystem::exists(dir / "nouns.txt")) lx.noun_vocabulary = read_word_list(dir / "nouns.txt");
  lx.validate();
  return lx;
}

FeatureVector linguistic_features(std::string_view text, const Lexicons& lexicons) {
  const auto tokens = tokenize(text);
  std::size_t i = 0, you = 0, we = 0, pos = 0, neg = 0;
  for (const auto& t : tokens) {
    i += lexicons.pronoun_i.contains(t);
    you += lexicons.pronoun_you.contains(t);
    we += lexicons.pronoun_we.contains(t);
    pos += lexicons.affect_positive.contains(t);
    neg += lexicons.affect_negative.contains(t);
  }
  FeatureVector f;
  f.verbosity = tokens.size();
  f.rate_i = rate(i, tokens.size());
  f.rate_you = rate(you, tokens.size());
  f.rate_we = rate(we, tokens.size());
  f.rate_affect_pos = rate(pos, tokens.size());
  f.rate_affect_neg = rate(neg, tokens.size());
  return f;
}

IdfTable idf_table(const std::vector<std::string>& documents, const Lexicons& lexicons) {
  std::map<std::string, std::pair<std::size_t, std::size_t>, std::less<>> counts;  // df, total
  for (const auto& doc : documents) {
    auto tokens = tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    for (std::size_t a = 0; a < tokens.size();) {
      std::size_t b = a;
      while (b < tokens.size() && tokens[b] == tokens[a]) ++b;
      if (lexicons.is_noun(tokens[a])) {
        auto& c = counts[tokens[a]];
        c.first += 1;
        c.second += b - a;
      }
      a = b;
    }
  }
  IdfTable out;
  const double n = static_cast<double>(documents.size());
  for (const auto& [w, c] : counts) {
    if (c.second < 2) continue;
    out.emplace(w, std::log(n / static_cast<double>(c.first)));
  }
  return out;
}

IdfTable idf_table(const corpus::CorpusStore& store, std::string_view community,
                   corpus::MonthKey month, const Lexicons& lexicons) {
  std::vector<std::string> docs;
  for (std::size_t idx : store.posts_in(community, month)) docs.push_back(store.posts()[idx].text());
  return idf_table(docs, lexicons);
}

std::optional<double> esotericity(std::string_view text, const IdfTable& table) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : tokenize(text)) {
    auto it = table.find(t);
    if (it == table.end()) continue;
    sum += it->second;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

SelectedPosts sample_selected_posts(const corpus::CorpusStore& store,
                                    const loyalty::LabelIndex& labels, std::string_view community,
                                    std::size_t n, std::uint64_t seed) {
  SelectedPosts out;
  auto cohort = [&](loyalty::LabelKind kind, const char* name, std::vector<SelectedPost>& dest) {
    auto authors = labels.authors(community, kind);
    Rng rng(derive_seed(seed, "selected-posts:" + std::string(community) + ":" + name));
    rng.shuffle(authors);
    for (const auto& author : authors) {
      if (dest.size() == n) break;
      std::set<std::string> post_ids;
      for (auto month : labels.months(author, community, kind)) {
        for (std::size_t idx : store.comments_by(author, month)) {
          const auto& c = store.comments()[idx];
          if (c.community == community && store.find_post(c.post_id)) post_ids.insert(c.post_id);
        }
      }
      if (post_ids.empty()) continue;
      auto it = post_ids.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(rng.uniform_index(post_ids.size())));
      const corpus::Post* p = store.find_post(*it);
      dest.push_back({author, p->id, p->score, p->num_comments, corpus::month_of(p->created_at)});
    }
    if (dest.size() < n) {
      out.warnings.push_back(std::string(community) + ": " + name + " cohort yields " +
                             std::to_string(dest.size()) + " posts (< " + std::to_string(n) + "); sampled all");
    }
  };
  cohort(loyalty::LabelKind::Loyal, "loyal", out.loyal_selected);
  cohort(loyalty::LabelKind::Vagrant, "vagrant", out.vagrant_selected);
  return out;
}

std::vector<CommentPair> build_comment_pairs(const corpus::CorpusStore& store,
                                             const loyalty::LabelIndex& labels,
                                             std::string_view community, std::size_t per_post,
                                             std::uint64_t seed) {
  struct Sides {
    std::vector<std::string> loyal, vagrant;
  };
  std::map<std::string, Sides> by_post;
  for (std::size_t idx : store.comments_in(community)) {
    const auto& c = store.comments()[idx];
    if (!c.is_top_level()) continue;
    const auto month = c.month();
    if (labels.has(c.author, community, month, loyalty::LabelKind::Loyal)) {
      by_post[c.post_id].loyal.push_back(c.id);
    } else if (labels.has(c.author, community, month, loyalty::LabelKind::Vagrant)) {
      by_post[c.post_id].vagrant.push_back(c.id);
    }
  }
  std::vector<CommentPair> out;
  for (auto& [post_id, sides] : by_post) {
    if (sides.loyal.empty() || sides.vagrant.empty()) continue;
    std::sort(sides.loyal.begin(), sides.loyal.end());
    std::sort(sides.vagrant.begin(), sides.vagrant.end());
    const std::size_t nv = sides.vagrant.size();
    const std::size_t total = sides.loyal.size() * nv;
    auto emit = [&](std::size_t k) {
      out.push_back({post_id, sides.loyal[k / nv], sides.vagrant[k % nv]});
    };
    if (per_post == 0 || per_post >= total) {
      for (std::size_t k = 0; k < total; ++k) emit(k);
      continue;
    }
    Rng rng(derive_seed(seed, "pairs:" + std::string(community) + ":" + post_id));
    auto picks = rng.sample_without_replacement(total, per_post);
    std::sort(picks.begin(), picks.end());
    for (std::size_t k : picks) emit(k);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  out << csv::row({"id", "verbosity", "rate_i", "rate_you", "rate_we", "rate_affect_pos",
                   "rate_affect_neg", "post_score", "esotericity", "empty"});
  for (const auto& r : rows) {
    const auto& f = r.features;
    out << csv::row({r.id, std::to_string(f.verbosity), csv::num(f.rate_i), csv::num(f.rate_you),
                     csv::num(f.rate_we), csv::num(f.rate_affect_pos), csv::num(f.rate_affect_neg),
                     f.post_score ? std::to_string(*f.post_score) : std::string(),
                     csv::num(f.esotericity), f.empty() ? "1" : "0"});
  }
}

void write_pairs_csv(std::ostream& out, const std::vector<CommentPair>& pairs) {
  out << csv::row({"post_id", "loyal_comment_id", "vagrant_comment_id"});
  for (const auto& p : pairs) out << csv::row({p.post_id, p.loyal_comment_id, p.vagrant_comment_id});
}

}  // namespace loyaltylab::textfeat
