#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "loyaltylab/corpus.hpp"

namespace testsupport {

using loyaltylab::corpus::Comment;
using loyaltylab::corpus::CorpusStore;
using loyaltylab::corpus::MonthKey;
using loyaltylab::corpus::Post;

/// Builds small stores by activity counts. Each (community, month) gets one
/// post; top-level comments attach to it and replies to its first top-level
/// comment, so add all top-level activity before replies.
class CorpusBuilder {
 public:
  std::string post_for(const std::string& community, MonthKey month) {
    const auto key = std::make_pair(community, month);
    if (auto it = post_of_.find(key); it != post_of_.end()) return it->second;
    Post p;
    p.id = "p_" + community + "_" + month.str();
    p.community = community;
    p.author = "op_" + community;
    p.created_at = month.start_epoch() + 60;
    p.title = "thread " + community;
    p.score = 1;
    posts_.push_back(p);
    post_of_[key] = p.id;
    return p.id;
  }

  std::string top(const std::string& author, const std::string& community, MonthKey month,
                  std::string body = "a comment") {
    Comment c;
    c.id = "c" + std::to_string(next_id_++);
    c.post_id = post_for(community, month);
    c.community = community;
    c.author = author;
    c.created_at = month.start_epoch() + 3600 + 60 * static_cast<std::int64_t>(next_id_);
    c.body = std::move(body);
    first_top_.try_emplace({community, month}, c.id);
    comments_.push_back(c);
    return c.id;
  }

  std::string reply(const std::string& author, const std::string& community, MonthKey month,
                    std::string body = "a reply") {
    auto it = first_top_.find({community, month});
    if (it == first_top_.end()) throw std::logic_error("reply before any top-level comment");
    return reply_to(author, it->second, std::move(body));
  }

  std::string reply_to(const std::string& author, const std::string& parent_id, std::string body = "a reply") {
    const Comment* parent = nullptr;
    for (const auto& c : comments_) {
      if (c.id == parent_id) parent = &c;
    }
    if (!parent) throw std::logic_error("unknown parent " + parent_id);
    Comment c;
    c.id = "c" + std::to_string(next_id_++);
    c.parent_id = parent_id;
    c.post_id = parent->post_id;
    c.community = parent->community;
    c.author = author;
    c.created_at = parent->created_at + 30;
    c.body = std::move(body);
    comments_.push_back(c);
    return c.id;
  }

  void tops(const std::string& author, const std::string& community, MonthKey month, int n) {
    for (int i = 0; i < n; ++i) top(author, community, month);
  }
  void replies(const std::string& author, const std::string& community, MonthKey month, int n) {
    for (int i = 0; i < n; ++i) reply(author, community, month);
  }

  std::vector<Comment>& comments() { return comments_; }
  std::vector<Post>& posts() { return posts_; }

  CorpusStore build() const { return CorpusStore(comments_, posts_); }

 private:
  std::vector<Comment> comments_;
  std::vector<Post> posts_;
  std::map<std::pair<std::string, MonthKey>, std::string> post_of_;
  std::map<std::pair<std::string, MonthKey>, std::string> first_top_;
  int next_id_ = 0;
};

}  // namespace testsupport
