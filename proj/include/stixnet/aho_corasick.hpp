#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

namespace stixnet {

/// Byte-level Aho-Corasick automaton. Immutable after construction.
class AhoCorasick {
 public:
  struct Hit {
    std::size_t pattern;
    std::size_t start;
    std::size_t end;

    friend bool operator==(const Hit&, const Hit&) = default;
  };

  AhoCorasick() : nodes_(1) {}

  /// Duplicate and empty patterns are accepted; duplicates share one id
  /// (the first occurrence), empty patterns never match.
  explicit AhoCorasick(std::vector<std::string> patterns) : patterns_(std::move(patterns)), nodes_(1) {
    for (std::size_t p = 0; p < patterns_.size(); ++p) insert(p);
    link();
  }

  const std::vector<std::string>& patterns() const noexcept { return patterns_; }
  std::size_t size() const noexcept { return patterns_.size(); }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  /// Calls on_hit(Hit) for every occurrence of every pattern, in order of
  /// end position (longer patterns first among equal ends).
  template <typename OnHit>
  void scan(std::string_view text, OnHit&& on_hit) const {
    int32_t state = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const auto b = static_cast<unsigned char>(text[i]);
      int32_t nxt;
      while ((nxt = child(state, b)) < 0 && state != 0) state = nodes_[static_cast<std::size_t>(state)].fail;
      state = nxt < 0 ? 0 : nxt;
      for (int32_t s = nodes_[static_cast<std::size_t>(state)].out >= 0 ? state : nodes_[static_cast<std::size_t>(state)].dict;
           s >= 0; s = nodes_[static_cast<std::size_t>(s)].dict) {
        const auto& n = nodes_[static_cast<std::size_t>(s)];
        on_hit(Hit{static_cast<std::size_t>(n.out), i + 1 - n.depth, i + 1});
      }
    }
  }

  std::vector<Hit> find_all(std::string_view text) const {
    std::vector<Hit> hits;
    scan(text, [&](const Hit& h) { hits.push_back(h); });
    return hits;
  }

 private:
  struct Node {
    std::vector<std::pair<unsigned char, int32_t>> next;  // sorted by byte
    int32_t fail = 0;
    int32_t out = -1;   // pattern ending exactly here
    int32_t dict = -1;  // nearest proper suffix state with an output
    uint32_t depth = 0;
  };

  int32_t child(int32_t node, unsigned char b) const {
    const auto& next = nodes_[static_cast<std::size_t>(node)].next;
    auto it = std::lower_bound(next.begin(), next.end(), b,
                               [](const std::pair<unsigned char, int32_t>& e, unsigned char v) { return e.first < v; });
    return (it != next.end() && it->first == b) ? it->second : -1;
  }

  void insert(std::size_t p) {
    const std::string& pat = patterns_[p];
    if (pat.empty()) return;
    int32_t node = 0;
    for (char ch : pat) {
      const auto b = static_cast<unsigned char>(ch);
      int32_t c = child(node, b);
      if (c < 0) {
        c = static_cast<int32_t>(nodes_.size());
        Node fresh;
        fresh.depth = nodes_[static_cast<std::size_t>(node)].depth + 1;
        nodes_.push_back(std::move(fresh));
        auto& next = nodes_[static_cast<std::size_t>(node)].next;
        auto it = std::lower_bound(next.begin(), next.end(), b,
                                   [](const std::pair<unsigned char, int32_t>& e, unsigned char v) { return e.first < v; });
        next.insert(it, {b, c});
      }
      node = c;
    }
    auto& n = nodes_[static_cast<std::size_t>(node)];
    if (n.out < 0) n.out = static_cast<int32_t>(p);
  }

  void link() {
    std::deque<int32_t> queue;
    for (const auto& [b, c] : nodes_[0].next) {
      nodes_[static_cast<std::size_t>(c)].fail = 0;
      queue.push_back(c);
    }
    while (!queue.empty()) {
      const int32_t u = queue.front();
      queue.pop_front();
      for (const auto& [b, c] : nodes_[static_cast<std::size_t>(u)].next) {
        int32_t f = nodes_[static_cast<std::size_t>(u)].fail;
        int32_t target;
        while ((target = child(f, b)) < 0 && f != 0) f = nodes_[static_cast<std::size_t>(f)].fail;
        auto& node = nodes_[static_cast<std::size_t>(c)];
        node.fail = target < 0 ? 0 : target;
        const auto& fn = nodes_[static_cast<std::size_t>(node.fail)];
        node.dict = fn.out >= 0 ? node.fail : fn.dict;
        queue.push_back(c);
      }
    }
  }

  std::vector<std::string> patterns_;
  std::vector<Node> nodes_;
};

}  // namespace stixnet
