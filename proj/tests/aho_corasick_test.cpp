#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "stixnet/aho_corasick.hpp"

using stixnet::AhoCorasick;

namespace {

std::vector<AhoCorasick::Hit> naive(const std::vector<std::string>& pats, const std::string& text) {
  std::vector<AhoCorasick::Hit> out;
  for (std::size_t p = 0; p < pats.size(); ++p) {
    if (pats[p].empty()) continue;
    bool dup = false;
    for (std::size_t q = 0; q < p; ++q) dup |= pats[q] == pats[p];
    if (dup) continue;
    for (std::size_t pos = text.find(pats[p]); pos != std::string::npos; pos = text.find(pats[p], pos + 1))
      out.push_back({p, pos, pos + pats[p].size()});
  }
  return out;
}

auto sorted(std::vector<AhoCorasick::Hit> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return std::tie(a.start, a.end, a.pattern) < std::tie(b.start, b.end, b.pattern);
  });
  return v;
}

}  // namespace

TEST(AhoCorasick, ClassicExample) {
  AhoCorasick ac({"he", "she", "his", "hers"});
  auto hits = sorted(ac.find_all("ushers"));
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0], (AhoCorasick::Hit{1, 1, 4}));
  EXPECT_EQ(hits[1], (AhoCorasick::Hit{0, 2, 4}));
  EXPECT_EQ(hits[2], (AhoCorasick::Hit{3, 2, 6}));
}

TEST(AhoCorasick, EmptyAutomatonAndEmptyPatterns) {
  AhoCorasick none;
  EXPECT_TRUE(none.find_all("anything").empty());
  AhoCorasick ac({"", "a"});
  EXPECT_EQ(ac.find_all("aa").size(), 2u);
}

TEST(AhoCorasick, DuplicatesShareFirstId) {
  AhoCorasick ac({"ab", "ab"});
  auto hits = ac.find_all("ab");
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].pattern, 0u);
}

TEST(AhoCorasick, MatchesNaiveScanOnRandomInputs) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> ch(0, 2), len(1, 5), count(1, 12), tlen(0, 200);
  for (int round = 0; round < 300; ++round) {
    std::vector<std::string> pats(static_cast<std::size_t>(count(rng)));
    for (auto& p : pats) {
      const int l = len(rng);
      for (int i = 0; i < l; ++i) p.push_back(static_cast<char>('a' + ch(rng)));
    }
    std::string text;
    const int l = tlen(rng);
    for (int i = 0; i < l; ++i) text.push_back(static_cast<char>('a' + ch(rng)));
    AhoCorasick ac(pats);
    ASSERT_EQ(sorted(ac.find_all(text)), sorted(naive(pats, text))) << text;
  }
}

TEST(AhoCorasick, NonAsciiBytes) {
  AhoCorasick ac({"\xc3\xa9t\xc3\xa9"});
  auto hits = ac.find_all("l'\xc3\xa9t\xc3\xa9 dernier");
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].start, 2u);
}
