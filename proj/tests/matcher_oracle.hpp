#pragma once

// Naive substring-scan oracle and random instance generator for the KB
// matcher; shared by the unit and acceptance suites.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "stixnet/kb_matcher.hpp"

namespace oracle {

struct Found {
  std::size_t start, end;
  std::string kb_id;
  bool operator==(const Found&) const = default;
};

inline bool word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
         static_cast<unsigned char>(c) >= 0x80;
}

inline std::string fold(std::string s) {
  for (auto& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

inline std::vector<Found> naive_match(const std::string& text, const std::vector<stixnet::KbEntity>& entities) {
  const std::string t = fold(text);
  std::vector<Found> all;
  for (const auto& e : entities) {
    std::vector<std::string> forms{e.name};
    forms.insert(forms.end(), e.aliases.begin(), e.aliases.end());
    for (const auto& f : forms) {
      const std::string p = fold(f);
      for (std::size_t pos = t.find(p); pos != std::string::npos; pos = t.find(p, pos + 1)) {
        const std::size_t end = pos + p.size();
        if (pos > 0 && word_char(t[pos - 1])) continue;
        if (end < t.size() && word_char(t[end])) continue;
        all.push_back({pos, end, e.id});
      }
    }
  }
  std::sort(all.begin(), all.end(), [](const Found& a, const Found& b) {
    if (a.end - a.start != b.end - b.start) return a.end - a.start > b.end - b.start;
    return a.start < b.start;
  });
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<Found> kept;
  for (const auto& f : all) {
    bool clash = false;
    for (const auto& k : kept) clash |= f.start < k.end && k.start < f.end;
    if (!clash) kept.push_back(f);
  }
  std::sort(kept.begin(), kept.end(), [](const Found& a, const Found& b) { return a.start < b.start; });
  return kept;
}

inline std::vector<Found> automaton_match(const std::string& text, const stixnet::KbSnapshot& snap) {
  std::vector<Found> out;
  for (const auto& m : stixnet::match_entities(text, snap)) out.push_back({m.span->start, m.span->end, *m.kb_id});
  return out;
}

struct Instance {
  std::unique_ptr<stixnet::KnowledgeBase> kb;
  std::string text;
};

/// Random KB (<= 50 entities, overlapping surface forms likely) and a text
/// (<= 2 kB) that mixes random-cased surfaces, fillers and glued suffixes.
inline Instance random_instance(std::mt19937& rng) {
  static const std::vector<std::string> syl = {"ap", "t2", "9", "co", "zy", "bear", "fan", "cy", "lazar", "us",
                                               "x",  "zip", "7", "sun", "burst", "rain", "drop", "e", "-", "el"};
  static const std::vector<std::string> filler = {"the", "used", "and", ",", ".", " ", "\n", "(", ")", "'s", "x-",
                                                  "é",   "to",   "a"};
  static const std::vector<std::string> types = {"malware", "tool", "intrusion-set", "location", "campaign"};
  Instance inst;
  inst.kb = std::make_unique<stixnet::KnowledgeBase>();
  std::uniform_int_distribution<int> n_ent(0, 50), n_syl(1, 3), coin(0, 3), n_alias(0, 2);
  auto word = [&]() {
    std::string w;
    const int k = n_syl(rng);
    for (int i = 0; i < k; ++i) {
      w += syl[std::uniform_int_distribution<std::size_t>(0, syl.size() - 1)(rng)];
      if (i + 1 < k && coin(rng) == 0) w += ' ';
    }
    return w;
  };
  std::vector<std::string> surfaces;
  const int ne = n_ent(rng);
  for (int i = 0; i < ne; ++i) {
    std::vector<std::string> aliases;
    const int na = n_alias(rng);
    for (int a = 0; a < na; ++a) aliases.push_back(word());
    try {
      auto e = inst.kb->add_entity(types[static_cast<std::size_t>(i) % types.size()], word(), aliases,
                                   stixnet::KbSource::Manual);
      surfaces.push_back(e.name);
      for (const auto& a : e.aliases) surfaces.push_back(a);
    } catch (const stixnet::IngestError&) {
    }
  }
  std::uniform_int_distribution<std::size_t> tlen(0, 2000);
  const std::size_t target = tlen(rng);
  while (inst.text.size() < target) {
    const int r = coin(rng);
    if (r <= 1 && !surfaces.empty()) {
      std::string s = surfaces[std::uniform_int_distribution<std::size_t>(0, surfaces.size() - 1)(rng)];
      for (auto& c : s)
        if (coin(rng) == 0 && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
      inst.text += s;
    } else if (r == 2) {
      inst.text += filler[std::uniform_int_distribution<std::size_t>(0, filler.size() - 1)(rng)];
    } else {
      inst.text += ' ';
    }
  }
  if (inst.text.size() > 2048) inst.text.resize(2048);
  return inst;
}

}  // namespace oracle
