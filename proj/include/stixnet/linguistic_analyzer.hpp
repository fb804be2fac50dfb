#pragma once

// Lexicon-driven POS tagging, lemmatization and a heuristic dependency
// parser; CoNLL-U ingestion for externally produced parses.

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "stixnet/errors.hpp"
#include "stixnet/text_normalizer.hpp"
#include "stixnet/types.hpp"

namespace stixnet {

enum class Pos { NOUN, PROPN, VERB, AUX, PRON, DET, ADP, ADJ, ADV, NUM, PART, CCONJ, PUNCT, X };

inline constexpr std::array<std::string_view, 14> kPosNames = {"NOUN", "PROPN", "VERB", "AUX",   "PRON",
                                                               "DET",  "ADP",   "ADJ",  "ADV",   "NUM",
                                                               "PART", "CCONJ", "PUNCT", "X"};

inline std::string_view to_string(Pos p) { return kPosNames[static_cast<std::size_t>(p)]; }

inline std::optional<Pos> pos_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kPosNames.size(); ++i)
    if (kPosNames[i] == s) return static_cast<Pos>(i);
  return std::nullopt;
}

enum class DepLabel { nsubj, obj, obl, amod, det, appos, prep, pobj, conj, aux, punct, dep };

inline constexpr std::array<std::string_view, 12> kDepNames = {"nsubj", "obj",  "obl",  "amod", "det",   "appos",
                                                               "prep",  "pobj", "conj", "aux",  "punct", "dep"};

inline std::string_view to_string(DepLabel l) { return kDepNames[static_cast<std::size_t>(l)]; }

/// Closed-set lookup; CoNLL-U subtypes ("nsubj:pass") use their base label,
/// everything else becomes dep.
inline DepLabel dep_label_from_string(std::string_view s) {
  const auto colon = s.find(':');
  if (colon != std::string_view::npos) s = s.substr(0, colon);
  for (std::size_t i = 0; i < kDepNames.size(); ++i)
    if (kDepNames[i] == s) return static_cast<DepLabel>(i);
  return DepLabel::dep;
}

struct Token {
  std::size_t index = 0;
  std::string text;
  Span span;
  Pos pos = Pos::X;
  std::string lemma;

  friend bool operator==(const Token&, const Token&) = default;
};

struct DepEdge {
  std::size_t head;
  std::size_t dep;
  DepLabel label;

  friend bool operator==(const DepEdge&, const DepEdge&) = default;
};

struct DependencyGraph {
  std::size_t sentence_index = 0;
  std::vector<Token> nodes;
  std::vector<DepEdge> edges;
  std::size_t root = 0;

  std::optional<std::size_t> head_of(std::size_t i) const {
    for (const auto& e : edges)
      if (e.dep == i) return e.head;
    return std::nullopt;
  }

  const DepEdge* edge_to(std::size_t i) const {
    for (const auto& e : edges)
      if (e.dep == i) return &e;
    return nullptr;
  }

  std::vector<std::size_t> children(std::size_t i) const {
    std::vector<std::size_t> out;
    for (const auto& e : edges)
      if (e.head == i) out.push_back(e.dep);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Undirected adjacency lists, each sorted ascending.
  std::vector<std::vector<std::size_t>> adjacency() const {
    std::vector<std::vector<std::size_t>> adj(nodes.size());
    for (const auto& e : edges) {
      adj[e.head].push_back(e.dep);
      adj[e.dep].push_back(e.head);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
  }

  /// Empty string when the tree invariants hold, else a description.
  std::string check() const {
    const std::size_t n = nodes.size();
    if (n == 0) return edges.empty() ? "" : "edges without nodes";
    if (root >= n) return "root out of range";
    std::vector<int> heads(n, -1);
    for (const auto& e : edges) {
      if (e.head >= n || e.dep >= n) return "edge out of range";
      if (e.dep == root) return "root has a head";
      if (heads[e.dep] >= 0) return "token " + std::to_string(e.dep) + " has two heads";
      heads[e.dep] = static_cast<int>(e.head);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i != root && heads[i] < 0) return "token " + std::to_string(i) + " has no head";
      std::size_t steps = 0;
      for (std::size_t j = i; j != root; j = static_cast<std::size_t>(heads[j]))
        if (++steps > n) return "cycle through token " + std::to_string(i);
    }
    return "";
  }
};

/// Tagging and lemma tables loaded from pos_lexicon.tsv and
/// lemma_exceptions.tsv.
class Lexicon {
 public:
  struct Entry {
    std::vector<Pos> tags;  // first = majority tag
    bool closed = false;
  };

  static Lexicon load(const std::filesystem::path& pos_tsv, const std::filesystem::path& lemma_tsv) {
    Lexicon lex;
    std::ifstream pin(pos_tsv);
    if (!pin) throw Error("cannot open " + pos_tsv.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(pin, line)) {
      ++n;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string word, cls, tags;
      if (!std::getline(ss, word, '\t') || !std::getline(ss, cls, '\t') || !std::getline(ss, tags))
        throw Error(pos_tsv.string() + ":" + std::to_string(n) + ": expected word<TAB>class<TAB>tags");
      Entry e;
      e.closed = cls == "closed";
      std::istringstream ts(tags);
      std::string t;
      while (std::getline(ts, t, ',')) {
        auto p = pos_from_string(text::trim(t));
        if (!p) throw Error(pos_tsv.string() + ":" + std::to_string(n) + ": unknown tag '" + t + "'");
        e.tags.push_back(*p);
      }
      if (e.tags.empty()) throw Error(pos_tsv.string() + ":" + std::to_string(n) + ": no tags");
      lex.entries_[text::lower(word)] = std::move(e);
    }
    std::ifstream lin(lemma_tsv);
    if (!lin) throw Error("cannot open " + lemma_tsv.string());
    while (std::getline(lin, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      lex.lemmas_[text::lower(line.substr(0, tab))] = text::trim(line.substr(tab + 1));
    }
    return lex;
  }

  static Lexicon load_dir(const std::filesystem::path& data_dir) {
    return load(data_dir / "pos_lexicon.tsv", data_dir / "lemma_exceptions.tsv");
  }

  const Entry* lookup(std::string_view lower) const {
    auto it = entries_.find(std::string(lower));
    return it == entries_.end() ? nullptr : &it->second;
  }

  bool can_be(std::string_view lower, Pos p) const {
    const Entry* e = lookup(lower);
    return e && std::find(e->tags.begin(), e->tags.end(), p) != e->tags.end();
  }

  const std::string* exception(std::string_view lower) const {
    auto it = lemmas_.find(std::string(lower));
    return it == lemmas_.end() ? nullptr : &it->second;
  }

  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::unordered_map<std::string, Entry> entries_;
  std::unordered_map<std::string, std::string> lemmas_;
};

namespace detail {

inline bool has_alnum(std::string_view s) { return std::any_of(s.begin(), s.end(), text::is_alnum); }
inline bool has_digit(std::string_view s) { return std::any_of(s.begin(), s.end(), text::is_digit); }
inline bool has_letter(std::string_view s) { return std::any_of(s.begin(), s.end(), text::is_alpha); }

inline bool all_lower(std::string_view s) { return std::none_of(s.begin(), s.end(), text::is_upper); }

inline bool all_caps(std::string_view s) {
  return s.size() >= 2 && has_letter(s) && std::none_of(s.begin(), s.end(), text::is_lower) &&
         std::all_of(s.begin(), s.end(), [](char c) { return text::is_alpha(c) || c == '&'; });
}

inline bool title_case(std::string_view s) {
  return !s.empty() && text::is_upper(s[0]) && all_lower(s.substr(1));
}

inline bool is_number(std::string_view s) {
  if (s.empty() || !text::is_digit(s[0])) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return text::is_digit(c) || c == '.' || c == ','; });
}

inline bool ends_with(std::string_view s, std::string_view suf) {
  return s.size() >= suf.size() && s.substr(s.size() - suf.size()) == suf;
}

inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

inline std::string undouble(const std::string& stem) {
  const std::size_t n = stem.size();
  if (n >= 3 && stem[n - 1] == stem[n - 2] && !is_vowel(stem[n - 1]) && stem[n - 1] != 'l' && stem[n - 1] != 's' &&
      stem[n - 1] != 'z')
    return stem.substr(0, n - 1);
  return stem;
}

/// Base-form candidates for an -ed/-ing stem, most likely first.
inline std::vector<std::string> stem_candidates(const std::string& stem) {
  std::vector<std::string> c{stem, stem + "e"};
  const std::string u = undouble(stem);
  if (u != stem) c.push_back(u);
  return c;
}

/// Spelling fallback when no candidate is a known verb.
inline std::string guess_stem(const std::string& stem) {
  const std::string u = undouble(stem);
  if (u != stem) return u;
  static constexpr std::array<std::string_view, 10> kAddE = {"at", "iz", "ys", "ov", "od", "uc", "ur", "ag", "ut", "iv"};
  for (auto e : kAddE)
    if (ends_with(stem, e)) return stem + "e";
  return stem;
}

inline std::string verb_base(const std::string& w, const Lexicon& lex) {
  if (const auto* ex = lex.exception(w)) return *ex;
  auto pick = [&](const std::vector<std::string>& cands, const std::string& fallback) {
    for (const auto& c : cands)
      if (c.size() >= 2 && lex.can_be(c, Pos::VERB)) return c;
    return fallback;
  };
  if (w.size() > 4 && (ends_with(w, "ies") || ends_with(w, "ied"))) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 4 && ends_with(w, "ing")) {
    const std::string stem = w.substr(0, w.size() - 3);
    return pick(stem_candidates(stem), guess_stem(stem));
  }
  if (w.size() > 3 && ends_with(w, "ed")) {
    const std::string stem = w.substr(0, w.size() - 2);
    return pick(stem_candidates(stem), guess_stem(stem));
  }
  if (w.size() > 3 && ends_with(w, "es")) {
    const std::string s1 = w.substr(0, w.size() - 1), s2 = w.substr(0, w.size() - 2);
    const bool sibilant = ends_with(s2, "s") || ends_with(s2, "x") || ends_with(s2, "z") || ends_with(s2, "ch") ||
                          ends_with(s2, "sh") || ends_with(s2, "o");
    return pick({s1, s2}, sibilant ? s2 : s1);
  }
  if (w.size() > 2 && ends_with(w, "s") && !ends_with(w, "ss")) return w.substr(0, w.size() - 1);
  return w;
}

inline std::string noun_base(const std::string& w, const Lexicon& lex) {
  if (const auto* ex = lex.exception(w)) return *ex;
  if (lex.lookup(w) && !ends_with(w, "s")) return w;
  if (w.size() > 4 && ends_with(w, "ies")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 4 && (ends_with(w, "sses") || ends_with(w, "shes") || ends_with(w, "ches") || ends_with(w, "xes") ||
                       ends_with(w, "zes")))
    return w.substr(0, w.size() - 2);
  if (w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") && !ends_with(w, "is")) {
    const std::string s = w.substr(0, w.size() - 1);
    return s;
  }
  return w;
}

/// Chooses among an ambiguous word's tags from the previous token.
inline Pos disambiguate(const std::vector<Pos>& tags, std::optional<Pos> prev, std::string_view prev_lower) {
  auto has = [&](Pos p) { return std::find(tags.begin(), tags.end(), p) != tags.end(); };
  if (tags.size() == 1) return tags[0];
  if (has(Pos::VERB) && prev_lower == "to") return Pos::VERB;
  if (prev) {
    switch (*prev) {
      case Pos::DET:
      case Pos::ADJ:
      case Pos::NUM:
      case Pos::ADP:
        if (has(Pos::NOUN)) return Pos::NOUN;
        if (has(Pos::ADJ)) return Pos::ADJ;
        break;
      case Pos::PROPN:
      case Pos::NOUN:
      case Pos::PRON:
      case Pos::X:
      case Pos::AUX:
      case Pos::ADV:
        if (has(Pos::VERB)) return Pos::VERB;
        break;
      default: break;
    }
  }
  return tags[0];
}

}  // namespace detail

/// Lemma for one tagged token. PROPN/X keep their original form.
inline std::string lemmatize(std::string_view token_text, Pos pos, const Lexicon& lex) {
  const std::string w = text::lower(token_text);
  switch (pos) {
    case Pos::VERB: return detail::verb_base(w, lex);
    case Pos::AUX: {
      if (const auto* ex = lex.exception(w)) return *ex;
      return w;
    }
    case Pos::NOUN: return detail::noun_base(w, lex);
    case Pos::PROPN:
    case Pos::X:
    case Pos::NUM:
    case Pos::PUNCT: return std::string(token_text);
    default: return w;
  }
}

inline std::string lemmatize(const Token& t, const Lexicon& lex) { return lemmatize(t.text, t.pos, lex); }

/// Tags a tokenized sentence; lemmas are filled as well.
inline std::vector<Token> pos_tag(const std::vector<TextToken>& toks, const Lexicon& lex) {
  std::vector<Token> out;
  out.reserve(toks.size());
  bool initial = true;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string& w = toks[i].text;
    const std::string lw = text::lower(w);
    std::optional<Pos> prev;
    std::string prev_lower;
    if (!out.empty()) {
      prev = out.back().pos;
      prev_lower = text::lower(out.back().text);
    }
    Pos tag = Pos::X;
    if (!detail::has_alnum(w)) {
      tag = Pos::PUNCT;
    } else if (detail::is_number(w)) {
      tag = Pos::NUM;
    } else if (detail::all_caps(w)) {
      tag = Pos::PROPN;
    } else {
      const bool consult = detail::all_lower(w) || (initial && detail::title_case(w)) || w == "I";
      std::optional<Pos> found;
      if (consult && !detail::has_digit(w)) {
        if (const auto* e = lex.lookup(lw)) {
          found = detail::disambiguate(e->tags, prev, prev_lower);
        } else if (const auto* ex = lex.exception(lw)) {
          if (const auto* base = lex.lookup(*ex)) {
            std::vector<Pos> tags;
            for (Pos p : base->tags)
              if (p == Pos::VERB || p == Pos::NOUN || p == Pos::AUX) tags.push_back(p);
            if (!tags.empty()) found = detail::disambiguate(tags, prev, prev_lower);
          }
        } else if (lw.size() > 4 && detail::ends_with(lw, "ly")) {
          found = Pos::ADV;
        } else if (detail::ends_with(lw, "ing") || detail::ends_with(lw, "ed")) {
          const std::string base = detail::verb_base(lw, lex);
          if (lex.can_be(base, Pos::VERB)) {
            found = (detail::ends_with(lw, "ing") && prev && *prev == Pos::DET) ? Pos::NOUN : Pos::VERB;
          }
        } else if (detail::ends_with(lw, "s") && !detail::ends_with(lw, "ss")) {
          std::vector<Pos> tags;
          if (lex.can_be(detail::noun_base(lw, lex), Pos::NOUN)) tags.push_back(Pos::NOUN);
          if (lex.can_be(detail::verb_base(lw, lex), Pos::VERB)) tags.push_back(Pos::VERB);
          if (!tags.empty()) found = detail::disambiguate(tags, prev, prev_lower);
        }
      }
      if (found) {
        tag = *found;
      } else if ((!initial && text::is_upper(w[0])) || detail::has_digit(w) ||
                 (w.find('-') != std::string::npos && !detail::all_lower(w))) {
        tag = Pos::PROPN;
      } else if (w.find('-') != std::string::npos && detail::has_letter(w)) {
        tag = Pos::ADJ;
      } else {
        tag = Pos::X;
      }
    }
    Token t;
    t.index = i;
    t.text = w;
    t.span = toks[i].span;
    t.pos = tag;
    out.push_back(std::move(t));
    if (tag != Pos::PUNCT) initial = false;
  }
  // "to" before a verb is an infinitive marker.
  for (std::size_t i = 0; i + 1 < out.size(); ++i)
    if (text::lower(out[i].text) == "to" && out[i + 1].pos == Pos::VERB) out[i].pos = Pos::PART;
  for (auto& t : out) {
    t.lemma = lemmatize(t, lex);
    if (t.lemma.empty()) t.lemma = t.text;
  }
  return out;
}

namespace detail {

inline bool nominal(Pos p) { return p == Pos::NOUN || p == Pos::PROPN || p == Pos::X || p == Pos::PRON; }
inline bool premodifier(Pos p) { return p == Pos::DET || p == Pos::ADJ || p == Pos::NUM; }

inline bool participle_form(const Token& t, const Lexicon* lex) {
  const std::string w = text::lower(t.text);
  if (ends_with(w, "ed") || ends_with(w, "en")) return true;
  if (lex) {
    const auto* ex = lex->exception(w);
    return ex && *ex != w && !ends_with(w, "s");
  }
  return false;
}

struct Group {
  std::size_t first;
  std::size_t last;  // head
};

}  // namespace detail

/// Heuristic attachment over a tagged sentence. Always returns a tree
/// rooted at the main verb (or the first nominal when there is none).
inline DependencyGraph parse_dependencies(std::vector<Token> toks, std::size_t sentence_index = 0,
                                          const Lexicon* lex = nullptr) {
  using detail::Group;
  DependencyGraph g;
  g.sentence_index = sentence_index;
  const std::size_t n = toks.size();
  for (std::size_t i = 0; i < n; ++i) toks[i].index = i;
  g.nodes = std::move(toks);
  if (n == 0) return g;
  const auto& T = g.nodes;

  std::vector<int> head(n, -1);
  std::vector<DepLabel> label(n, DepLabel::dep);
  auto attach = [&](std::size_t dep, std::size_t h, DepLabel l) {
    if (dep == h || head[dep] >= 0) return;
    head[dep] = static_cast<int>(h);
    label[dep] = l;
  };

  // Nominal groups: premodifiers + nominals; split before a determiner or
  // pronoun that follows a nominal, and between a common noun and a
  // following proper name (apposition).
  std::vector<Group> groups;
  std::vector<int> group_of(n, -1);
  std::vector<int> appos_parent(n, -1);  // group index -> group it is appositive to
  for (std::size_t i = 0; i < n;) {
    if (!detail::nominal(T[i].pos) && !detail::premodifier(T[i].pos)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::size_t last_nominal = n;
    while (j < n && (detail::nominal(T[j].pos) || detail::premodifier(T[j].pos))) {
      if (last_nominal != n) {
        if (T[j].pos == Pos::DET || T[j].pos == Pos::PRON || T[last_nominal].pos == Pos::PRON) break;
        if (T[last_nominal].pos == Pos::NOUN && (T[j].pos == Pos::PROPN || T[j].pos == Pos::X)) break;
      }
      if (detail::nominal(T[j].pos)) last_nominal = j;
      ++j;
    }
    if (last_nominal == n) {
      // Premodifiers with no nominal: a bare number or adjective stands alone.
      for (std::size_t k = i; k < j; ++k) {
        if (T[k].pos == Pos::NUM) {
          groups.push_back({k, k});
          group_of[k] = static_cast<int>(groups.size() - 1);
        }
      }
      i = j;
      continue;
    }
    const std::size_t end = last_nominal + 1;
    groups.push_back({i, last_nominal});
    const int gi = static_cast<int>(groups.size() - 1);
    for (std::size_t k = i; k < end; ++k) group_of[k] = gi;
    if (gi > 0 && groups[static_cast<std::size_t>(gi) - 1].last + 1 == i && T[i - 1].pos == Pos::NOUN &&
        (T[i].pos == Pos::PROPN || T[i].pos == Pos::X))
      appos_parent[static_cast<std::size_t>(gi)] = gi - 1;
    i = end;
  }

  auto is_group_head = [&](std::size_t k) {
    return group_of[k] >= 0 && groups[static_cast<std::size_t>(group_of[k])].last == k;
  };

  // Reduced-relative participles ("a backdoor dubbed X") directly after a
  // common noun; they head a clause only when no other verb is finite.
  std::vector<bool> after_to(n, false), participle(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (T[i].pos != Pos::VERB) continue;
    after_to[i] = i > 0 && T[i - 1].pos == Pos::PART && text::lower(T[i - 1].text) == "to";
    participle[i] = !after_to[i] && i > 0 && T[i - 1].pos == Pos::NOUN && is_group_head(i - 1) &&
                    detail::participle_form(T[i], lex);
  }

  std::size_t root = n;
  for (std::size_t i = 0; i < n && root == n; ++i)
    if (T[i].pos == Pos::VERB && !after_to[i] && !participle[i]) root = i;
  for (std::size_t i = 0; i < n && root == n; ++i)
    if (T[i].pos == Pos::VERB && !after_to[i]) root = i;
  for (std::size_t i = 0; i < n && root == n; ++i)
    if (T[i].pos == Pos::AUX) {
      // Copula without a main verb.
      bool verb_follows = false;
      for (std::size_t k = i + 1; k < n; ++k)
        if (T[k].pos == Pos::VERB) verb_follows = true;
      if (!verb_follows) root = i;
    }
  for (std::size_t i = 0; i < n && root == n; ++i)
    if (T[i].pos == Pos::VERB) root = i;
  for (std::size_t i = 0; i < n && root == n; ++i)
    if (is_group_head(i)) root = i;
  for (std::size_t i = 0; i < n && root == n; ++i)
    if (T[i].pos != Pos::PUNCT) root = i;
  if (root == n) root = 0;
  g.root = root;
  const bool verbal_root = T[root].pos == Pos::VERB || T[root].pos == Pos::AUX;

  // Group-internal structure.
  for (const auto& gr : groups) {
    for (std::size_t k = gr.first; k < gr.last; ++k) {
      const DepLabel l = T[k].pos == Pos::DET ? DepLabel::det
                         : (T[k].pos == Pos::ADJ || T[k].pos == Pos::NUM) ? DepLabel::amod
                                                                           : DepLabel::dep;
      attach(k, gr.last, l);
    }
  }

  auto next_verb = [&](std::size_t from) -> std::size_t {
    for (std::size_t k = from; k < n; ++k) {
      if (T[k].pos == Pos::VERB) return k;
      if (T[k].pos != Pos::ADV && T[k].pos != Pos::PART && T[k].pos != Pos::AUX) break;
    }
    return n;
  };

  auto verb_between = [&](std::size_t a, std::size_t b) {
    for (std::size_t k = a + 1; k < b; ++k)
      if (T[k].pos == Pos::VERB) return true;
    return false;
  };

  std::size_t cur_verb = n;      // most recent clause-heading verb
  std::size_t last_nominal = n;  // most recent nominal group head
  std::size_t pending_adp = n;   // preposition awaiting its object
  bool pending_conj = false;
  std::size_t conj_left = n;
  std::vector<bool> has_obj(n, false);
  bool seen_verb = false;

  for (std::size_t i = 0; i < n; ++i) {
    const Pos p = T[i].pos;
    const bool clause_head = (p == Pos::VERB) || (p == Pos::AUX && next_verb(i + 1) == n);
    if (group_of[i] >= 0 && !is_group_head(i)) continue;

    if (is_group_head(i)) {
      const int gi = group_of[i];
      if (appos_parent[static_cast<std::size_t>(gi)] >= 0) {
        attach(i, groups[static_cast<std::size_t>(appos_parent[static_cast<std::size_t>(gi)])].last, DepLabel::appos);
      } else if (pending_adp != n) {
        attach(i, pending_adp, DepLabel::pobj);
        pending_adp = n;
      } else if (pending_conj && conj_left != n && !verb_between(conj_left, i)) {
        attach(i, conj_left, DepLabel::conj);
      } else if (cur_verb != n && seen_verb) {
        if (!has_obj[cur_verb]) {
          attach(i, cur_verb, DepLabel::obj);
          has_obj[cur_verb] = true;
        } else {
          attach(i, cur_verb, DepLabel::obl);
        }
      } else if (verbal_root && i < root) {
        bool subj_taken = false;
        for (std::size_t k = 0; k < n; ++k)
          if (head[k] == static_cast<int>(root) && label[k] == DepLabel::nsubj) subj_taken = true;
        attach(i, root, subj_taken ? DepLabel::dep : DepLabel::nsubj);
      } else {
        attach(i, root, DepLabel::dep);
      }
      pending_conj = false;
      last_nominal = i;
      continue;
    }

    switch (p) {
      case Pos::VERB:
      case Pos::AUX: {
        if (!clause_head) {
          const std::size_t v = next_verb(i + 1);
          if (v != n) attach(i, v, DepLabel::aux);
          break;
        }
        if (i > 0 && T[i - 1].pos == Pos::PART && text::lower(T[i - 1].text) == "to") {
          if (pending_adp == i - 1) pending_adp = n;
          attach(i - 1, i, DepLabel::aux);
          attach(i, cur_verb != n ? cur_verb : root, DepLabel::dep);
        } else if (participle[i] && i != root) {
          attach(i, i - 1, DepLabel::dep);
        } else if (pending_adp != n) {
          attach(i, pending_adp, DepLabel::dep);
          pending_adp = n;
        } else if (pending_conj && cur_verb != n) {
          attach(i, cur_verb, DepLabel::conj);
        } else {
          attach(i, root, DepLabel::dep);
        }
        pending_conj = false;
        cur_verb = i;
        seen_verb = true;
        break;
      }
      case Pos::ADP: {
        std::size_t h = n;
        for (std::size_t k = i; k-- > 0;) {
          if (T[k].pos == Pos::VERB || T[k].pos == Pos::AUX || is_group_head(k)) {
            h = k;
            break;
          }
        }
        attach(i, h != n ? h : root, DepLabel::prep);
        pending_adp = i;
        break;
      }
      case Pos::CCONJ: {
        pending_conj = true;
        const std::size_t left = (last_nominal != n && (cur_verb == n || last_nominal > cur_verb)) ? last_nominal : cur_verb;
        conj_left = last_nominal;
        attach(i, left != n ? left : root, DepLabel::dep);
        break;
      }
      case Pos::PUNCT: {
        if (T[i].text == "," && last_nominal != n && i + 1 < n && (cur_verb == n || last_nominal > cur_verb)) {
          pending_conj = true;
          conj_left = last_nominal;
        }
        attach(i, root, DepLabel::punct);
        break;
      }
      case Pos::PART: {
        if (text::lower(T[i].text) == "to" && i + 1 < n && T[i + 1].pos == Pos::VERB) break;  // attached by the verb
        const std::size_t v = next_verb(i + 1);
        attach(i, v != n ? v : root, DepLabel::dep);
        break;
      }
      case Pos::ADV: {
        const std::size_t v = next_verb(i + 1);
        attach(i, v != n ? v : (cur_verb != n ? cur_verb : root), DepLabel::dep);
        break;
      }
      default: attach(i, root, DepLabel::dep); break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (i == root) continue;
    if (head[i] < 0) attach(i, root, T[i].pos == Pos::PUNCT ? DepLabel::punct : DepLabel::dep);
  }
  // Break any cycle defensively by re-hanging the offending token on root.
  for (std::size_t i = 0; i < n; ++i) {
    if (i == root) continue;
    std::size_t steps = 0;
    for (std::size_t j = i; j != root && head[j] >= 0; j = static_cast<std::size_t>(head[j])) {
      if (++steps > n) {
        head[i] = static_cast<int>(root);
        label[i] = DepLabel::dep;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (i != root) g.edges.push_back({static_cast<std::size_t>(head[i]), i, label[i]});
  return g;
}

/// Tokenize, tag and parse every sentence of a normalized document.
inline std::vector<DependencyGraph> analyze(const NormalizedText& nt, const Lexicon& lex) {
  std::vector<DependencyGraph> out;
  out.reserve(nt.sentences.size());
  for (std::size_t s = 0; s < nt.sentences.size(); ++s)
    out.push_back(parse_dependencies(pos_tag(tokenize(nt, nt.sentences[s]), lex), s, &lex));
  return out;
}

/// Reads CoNLL-U graphs (ID/FORM/LEMMA/UPOS/HEAD/DEPREL). Multiword ranges
/// and empty nodes are skipped; spans are left empty.
inline std::vector<DependencyGraph> parse_conllu(std::istream& in) {
  std::vector<DependencyGraph> graphs;
  DependencyGraph cur;
  std::vector<std::pair<std::size_t, std::string>> heads;  // (head id, deprel) per token
  std::size_t line_no = 0;
  auto flush = [&]() {
    if (cur.nodes.empty()) return;
    const std::size_t idx = graphs.size();
    bool root_set = false;
    for (std::size_t i = 0; i < cur.nodes.size(); ++i) {
      const auto [h, rel] = heads[i];
      if (h == 0) {
        if (root_set) throw AlignmentError(idx, "more than one root");
        cur.root = i;
        root_set = true;
      } else {
        if (h > cur.nodes.size()) throw AlignmentError(idx, "HEAD " + std::to_string(h) + " out of range");
        cur.edges.push_back({h - 1, i, dep_label_from_string(rel)});
      }
    }
    if (!root_set) throw AlignmentError(idx, "no root (HEAD=0) token");
    cur.sentence_index = idx;
    if (auto err = cur.check(); !err.empty()) throw AlignmentError(idx, err);
    graphs.push_back(std::move(cur));
    cur = DependencyGraph{};
    heads.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    std::vector<std::string> cols;
    std::istringstream ss(line);
    std::string c;
    while (std::getline(ss, c, '\t')) cols.push_back(c);
    if (cols.size() != 10)
      throw AlignmentError(graphs.size(), "line " + std::to_string(line_no) + ": expected 10 tab-separated columns");
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    Token t;
    t.index = cur.nodes.size();
    t.text = cols[1];
    t.lemma = (cols[2].empty() || cols[2] == "_") ? cols[1] : cols[2];
    if (auto p = pos_from_string(cols[3])) {
      t.pos = *p;
    } else if (cols[3] == "SCONJ") {
      t.pos = Pos::CCONJ;
    } else if (cols[3] == "SYM") {
      t.pos = Pos::PUNCT;
    } else {
      t.pos = Pos::X;
    }
    std::size_t h = 0;
    try {
      h = static_cast<std::size_t>(std::stoul(cols[6]));
    } catch (const std::exception&) {
      throw AlignmentError(graphs.size(), "line " + std::to_string(line_no) + ": bad HEAD '" + cols[6] + "'");
    }
    heads.emplace_back(h, cols[7]);
    cur.nodes.push_back(std::move(t));
  }
  flush();
  return graphs;
}

/// CoNLL-U graphs aligned against the tokenizer output of `nt`; spans are
/// taken from the tokenizer. Any count or text mismatch is an error.
inline std::vector<DependencyGraph> ingest_conllu(std::istream& in, const NormalizedText& nt) {
  auto graphs = parse_conllu(in);
  if (graphs.size() != nt.sentences.size())
    throw AlignmentError(std::min(graphs.size(), nt.sentences.size()),
                         "CoNLL-U has " + std::to_string(graphs.size()) + " sentences, text has " +
                             std::to_string(nt.sentences.size()));
  for (std::size_t s = 0; s < graphs.size(); ++s) {
    const auto toks = tokenize(nt, nt.sentences[s]);
    auto& g = graphs[s];
    if (toks.size() != g.nodes.size())
      throw AlignmentError(s, "token count " + std::to_string(g.nodes.size()) + " != tokenizer count " +
                                  std::to_string(toks.size()));
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (toks[i].text != g.nodes[i].text)
        throw AlignmentError(s, "token " + std::to_string(i + 1) + " '" + g.nodes[i].text + "' != '" + toks[i].text +
                                    "'");
      g.nodes[i].span = toks[i].span;
    }
  }
  return graphs;
}

inline std::vector<DependencyGraph> ingest_conllu(const std::filesystem::path& file, const NormalizedText& nt) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  return ingest_conllu(in, nt);
}

}  // namespace stixnet
