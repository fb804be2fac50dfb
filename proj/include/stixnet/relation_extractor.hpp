#pragma once

// Relation extraction: shortest dependency paths scored by verb similarity
// against the SRO catalog, sentence-embedding similarity, and the
// max-confidence merge of both.

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "stixnet/errors.hpp"
#include "stixnet/kb_matcher.hpp"
#include "stixnet/linguistic_analyzer.hpp"
#include "stixnet/types.hpp"

namespace stixnet {

struct SroEntry {
  std::string source;
  std::string rel;
  std::string target;
  std::string verb;

  friend bool operator==(const SroEntry&, const SroEntry&) = default;
};

class SroCatalog {
 public:
  SroCatalog() = default;

  explicit SroCatalog(std::vector<SroEntry> entries) : entries_(std::move(entries)) {
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& e : entries_) {
      if (!is_entity_type(e.source) || !is_entity_type(e.target))
        throw Error("catalog entry " + e.source + " " + e.rel + " " + e.target + " has a non-SDO endpoint");
      if (!seen.emplace(e.source, e.rel, e.target).second)
        throw Error("duplicate catalog entry " + e.source + " " + e.rel + " " + e.target);
    }
  }

  static SroCatalog from_json(const nlohmann::json& j) {
    std::vector<SroEntry> es;
    for (const auto& r : j)
      es.push_back({r.at("source").get<std::string>(), r.at("rel").get<std::string>(), r.at("target").get<std::string>(),
                    r.at("verb").get<std::string>()});
    return SroCatalog(std::move(es));
  }

  static SroCatalog load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open SRO catalog " + path.string());
    return from_json(nlohmann::json::parse(in));
  }

  const std::vector<SroEntry>& entries() const noexcept { return entries_; }

  bool contains(std::string_view src, std::string_view rel, std::string_view tgt) const {
    for (const auto& e : entries_)
      if (e.source == src && e.rel == rel && e.target == tgt) return true;
    return false;
  }

  std::vector<const SroEntry*> between(std::string_view src, std::string_view tgt) const {
    std::vector<const SroEntry*> out;
    for (const auto& e : entries_)
      if (e.source == src && e.target == tgt) out.push_back(&e);
    return out;
  }

 private:
  std::vector<SroEntry> entries_;
};

/// Verb hierarchy used for Wu-Palmer similarity.
class Taxonomy {
 public:
  struct Synset {
    std::string id;
    std::optional<std::size_t> parent;
    std::size_t depth = 1;
    std::vector<std::string> lemmas;
  };

  static Taxonomy from_json(const nlohmann::json& j) {
    Taxonomy t;
    std::unordered_map<std::string, std::size_t> index;
    const auto& arr = j.at("synsets");
    for (const auto& s : arr) {
      Synset syn;
      syn.id = s.at("id").get<std::string>();
      syn.lemmas = s.at("lemmas").get<std::vector<std::string>>();
      if (!index.emplace(syn.id, t.synsets_.size()).second) throw Error("duplicate synset " + syn.id);
      t.synsets_.push_back(std::move(syn));
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto& p = arr[i].at("parent");
      if (p.is_null()) continue;
      auto it = index.find(p.get<std::string>());
      if (it == index.end()) throw Error("synset " + t.synsets_[i].id + " has unknown parent");
      t.synsets_[i].parent = it->second;
    }
    for (std::size_t i = 0; i < t.synsets_.size(); ++i) {
      std::size_t d = 1;
      for (auto p = t.synsets_[i].parent; p; p = t.synsets_[*p].parent)
        if (++d > t.synsets_.size()) throw Error("cycle in taxonomy at " + t.synsets_[i].id);
      t.synsets_[i].depth = d;
      for (const auto& l : t.synsets_[i].lemmas) t.lemma_index_[text::lower(l)].push_back(i);
    }
    return t;
  }

  static Taxonomy load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open taxonomy " + path.string());
    return from_json(nlohmann::json::parse(in));
  }

  const std::vector<Synset>& synsets() const noexcept { return synsets_; }

  const std::vector<std::size_t>* synsets_of(std::string_view lemma) const {
    auto it = lemma_index_.find(text::lower(lemma));
    return it == lemma_index_.end() ? nullptr : &it->second;
  }

  const std::unordered_map<std::string, std::vector<std::size_t>>& lemma_index() const noexcept {
    return lemma_index_;
  }

  /// Depth of the deepest common ancestor, 0 when in different trees.
  std::size_t lcs_depth(std::size_t a, std::size_t b) const {
    std::set<std::size_t> anc;
    for (std::optional<std::size_t> p = a; p; p = synsets_[*p].parent) anc.insert(*p);
    for (std::optional<std::size_t> p = b; p; p = synsets_[*p].parent)
      if (anc.count(*p)) return synsets_[*p].depth;
    return 0;
  }

  /// max over synset pairs of 2*depth(LCS)/(depth(a)+depth(b)); 0 for
  /// lemmas outside the taxonomy.
  double wup(std::string_view a, std::string_view b) const {
    const auto* sa = synsets_of(a);
    const auto* sb = synsets_of(b);
    if (!sa || !sb) return 0.0;
    double best = 0.0;
    for (auto x : *sa)
      for (auto y : *sb) {
        const double v = x == y ? 1.0
                                : 2.0 * static_cast<double>(lcs_depth(x, y)) /
                                      static_cast<double>(synsets_[x].depth + synsets_[y].depth);
        best = std::max(best, v);
      }
    return best;
  }

 private:
  std::vector<Synset> synsets_;
  std::unordered_map<std::string, std::vector<std::size_t>> lemma_index_;
};

inline double wup_similarity(std::string_view a, std::string_view b, const Taxonomy& tax) { return tax.wup(a, b); }

enum class RelationMethod { Rule, Embedding };

inline std::string_view to_string(RelationMethod m) { return m == RelationMethod::Rule ? "rule" : "embedding"; }

struct RelationCandidate {
  EntityMention source;
  EntityMention target;
  std::string relationship_type;
  double confidence = 0.0;
  RelationMethod method = RelationMethod::Rule;

  friend bool operator==(const RelationCandidate&, const RelationCandidate&) = default;
};

/// Token indices of the shortest undirected path a..b (endpoints included);
/// among equal-length paths the lexicographically smallest index sequence.
inline std::vector<std::size_t> shortest_dependency_path(const DependencyGraph& g, std::size_t a, std::size_t b) {
  const std::size_t n = g.nodes.size();
  if (a >= n || b >= n) throw Error("SDP endpoint out of range");
  if (a == b) return {a};
  const auto adj = g.adjacency();
  constexpr std::size_t kInf = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist(n, kInf);
  std::deque<std::size_t> q{b};
  dist[b] = 0;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    for (auto v : adj[u])
      if (dist[v] == kInf) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  if (dist[a] == kInf) throw Error("dependency graph is disconnected between tokens " + std::to_string(a) + " and " +
                                   std::to_string(b));
  std::vector<std::size_t> path{a};
  for (std::size_t u = a; u != b;) {
    for (auto v : adj[u])  // ascending: first hit is the smallest index
      if (dist[v] == dist[u] - 1) {
        u = v;
        break;
      }
    path.push_back(u);
  }
  return path;
}

/// Path between the governing tokens of two span-bearing mentions.
inline std::vector<Token> shortest_dependency_path(const DependencyGraph& g, const EntityMention& a,
                                                   const EntityMention& b) {
  if (!a.span || !b.span) throw Error("SDP requires span-bearing mentions");
  const auto ta = mention_head_token(g, *a.span), tb = mention_head_token(g, *b.span);
  if (ta == static_cast<std::size_t>(-1) || tb == static_cast<std::size_t>(-1))
    throw Error("mention is not inside this sentence");
  std::vector<Token> out;
  for (auto i : shortest_dependency_path(g, ta, tb)) out.push_back(g.nodes[i]);
  return out;
}

namespace detail {

struct Oriented {
  const SroEntry* entry;
  bool reversed;  // true: b is the source
};

/// Catalog entries admissible for a mention pair, in textual order a < b.
/// If both orientations exist, only the textual order is used.
inline std::vector<Oriented> admissible(const SroCatalog& cat, const EntityMention& a, const EntityMention& b) {
  std::vector<Oriented> fwd, rev;
  for (const auto* e : cat.between(a.stix_type, b.stix_type)) fwd.push_back({e, false});
  if (a.stix_type != b.stix_type)
    for (const auto* e : cat.between(b.stix_type, a.stix_type)) rev.push_back({e, true});
  return fwd.empty() ? rev : fwd;
}

inline RelationCandidate make_candidate(const EntityMention& a, const EntityMention& b, const Oriented& o, double conf,
                                        RelationMethod m) {
  RelationCandidate c;
  c.source = o.reversed ? b : a;
  c.target = o.reversed ? a : b;
  c.relationship_type = o.entry->rel;
  c.confidence = conf;
  c.method = m;
  return c;
}

/// Span-bearing mentions sorted by position.
inline std::vector<const EntityMention*> positioned(const std::vector<EntityMention>& ms) {
  std::vector<const EntityMention*> out;
  for (const auto& m : ms)
    if (m.span) out.push_back(&m);
  std::sort(out.begin(), out.end(), [](const auto* x, const auto* y) { return *x->span < *y->span; });
  return out;
}

}  // namespace detail

/// SDP verbs compared against the catalog verb of every type-compatible
/// entry: exact lemma = 1.0, else best Wu-Palmer score. Inclusive threshold.
inline std::vector<RelationCandidate> rule_based_extract(const DependencyGraph& g,
                                                         const std::vector<EntityMention>& mentions,
                                                         const SroCatalog& cat, const Taxonomy& tax,
                                                         double threshold = 0.5,
                                                         std::vector<std::string>* log = nullptr) {
  std::vector<RelationCandidate> out;
  const auto ms = detail::positioned(mentions);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    for (std::size_t j = i + 1; j < ms.size(); ++j) {
      const auto& a = *ms[i];
      const auto& b = *ms[j];
      const auto entries = detail::admissible(cat, a, b);
      if (entries.empty()) continue;
      const auto ta = mention_head_token(g, *a.span), tb = mention_head_token(g, *b.span);
      if (ta == static_cast<std::size_t>(-1) || tb == static_cast<std::size_t>(-1)) continue;
      std::vector<std::string> verbs;
      for (auto k : shortest_dependency_path(g, ta, tb))
        if (g.nodes[k].pos == Pos::VERB) verbs.push_back(g.nodes[k].lemma);
      if (verbs.empty()) continue;
      std::optional<detail::Oriented> best;
      double best_conf = -1.0;
      for (const auto& o : entries) {
        double conf = 0.0;
        for (const auto& v : verbs) conf = std::max(conf, text::lower(v) == o.entry->verb ? 1.0 : tax.wup(v, o.entry->verb));
        if (!best || conf > best_conf) {
          best = o;
          best_conf = conf;
        } else if (conf == best_conf) {
          if (log)
            log->push_back("tie at " + std::to_string(conf) + " between " + best->entry->rel + " and " + o.entry->rel +
                           " for (" + a.surface + ", " + b.surface + ")");
          if (o.entry->rel < best->entry->rel) best = o;
        }
      }
      if (best && best_conf >= threshold)
        out.push_back(detail::make_candidate(a, b, *best, best_conf, RelationMethod::Rule));
    }
  }
  return out;
}

/// Deterministic sentence embedder: character 3-5-grams of the lowercased
/// string padded with '<' and '>', FNV-1a hashed into 512 buckets, term
/// frequency weighted and L2-normalized. An optional table of exact-string
/// vectors takes precedence.
class Embedder {
 public:
  static constexpr std::size_t kDim = 512;

  Embedder() = default;

  static Embedder with_table(const std::filesystem::path& tsv) {
    Embedder e;
    std::ifstream in(tsv);
    if (!in) throw Error("cannot open embeddings table " + tsv.string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw Error(tsv.string() + ":" + std::to_string(n) + ": expected key<TAB>floats");
      std::istringstream ss(line.substr(tab + 1));
      std::vector<double> v;
      double x;
      while (ss >> x) v.push_back(x);
      if (v.empty()) throw Error(tsv.string() + ":" + std::to_string(n) + ": empty vector");
      e.table_[line.substr(0, tab)] = normalized(std::move(v));
    }
    return e;
  }

  static uint64_t fnv1a(std::string_view s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  std::vector<double> embed(std::string_view s) const {
    if (auto it = table_.find(std::string(s)); it != table_.end()) return it->second;
    std::vector<double> v(kDim, 0.0);
    if (s.empty()) return v;
    const std::string padded = "<" + text::lower(s) + ">";
    for (std::size_t n = 3; n <= 5; ++n)
      for (std::size_t i = 0; i + n <= padded.size(); ++i) v[fnv1a(std::string_view(padded).substr(i, n)) % kDim] += 1.0;
    return normalized(std::move(v));
  }

  /// Cosine of two embeddings; vectors of different dimension are treated
  /// as orthogonal.
  static double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  }

  std::size_t table_size() const noexcept { return table_.size(); }

 private:
  static std::vector<double> normalized(std::vector<double> v) {
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n > 0)
      for (auto& x : v) x /= n;
    return v;
  }

  std::unordered_map<std::string, std::vector<double>> table_;
};

inline std::vector<double> embed(std::string_view s, const Embedder& e = Embedder{}) { return e.embed(s); }

/// Sentence with the two mentions replaced by their STIX type names.
inline std::string type_template(std::string_view sentence, std::size_t base, const EntityMention& a,
                                 const EntityMention& b) {
  const EntityMention* first = &a;
  const EntityMention* second = &b;
  if (second->span->start < first->span->start) std::swap(first, second);
  auto rel = [&](std::size_t x) { return std::min(x - std::min(x, base), sentence.size()); };
  std::string out;
  out += sentence.substr(0, rel(first->span->start));
  out += first->stix_type;
  out += sentence.substr(rel(first->span->end), rel(second->span->start) - rel(first->span->end));
  out += second->stix_type;
  out += sentence.substr(rel(second->span->end));
  return out;
}

/// Cosine between the type-substituted sentence and "<src> <rel> <tgt>" for
/// each type-compatible entry, mapped to [0,1] via (cos+1)/2.
inline std::vector<RelationCandidate> embedding_extract(std::string_view sentence, std::size_t base,
                                                        const std::vector<EntityMention>& mentions,
                                                        const SroCatalog& cat, const Embedder& embedder,
                                                        double threshold = 0.5) {
  std::vector<RelationCandidate> out;
  const auto ms = detail::positioned(mentions);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    for (std::size_t j = i + 1; j < ms.size(); ++j) {
      const auto& a = *ms[i];
      const auto& b = *ms[j];
      if (a.span->overlaps(*b.span)) continue;
      const auto entries = detail::admissible(cat, a, b);
      if (entries.empty()) continue;
      const auto sv = embedder.embed(type_template(sentence, base, a, b));
      std::optional<detail::Oriented> best;
      double best_conf = -1.0;
      for (const auto& o : entries) {
        const auto ev = embedder.embed(o.entry->source + " " + o.entry->rel + " " + o.entry->target);
        const double conf = (Embedder::cosine(sv, ev) + 1.0) / 2.0;
        if (conf > best_conf || (conf == best_conf && o.entry->rel < best->entry->rel)) {
          best = o;
          best_conf = conf;
        }
      }
      if (best && best_conf >= threshold)
        out.push_back(detail::make_candidate(a, b, *best, best_conf, RelationMethod::Embedding));
    }
  }
  return out;
}

/// One relation per mention pair: maximum confidence, ties to the rule
/// method and then to the smaller relationship_type; inclusive threshold.
inline std::vector<RelationCandidate> merge_relations(const std::vector<RelationCandidate>& rule_cands,
                                                      const std::vector<RelationCandidate>& emb_cands,
                                                      double threshold = 0.5) {
  using Key = std::pair<Span, Span>;
  std::map<Key, RelationCandidate> best;
  auto key_of = [](const RelationCandidate& c) {
    Span s = c.source.span.value_or(Span{}), t = c.target.span.value_or(Span{});
    return s < t ? Key{s, t} : Key{t, s};
  };
  auto better = [](const RelationCandidate& x, const RelationCandidate& y) {
    if (x.confidence != y.confidence) return x.confidence > y.confidence;
    if (x.method != y.method) return x.method == RelationMethod::Rule;
    return x.relationship_type < y.relationship_type;
  };
  for (const auto* list : {&rule_cands, &emb_cands}) {
    for (const auto& c : *list) {
      if (!c.source.span || !c.target.span || c.confidence < threshold) continue;
      const Key k = key_of(c);
      auto it = best.find(k);
      if (it == best.end())
        best.emplace(k, c);
      else if (better(c, it->second))
        it->second = c;
    }
  }
  std::vector<RelationCandidate> out;
  out.reserve(best.size());
  for (auto& [k, c] : best) out.push_back(std::move(c));
  return out;
}

}  // namespace stixnet
