#pragma once

// Gazetteer matching of KB names/aliases and the POS false-positive filter.

#include <string>
#include <string_view>
#include <vector>

#include "stixnet/ioc_finder.hpp"
#include "stixnet/knowledge_base.hpp"
#include "stixnet/linguistic_analyzer.hpp"

namespace stixnet {

/// True when [start, end) is flanked by non-word characters.
inline bool on_word_boundary(std::string_view text, std::size_t start, std::size_t end) {
  if (start > 0 && text::is_word_char(text[start - 1])) return false;
  if (end < text.size() && text::is_word_char(text[end])) return false;
  return true;
}

/// Case-insensitive scan for every KB surface form; overlaps resolved
/// longest-first, then leftmost. Confidence is 1.0 before POS filtering.
inline std::vector<EntityMention> match_entities(std::string_view text, const KbSnapshot& snap) {
  const std::string folded = text::lower(text);
  struct Hit {
    Span span;
    std::size_t pattern;
  };
  std::vector<Hit> hits;
  snap.automaton.scan(folded, [&](const AhoCorasick::Hit& h) {
    if (on_word_boundary(folded, h.start, h.end)) hits.push_back({{h.start, h.end}, h.pattern});
  });
  auto kept = select_non_overlapping(
      std::move(hits), [](const Hit& h) { return h.span; }, [](const Hit& h) { return h.pattern; });
  std::vector<EntityMention> out;
  out.reserve(kept.size());
  for (const auto& h : kept) {
    const auto& target = snap.alias_index.at(snap.automaton.patterns()[h.pattern]);
    const auto& entity = snap.entities[target.entity];
    EntityMention m;
    m.surface = std::string(text.substr(h.span.start, h.span.length()));
    m.span = h.span;
    m.stix_type = entity.stix_type;
    m.kb_id = entity.id;
    m.confidence = 1.0;
    m.provenance = Provenance::Kb;
    m.canonical = entity.name;
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<EntityMention> match_entities(const NormalizedText& nt, const KbSnapshot& snap) {
  return match_entities(nt.text, snap);
}

/// Index of the token that governs a mention: the covered token whose head
/// lies outside the mention, else the last covered token. npos if none.
inline std::size_t mention_head_token(const DependencyGraph& g, const Span& span) {
  std::vector<std::size_t> covered;
  for (const auto& t : g.nodes)
    if (t.span.overlaps(span)) covered.push_back(t.index);
  if (covered.empty()) return static_cast<std::size_t>(-1);
  if (g.edges.empty()) return covered.back();
  for (std::size_t idx : covered) {
    const auto h = g.head_of(idx);
    if (!h || !g.nodes[*h].span.overlaps(span)) return idx;
  }
  return covered.back();
}

/// Graph holding the sentence that contains `span`, or nullptr.
inline const DependencyGraph* graph_for(const std::vector<DependencyGraph>& graphs, const Span& span) {
  for (const auto& g : graphs) {
    if (g.nodes.empty()) continue;
    const Span s{g.nodes.front().span.start, g.nodes.back().span.end};
    if (s.overlaps(span)) return &g;
  }
  return nullptr;
}

/// Drops KB mentions whose governing token's tag is not allowed for the
/// entity. Empty allowed_pos disables the filter for that entity.
inline std::vector<EntityMention> pos_filter(std::vector<EntityMention> mentions,
                                             const std::vector<DependencyGraph>& graphs, const KbSnapshot& snap) {
  std::vector<EntityMention> out;
  out.reserve(mentions.size());
  for (auto& m : mentions) {
    if (m.provenance != Provenance::Kb || !m.kb_id || !m.span) {
      out.push_back(std::move(m));
      continue;
    }
    const KbEntity* e = snap.find(*m.kb_id);
    if (!e || e->allowed_pos.empty()) {
      out.push_back(std::move(m));
      continue;
    }
    const DependencyGraph* g = graph_for(graphs, *m.span);
    const std::size_t t = g ? mention_head_token(*g, *m.span) : static_cast<std::size_t>(-1);
    if (t == static_cast<std::size_t>(-1)) {
      out.push_back(std::move(m));
      continue;
    }
    const std::string_view tag = to_string(g->nodes[t].pos);
    if (std::find(e->allowed_pos.begin(), e->allowed_pos.end(), tag) != e->allowed_pos.end()) out.push_back(std::move(m));
  }
  return out;
}

}  // namespace stixnet
