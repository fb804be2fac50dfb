#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "stixnet/errors.hpp"
#include "stixnet/knowledge_base.hpp"
#include "stixnet/linguistic_analyzer.hpp"
#include "stixnet/text_normalizer.hpp"
#include "stixnet/types.hpp"

namespace stixnet {

enum class Frame { PassiveTrigger, TypeNounAppos, NamingVerb };

inline std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::PassiveTrigger: return "passive_trigger";
    case Frame::TypeNounAppos: return "type_noun_appos";
    case Frame::NamingVerb: return "naming_verb";
  }
  return "unknown";
}

inline Frame frame_from_string(std::string_view s) {
  if (s == "passive_trigger") return Frame::PassiveTrigger;
  if (s == "type_noun_appos") return Frame::TypeNounAppos;
  if (s == "naming_verb") return Frame::NamingVerb;
  throw ConfigError("unknown novel-entity frame '" + std::string(s) + "'");
}

struct PatternRule {
  std::string id;
  Frame frame = Frame::TypeNounAppos;
  std::set<std::string> trigger_lemmas;
};

struct NovelRules {
  std::vector<PatternRule> rules;
  std::map<std::string, std::string> type_nouns;
  double confidence = 0.8;
  std::size_t max_name_tokens = 4;
  // How far back a passive trigger looks for its type noun.
  std::size_t context_window = 6;

  static NovelRules from_json(const nlohmann::json& j) {
    NovelRules r;
    r.confidence = j.value("confidence", 0.8);
    r.max_name_tokens = j.value("max_name_tokens", std::size_t{4});
    r.context_window = j.value("context_window", std::size_t{6});
    for (const auto& e : j.at("rules")) {
      PatternRule p;
      p.id = e.at("id").get<std::string>();
      p.frame = frame_from_string(e.at("frame").get<std::string>());
      for (const auto& t : e.value("trigger_lemmas", nlohmann::json::array())) {
        auto s = t.get<std::string>();
        if (s != text::lower(s)) throw ConfigError("trigger lemma '" + s + "' is not lowercase");
        p.trigger_lemmas.insert(std::move(s));
      }
      r.rules.push_back(std::move(p));
    }
    for (const auto& [noun, type] : j.at("type_nouns").items()) {
      const auto t = type.get<std::string>();
      if (!is_sdo_type(t)) throw ConfigError("type noun '" + noun + "' maps to non-SDO type '" + t + "'");
      r.type_nouns[text::lower(noun)] = t;
    }
    return r;
  }

  static NovelRules load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open novel rules " + path.string());
    return from_json(nlohmann::json::parse(in));
  }

  /// STIX type for a token acting as a type noun, if any.
  std::optional<std::string> type_of(const Token& t) const {
    if (t.pos != Pos::NOUN && t.pos != Pos::PROPN) return std::nullopt;
    for (const auto& key : {text::lower(t.lemma), text::lower(t.text)})
      if (auto it = type_nouns.find(key); it != type_nouns.end()) return it->second;
    return std::nullopt;
  }
};

struct NovelResult {
  std::vector<EntityMention> mentions;
  std::vector<CandidateEntity> candidates;  // ids unassigned; one per folded surface
};

namespace detail {

struct Capture {
  std::size_t first;  // token range [first, last)
  std::size_t last;
  std::string type;
  std::string trigger;
};

inline bool name_token(const Token& t) {
  if (t.pos == Pos::PROPN) return true;
  return t.pos == Pos::X && std::any_of(t.text.begin(), t.text.end(), text::is_upper);
}

inline bool inflected(const Token& t) { return text::lower(t.text) != t.lemma; }

inline bool is_as(const Token& t) { return text::lower(t.text) == "as"; }

}  // namespace detail

/// Applies every rule frame to one sentence graph. Captures are unfiltered.
inline std::vector<detail::Capture> match_frames(const DependencyGraph& g, const NovelRules& rules) {
  using detail::Capture;
  const auto& n = g.nodes;
  std::vector<Capture> out;

  auto name_run = [&](std::size_t i) {
    std::size_t j = i;
    while (j < n.size() && j - i < rules.max_name_tokens && detail::name_token(n[j]) && !rules.type_of(n[j])) ++j;
    return j;
  };

  for (const auto& rule : rules.rules) {
    for (std::size_t k = 0; k < n.size(); ++k) {
      const Token& t = n[k];
      switch (rule.frame) {
        case Frame::PassiveTrigger: {
          // "<type-noun> ... dubbed|known as N"
          if ((t.pos != Pos::VERB && t.pos != Pos::ADJ) || !rule.trigger_lemmas.count(t.lemma) || !detail::inflected(t))
            break;
          std::size_t i = k + 1;
          if (i < n.size() && detail::is_as(n[i])) ++i;
          const std::size_t j = name_run(i);
          if (j == i) break;
          std::optional<std::string> type;
          if (auto h = g.head_of(k)) type = rules.type_of(n[*h]);
          for (std::size_t b = k; !type && b > 0 && k - b < rules.context_window; --b) type = rules.type_of(n[b - 1]);
          if (type) out.push_back({i, j, *type, rule.id + ":" + text::lower(t.text)});
          break;
        }
        case Frame::NamingVerb: {
          // "researchers named the ransomware N", "tracks this actor as N"
          if (t.pos != Pos::VERB || !rule.trigger_lemmas.count(t.lemma)) break;
          std::size_t i = k + 1;
          std::optional<std::string> type;
          while (i < n.size() && i - k <= 4) {
            const Pos p = n[i].pos;
            if (p == Pos::DET || p == Pos::PRON || p == Pos::ADJ || p == Pos::NUM) {
              ++i;
            } else if (auto ty = rules.type_of(n[i])) {
              type = ty;
              ++i;
            } else {
              break;
            }
          }
          if (i == k + 1 || !type) break;
          if (i < n.size() && detail::is_as(n[i])) ++i;
          const std::size_t j = name_run(i);
          if (j > i) out.push_back({i, j, *type, rule.id + ":" + text::lower(t.text)});
          break;
        }
        case Frame::TypeNounAppos: {
          // "the malware N"
          if (t.pos != Pos::NOUN) break;
          auto type = rules.type_of(t);
          if (!type) break;
          const std::size_t j = name_run(k + 1);
          if (j > k + 1) out.push_back({k + 1, j, *type, rule.id + ":" + text::lower(t.text)});
          break;
        }
      }
    }
  }
  return out;
}

/// Proposes entities missing from the knowledge base. `existing` holds the
/// mentions already found by other sub-modules (kb, ioc).
inline NovelResult extract_novel(const NormalizedText& nt, const std::vector<DependencyGraph>& graphs,
                                 const std::vector<EntityMention>& existing, const KbSnapshot& snap,
                                 const NovelRules& rules, const std::string& report_id = "") {
  NovelResult res;
  std::set<Span> taken;
  std::set<std::string> proposed;
  for (const auto& g : graphs) {
    for (const auto& c : match_frames(g, rules)) {
      const Span span{g.nodes[c.first].span.start, g.nodes[c.last - 1].span.end};
      if (taken.count(span)) continue;
      const bool overlaps = std::any_of(existing.begin(), existing.end(),
                                        [&](const EntityMention& m) { return m.span && m.span->overlaps(span); }) ||
                            std::any_of(res.mentions.begin(), res.mentions.end(),
                                        [&](const EntityMention& m) { return m.span->overlaps(span); });
      if (overlaps) continue;
      const std::string surface(nt.slice(span));
      if (snap.resolve(surface) || snap.stoplisted(surface)) continue;
      taken.insert(span);

      EntityMention m;
      m.surface = surface;
      m.canonical = surface;
      m.span = span;
      m.stix_type = c.type;
      m.confidence = rules.confidence;
      m.provenance = Provenance::Novel;
      res.mentions.push_back(m);

      if (proposed.insert(text::lower(surface)).second) {
        CandidateEntity cand;
        cand.surface = surface;
        cand.proposed_type = c.type;
        cand.report_id = report_id;
        cand.span = span;
        cand.trigger = c.trigger;
        res.candidates.push_back(std::move(cand));
      }
    }
  }
  std::sort(res.mentions.begin(), res.mentions.end(),
            [](const EntityMention& a, const EntityMention& b) { return a.span->start < b.span->start; });
  return res;
}

}  // namespace stixnet
