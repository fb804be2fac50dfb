#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "stixnet/errors.hpp"
#include "stixnet/ids.hpp"
#include "stixnet/ioc_finder.hpp"
#include "stixnet/kb_matcher.hpp"
#include "stixnet/knowledge_base.hpp"
#include "stixnet/linguistic_analyzer.hpp"
#include "stixnet/novel_extractor.hpp"
#include "stixnet/relation_extractor.hpp"
#include "stixnet/text_normalizer.hpp"
#include "stixnet/ttp_classifier.hpp"
#include "stixnet/types.hpp"

namespace stixnet {

struct PipelineConfig {
  bool ioc = true;
  bool kb = true;
  bool novel = true;
  bool ttp = false;
  bool relations = true;
  double relation_threshold = 0.5;
  bool rule_method = true;
  bool embedding_method = false;
  double ttp_threshold = 0.5;

  /// Applies the keys present in `j` on top of this config.
  PipelineConfig with_overrides(const nlohmann::json& j) const {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    PipelineConfig c = *this;
    auto flag = [](const nlohmann::json& v, const std::string& key) {
      if (!v.is_boolean()) throw ConfigError("'" + key + "' must be a boolean");
      return v.get<bool>();
    };
    auto unit = [](const nlohmann::json& v, const std::string& key) {
      if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
      const double x = v.get<double>();
      if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("'" + key + "' must lie in [0,1]");
      return x;
    };
    for (const auto& [key, v] : j.items()) {
      if (key == "modules") {
        if (!v.is_object()) throw ConfigError("'modules' must be an object");
        for (const auto& [m, on] : v.items()) {
          if (m == "ioc") c.ioc = flag(on, m);
          else if (m == "kb") c.kb = flag(on, m);
          else if (m == "novel") c.novel = flag(on, m);
          else if (m == "ttp") c.ttp = flag(on, m);
          else if (m == "relations") c.relations = flag(on, m);
          else throw ConfigError("unknown module '" + m + "'");
        }
      } else if (key == "relation_methods") {
        if (!v.is_object()) throw ConfigError("'relation_methods' must be an object");
        for (const auto& [m, on] : v.items()) {
          if (m == "rule") c.rule_method = flag(on, m);
          else if (m == "embedding") c.embedding_method = flag(on, m);
          else throw ConfigError("unknown relation method '" + m + "'");
        }
      } else if (key == "relation_threshold") {
        c.relation_threshold = unit(v, key);
      } else if (key == "ttp_threshold") {
        c.ttp_threshold = unit(v, key);
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
    return c;
  }

  static PipelineConfig from_json(const nlohmann::json& j) { return PipelineConfig{}.with_overrides(j); }

  static PipelineConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("bad config " + path.string() + ": " + e.what());
    }
  }

  nlohmann::json to_json() const {
    return {{"modules", {{"ioc", ioc}, {"kb", kb}, {"novel", novel}, {"ttp", ttp}, {"relations", relations}}},
            {"relation_threshold", relation_threshold},
            {"relation_methods", {{"rule", rule_method}, {"embedding", embedding_method}}},
            {"ttp_threshold", ttp_threshold}};
  }

  bool any_entity_module() const { return ioc || kb || novel || ttp; }
};

/// Immutable data shared by every run.
struct Resources {
  IocRuleSet ioc_rules;
  Lexicon lexicon;
  NovelRules novel_rules;
  SroCatalog catalog;
  Taxonomy taxonomy;
  Embedder embedder;
  std::optional<TfidfModel> ttp_model;

  /// Loads the bundled data directory. The TTP model comes from
  /// `ttp_model` if given, else `<dir>/ttp_model.json`, else it is trained
  /// from `<dir>/ttp_corpus.jsonl` when that exists.
  static std::shared_ptr<const Resources> load(const std::filesystem::path& dir,
                                               const std::optional<std::filesystem::path>& ttp_model = std::nullopt) {
    auto r = std::make_shared<Resources>();
    r->ioc_rules = IocRuleSet::load((dir / "ioc_rules.json").string());
    r->lexicon = Lexicon::load_dir(dir);
    r->novel_rules = NovelRules::load(dir / "novel_rules.json");
    r->catalog = SroCatalog::load(dir / "sro_catalog.json");
    r->taxonomy = Taxonomy::load(dir / "taxonomy.json");
    if (std::filesystem::exists(dir / "embeddings.tsv")) r->embedder = Embedder::with_table(dir / "embeddings.tsv");
    if (ttp_model) {
      r->ttp_model = TfidfModel::load(*ttp_model);
    } else if (std::filesystem::exists(dir / "ttp_model.json")) {
      r->ttp_model = TfidfModel::load(dir / "ttp_model.json");
    } else if (std::filesystem::exists(dir / "ttp_corpus.jsonl") && std::filesystem::exists(dir / "ttp_labels.json")) {
      r->ttp_model = train_ttp(load_ttp_corpus(dir / "ttp_corpus.jsonl"), LabelSpace::load(dir / "ttp_labels.json"));
    }
    return r;
  }
};

struct ExtractionResult {
  std::string report_id;
  NormalizedText normalized;
  std::vector<EntityMention> mentions;
  std::vector<RelationCandidate> relations;
  std::vector<CandidateEntity> candidates;
  uint64_t kb_version = 0;
  std::map<std::string, double> timings_ms;
};

inline int provenance_rank(Provenance p) {
  switch (p) {
    case Provenance::Ioc: return 0;
    case Provenance::Kb: return 1;
    case Provenance::Novel: return 2;
    case Provenance::Ttp: return 3;
  }
  return 4;
}

/// Removes overlapping span-bearing mentions: longer span, then
/// ioc > kb > novel, then higher confidence, then earlier start.
/// Span-less mentions pass through, after the positioned ones.
inline std::vector<EntityMention> resolve_overlaps(std::vector<EntityMention> mentions) {
  std::vector<EntityMention> positioned, floating;
  for (auto& m : mentions) (m.span ? positioned : floating).push_back(std::move(m));
  std::stable_sort(positioned.begin(), positioned.end(), [](const EntityMention& a, const EntityMention& b) {
    if (a.span->length() != b.span->length()) return a.span->length() > b.span->length();
    if (provenance_rank(a.provenance) != provenance_rank(b.provenance))
      return provenance_rank(a.provenance) < provenance_rank(b.provenance);
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.span->start < b.span->start;
  });
  std::vector<EntityMention> kept;
  std::map<std::size_t, std::size_t> taken;
  for (auto& m : positioned) {
    const Span s = *m.span;
    auto next = taken.lower_bound(s.start);
    if (next != taken.end() && next->first < s.end) continue;
    if (next != taken.begin() && std::prev(next)->second > s.start) continue;
    if (s.empty() && next != taken.end() && next->first == s.start) continue;
    taken.emplace(s.start, s.end);
    kept.push_back(std::move(m));
  }
  std::stable_sort(kept.begin(), kept.end(), [](const EntityMention& a, const EntityMention& b) {
    return a.span->start < b.span->start;
  });
  for (auto& m : floating) kept.push_back(std::move(m));
  return kept;
}

/// Novel mentions whose surface resolves in the snapshot become kb mentions.
inline std::vector<EntityMention> cross_check(std::vector<EntityMention> mentions, const KbSnapshot& snap) {
  for (auto& m : mentions) {
    if (m.provenance != Provenance::Novel) continue;
    if (const AliasTarget* t = snap.resolve(m.surface)) {
      m.provenance = Provenance::Kb;
      m.stix_type = t->stix_type;
      m.kb_id = t->id;
      m.canonical = snap.entities[t->entity].name;
      m.confidence = 1.0;
    }
  }
  return mentions;
}

namespace detail {

template <typename F>
auto timed(std::map<std::string, double>& timings, const std::string& module, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&] {
    timings[module] += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    auto r = f();
    finish();
    return r;
  } catch (const ModuleError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModuleError(module, e.what());
  }
}

}  // namespace detail

inline ExtractionResult run_pipeline(const RawDocument& doc, const KbSnapshot& snap, const Resources& res,
                                     const PipelineConfig& cfg = {}) {
  ExtractionResult out;
  out.report_id = doc.id;
  out.kb_version = snap.version;
  auto& tm = out.timings_ms;

  out.normalized = detail::timed(tm, "normalize", [&] { return prepare(doc); });
  const NormalizedText& nt = out.normalized;

  const bool need_graphs = cfg.kb || cfg.novel || (cfg.relations && cfg.any_entity_module());
  std::vector<DependencyGraph> graphs;
  if (need_graphs) graphs = detail::timed(tm, "linguistic", [&] { return analyze(nt, res.lexicon); });

  // Each entity module reads the same normalized text; only the novel
  // module consults earlier mentions to avoid re-proposing them.
  std::vector<EntityMention> iocs, kbs, ttps;
  NovelResult novel;
  if (cfg.ioc)
    iocs = detail::timed(tm, "ioc", [&] {
      std::vector<EntityMention> ms;
      for (const auto& m : find_iocs(nt, res.ioc_rules)) ms.push_back(to_mention(m));
      return ms;
    });
  if (cfg.kb) kbs = detail::timed(tm, "kb", [&] { return pos_filter(match_entities(nt, snap), graphs, snap); });
  if (cfg.novel)
    novel = detail::timed(tm, "novel", [&] {
      std::vector<EntityMention> prior = iocs;
      prior.insert(prior.end(), kbs.begin(), kbs.end());
      return extract_novel(nt, graphs, prior, snap, res.novel_rules, doc.id);
    });
  if (cfg.ttp)
    ttps = detail::timed(tm, "ttp", [&] {
      if (!res.ttp_model) throw Error("no TTP model loaded");
      return res.ttp_model->to_mentions(res.ttp_model->predict(nt.text, cfg.ttp_threshold));
    });

  std::vector<EntityMention> all;
  for (auto* part : {&iocs, &kbs, &novel.mentions, &ttps}) all.insert(all.end(), part->begin(), part->end());
  out.mentions = cross_check(resolve_overlaps(std::move(all)), snap);

  std::set<std::string> surviving_novel;
  for (const auto& m : out.mentions)
    if (m.provenance == Provenance::Novel) surviving_novel.insert(text::lower(m.surface));
  for (const auto& c : novel.candidates)
    if (surviving_novel.count(text::lower(c.surface))) out.candidates.push_back(c);

  if (cfg.relations && (cfg.rule_method || cfg.embedding_method)) {
    out.relations = detail::timed(tm, "relations", [&] {
      std::vector<RelationCandidate> rule, emb;
      for (const auto& g : graphs) {
        if (g.sentence_index >= nt.sentences.size()) continue;
        const Span sent = nt.sentences[g.sentence_index];
        std::vector<EntityMention> in_sentence;
        for (const auto& m : out.mentions)
          if (m.span && sent.contains(*m.span)) in_sentence.push_back(m);
        if (in_sentence.size() < 2) continue;
        if (cfg.rule_method) {
          auto r = rule_based_extract(g, in_sentence, res.catalog, res.taxonomy, cfg.relation_threshold);
          rule.insert(rule.end(), r.begin(), r.end());
        }
        if (cfg.embedding_method) {
          auto e = embedding_extract(nt.slice(sent), sent.start, in_sentence, res.catalog, res.embedder,
                                     cfg.relation_threshold);
          emb.insert(emb.end(), e.begin(), e.end());
        }
      }
      return merge_relations(rule, emb, cfg.relation_threshold);
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON views

inline nlohmann::json mention_to_json(const EntityMention& m, const NormalizedText* nt = nullptr) {
  nlohmann::json j{{"surface", m.surface},
                   {"name", m.name()},
                   {"stix_type", m.stix_type},
                   {"confidence", m.confidence},
                   {"provenance", std::string(to_string(m.provenance))},
                   {"kb_id", m.kb_id ? nlohmann::json(*m.kb_id) : nlohmann::json(nullptr)}};
  if (m.span) {
    j["span"] = {m.span->start, m.span->end};
    if (nt) {
      const Span raw = nt->raw_span(*m.span);
      j["raw_span"] = {raw.start, raw.end};
    }
  } else {
    j["span"] = nullptr;
  }
  return j;
}

inline nlohmann::json result_to_json(const ExtractionResult& r) {
  auto index_of = [&](const EntityMention& m) -> nlohmann::json {
    for (std::size_t i = 0; i < r.mentions.size(); ++i)
      if (r.mentions[i].span == m.span && r.mentions[i].stix_type == m.stix_type) return i;
    return nullptr;
  };
  auto ms = nlohmann::json::array();
  for (const auto& m : r.mentions) ms.push_back(mention_to_json(m, &r.normalized));
  auto rs = nlohmann::json::array();
  for (const auto& c : r.relations)
    rs.push_back({{"source", index_of(c.source)},
                  {"target", index_of(c.target)},
                  {"source_name", c.source.name()},
                  {"target_name", c.target.name()},
                  {"relationship_type", c.relationship_type},
                  {"confidence", c.confidence},
                  {"method", std::string(to_string(c.method))}});
  auto cs = nlohmann::json::array();
  for (const auto& c : r.candidates) cs.push_back(c);
  return {{"report_id", r.report_id}, {"kb_version", r.kb_version},  {"text", r.normalized.text},
          {"mentions", ms},           {"relations", rs},              {"candidates", cs},
          {"timings_ms", r.timings_ms}};
}

// ---------------------------------------------------------------------------
// STIX 2.1 bundle

struct BundleOptions {
  // Seeds the bundle-level uuid. When set and no timestamp is given,
  // timestamps are fixed too so identical results give identical bytes.
  std::optional<uint64_t> seed;
  std::optional<std::string> timestamp;
};

inline constexpr std::string_view kReproducibleTimestamp = "1970-01-01T00:00:00.000Z";

inline std::string sdo_id(const std::string& type, const std::string& name) {
  return type + "--" + ids::uuid5(name + "|" + type);
}

/// Key under which mentions collapse into one SDO.
inline std::string entity_key(const EntityMention& m) {
  if (m.kb_id) return "id:" + *m.kb_id;
  return "name:" + m.stix_type + "|" + text::lower(m.name());
}

inline int stix_confidence(double c) { return static_cast<int>(std::lround(std::clamp(c, 0.0, 1.0) * 100.0)); }

inline nlohmann::json to_stix_bundle(const ExtractionResult& r, const BundleOptions& opt = {}) {
  const std::string ts =
      opt.timestamp ? *opt.timestamp : (opt.seed ? std::string(kReproducibleTimestamp) : ids::utc_now());
  auto objects = nlohmann::json::array();
  std::map<std::string, std::string> id_of;  // entity key -> SDO id
  std::set<std::string> emitted;
  for (const auto& m : r.mentions) {
    const std::string key = entity_key(m);
    if (id_of.count(key)) continue;
    const std::string id = sdo_id(m.stix_type, m.name());
    id_of[key] = id;
    if (!emitted.insert(id).second) continue;
    nlohmann::json o{{"type", m.stix_type}, {"spec_version", "2.1"}, {"id", id},
                     {"created", ts},       {"modified", ts},        {"name", m.name()}};
    if (m.kb_id) o["external_references"] = {{{"source_name", "stixnet-kb"}, {"external_id", *m.kb_id}}};
    objects.push_back(std::move(o));
  }

  struct Rel {
    std::string src, rel, tgt;
    double conf;
    RelationMethod method;
  };
  std::vector<Rel> rels;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> rel_index;
  for (const auto& c : r.relations) {
    auto s = id_of.find(entity_key(c.source));
    auto t = id_of.find(entity_key(c.target));
    if (s == id_of.end() || t == id_of.end()) continue;
    const auto k = std::make_tuple(s->second, c.relationship_type, t->second);
    if (auto it = rel_index.find(k); it != rel_index.end()) {
      if (c.confidence > rels[it->second].conf) {
        rels[it->second].conf = c.confidence;
        rels[it->second].method = c.method;
      }
      continue;
    }
    rel_index[k] = rels.size();
    rels.push_back({s->second, c.relationship_type, t->second, c.confidence, c.method});
  }
  for (const auto& x : rels)
    objects.push_back({{"type", "relationship"},
                       {"spec_version", "2.1"},
                       {"id", "relationship--" + ids::uuid5(x.src + "|" + x.rel + "|" + x.tgt)},
                       {"created", ts},
                       {"modified", ts},
                       {"relationship_type", x.rel},
                       {"source_ref", x.src},
                       {"target_ref", x.tgt},
                       {"confidence", stix_confidence(x.conf)},
                       {"x_stixnet_method", std::string(to_string(x.method))}});

  std::string bundle_uuid;
  if (opt.seed) {
    std::mt19937_64 engine(*opt.seed);
    bundle_uuid = ids::uuid4(engine);
  } else {
    bundle_uuid = ids::uuid4();
  }
  return {{"type", "bundle"}, {"id", "bundle--" + bundle_uuid}, {"objects", objects}};
}

namespace detail {

inline bool uuid_shape(std::string_view s) {
  if (s.size() != 36) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (s[i] != '-') return false;
    } else if (!text::is_hex(s[i]) || text::is_upper(s[i])) {
      return false;
    }
  }
  return true;
}

inline bool stix_id_of_type(const nlohmann::json& v, std::string_view type) {
  if (!v.is_string()) return false;
  const auto s = v.get<std::string>();
  const auto sep = s.find("--");
  if (sep == std::string::npos || std::string_view(s).substr(0, sep) != type) return false;
  return uuid_shape(std::string_view(s).substr(sep + 2));
}

}  // namespace detail

/// Structural checks on a bundle; returns one message per problem.
inline std::vector<std::string> validate_bundle(const nlohmann::json& b) {
  std::vector<std::string> errs;
  if (!b.is_object()) return {"bundle is not an object"};
  if (b.value("type", "") != "bundle") errs.push_back("bundle type must be 'bundle'");
  if (!b.contains("id") || !detail::stix_id_of_type(b["id"], "bundle")) errs.push_back("bad bundle id");
  if (!b.contains("objects") || !b["objects"].is_array()) {
    errs.push_back("objects must be an array");
    return errs;
  }
  std::set<std::string> ids;
  for (const auto& o : b["objects"]) {
    if (!o.is_object() || !o.contains("type") || !o["type"].is_string()) {
      errs.push_back("object without a type");
      continue;
    }
    const std::string type = o["type"];
    const std::string id = o.value("id", "");
    if (!detail::stix_id_of_type(o.value("id", nlohmann::json()), type)) errs.push_back("bad id '" + id + "'");
    if (!ids.insert(id).second) errs.push_back("duplicate id " + id);
    if (o.value("spec_version", "") != "2.1") errs.push_back(id + ": spec_version must be \"2.1\"");
    for (const char* f : {"created", "modified"})
      if (!o.contains(f) || !o[f].is_string()) errs.push_back(id + ": missing " + f);
    if (o.contains("confidence")) {
      const auto& c = o["confidence"];
      if (!c.is_number_integer() || c.get<int64_t>() < 0 || c.get<int64_t>() > 100)
        errs.push_back(id + ": confidence must be an integer in [0,100]");
    }
    if (type == "relationship") {
      if (!o.contains("relationship_type") || !o["relationship_type"].is_string() ||
          o["relationship_type"].get<std::string>().empty())
        errs.push_back(id + ": missing relationship_type");
    } else if (!o.contains("name") || !o["name"].is_string() || o["name"].get<std::string>().empty()) {
      errs.push_back(id + ": missing name");
    }
  }
  for (const auto& o : b["objects"]) {
    if (!o.is_object() || o.value("type", "") != "relationship") continue;
    for (const char* f : {"source_ref", "target_ref"}) {
      if (!o.contains(f) || !o[f].is_string() || !ids.count(o[f].get<std::string>()))
        errs.push_back(o.value("id", "?") + ": " + f + " does not resolve");
    }
  }
  return errs;
}

}  // namespace stixnet
