#pragma once

// Precision / recall / F1 for entities and relations against span
// annotations, and the batched temporal-evolution experiment.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "stixnet/errors.hpp"
#include "stixnet/knowledge_base.hpp"
#include "stixnet/pipeline.hpp"
#include "stixnet/types.hpp"

namespace stixnet {

struct GoldEntity {
  Span span;
  std::string type;
  std::string text;
};

struct GoldRelation {
  std::size_t source = 0;
  std::size_t target = 0;
  std::string type;
};

struct AnnotatedReport {
  std::string id;
  std::string document;
  std::vector<GoldEntity> entities;
  std::vector<GoldRelation> relations;

  static AnnotatedReport from_json(const nlohmann::json& j, std::string id = "") {
    AnnotatedReport r;
    r.id = std::move(id);
    try {
      r.document = j.at("document").get<std::string>();
      for (const auto& e : j.at("entities")) {
        GoldEntity g{{e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>()},
                     e.at("type").get<std::string>(),
                     e.at("text").get<std::string>()};
        if (g.span.start > g.span.end || g.span.end > r.document.size())
          throw EvalError(r.id + ": entity span out of bounds");
        if (r.document.compare(g.span.start, g.span.length(), g.text) != 0)
          throw EvalError(r.id + ": entity text '" + g.text + "' does not match the document");
        r.entities.push_back(std::move(g));
      }
      for (const auto& x : j.value("relations", nlohmann::json::array())) {
        GoldRelation g{x.at("source").get<std::size_t>(), x.at("target").get<std::size_t>(),
                       x.at("type").get<std::string>()};
        if (g.source >= r.entities.size() || g.target >= r.entities.size())
          throw EvalError(r.id + ": relation refers to a missing entity");
        r.relations.push_back(std::move(g));
      }
    } catch (const nlohmann::json::exception& e) {
      throw EvalError(r.id + ": " + e.what());
    }
    return r;
  }

  static AnnotatedReport load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw EvalError("cannot open " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw EvalError(path.string() + ": " + e.what());
    }
    return from_json(j, path.stem().string());
  }
};

/// Every *.json file in `dir`, in file-name order.
inline std::vector<AnnotatedReport> load_gold_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw EvalError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<AnnotatedReport> out;
  for (const auto& f : files) out.push_back(AnnotatedReport::load(f));
  return out;
}

struct Scores {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
  bool empty = true;  // no gold and no predictions

  static Scores from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    Scores s;
    s.tp = tp;
    s.fp = fp;
    s.fn = fn;
    s.empty = tp + fp + fn == 0;
    const double t = static_cast<double>(tp);
    s.precision = tp + fp ? t / static_cast<double>(tp + fp) : 0.0;
    s.recall = tp + fn ? t / static_cast<double>(tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
  }

  Scores operator+(const Scores& o) const { return from_counts(tp + o.tp, fp + o.fp, fn + o.fn); }

  nlohmann::json to_json() const {
    return {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"precision", precision}, {"recall", recall}, {"f1", f1}, {"empty", empty}};
  }
};

/// Entity scoring outcome. `pred` holds the predictions in canonical order
/// with raw-text spans; `pred_gold[i]` is the gold index credited to pred[i].
struct EntityScoring {
  Scores scores;
  std::map<std::string, Scores> per_type;
  std::vector<EntityMention> pred;
  std::vector<std::optional<std::size_t>> pred_gold;
  std::vector<bool> gold_matched;
};

/// Predictions must carry spans over `document` (raw offsets).
inline EntityScoring score_entities(std::vector<EntityMention> pred, const AnnotatedReport& gold,
                                    std::string_view document) {
  if (document != gold.document) throw EvalError("prediction text differs from annotated document " + gold.id);
  // Canonical order makes the result independent of prediction order.
  std::sort(pred.begin(), pred.end(), [](const EntityMention& a, const EntityMention& b) {
    if (a.has_span() != b.has_span()) return a.has_span();
    if (a.span != b.span) return a.span < b.span;
    if (a.stix_type != b.stix_type) return a.stix_type < b.stix_type;
    return a.surface < b.surface;
  });
  EntityScoring out;
  out.pred_gold.assign(pred.size(), std::nullopt);
  out.gold_matched.assign(gold.entities.size(), false);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& p = pred[i];
    for (std::size_t g = 0; g < gold.entities.size(); ++g) {
      if (out.gold_matched[g] || gold.entities[g].type != p.stix_type) continue;
      if (p.span && *p.span != gold.entities[g].span) continue;
      out.gold_matched[g] = true;
      out.pred_gold[i] = g;
      break;
    }
  }
  std::map<std::string, std::array<std::size_t, 3>> counts;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto& c = counts[pred[i].stix_type];
    if (out.pred_gold[i]) {
      ++tp;
      ++c[0];
    } else {
      ++fp;
      ++c[1];
    }
  }
  for (std::size_t g = 0; g < gold.entities.size(); ++g)
    if (!out.gold_matched[g]) {
      ++fn;
      ++counts[gold.entities[g].type][2];
    }
  out.scores = Scores::from_counts(tp, fp, fn);
  for (const auto& [t, c] : counts) out.per_type[t] = Scores::from_counts(c[0], c[1], c[2]);
  out.pred = std::move(pred);
  return out;
}

enum class RelationMode { Standard, NoErrorPropagation };

inline std::string_view to_string(RelationMode m) {
  return m == RelationMode::Standard ? "standard" : "no-error-prop";
}

inline RelationMode relation_mode_from_string(std::string_view s) {
  if (s == "standard") return RelationMode::Standard;
  if (s == "no-error-prop") return RelationMode::NoErrorPropagation;
  throw EvalError("unknown relation scoring mode '" + std::string(s) + "'");
}

/// Relation endpoints must carry raw-text spans, like the entity predictions.
/// A relation is a TP when both endpoints are entity TPs and a gold relation
/// with the same direction and type is still unconsumed. In no-error-prop
/// mode, predicted and gold relations with an endpoint that is not an
/// entity TP are left out of the counts.
inline Scores score_relations(const std::vector<RelationCandidate>& pred, const EntityScoring& ents,
                              const AnnotatedReport& gold, RelationMode mode = RelationMode::Standard) {
  auto gold_of = [&](const EntityMention& m) -> std::optional<std::size_t> {
    if (!m.span) return std::nullopt;
    for (std::size_t i = 0; i < ents.pred.size(); ++i)
      if (ents.pred[i].span == m.span && ents.pred[i].stix_type == m.stix_type) return ents.pred_gold[i];
    return std::nullopt;
  };
  std::vector<bool> used(gold.relations.size(), false);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& r : pred) {
    const auto s = gold_of(r.source), t = gold_of(r.target);
    if (!s || !t) {
      if (mode == RelationMode::Standard) ++fp;
      continue;
    }
    bool hit = false;
    for (std::size_t g = 0; g < gold.relations.size() && !hit; ++g) {
      const auto& gr = gold.relations[g];
      if (!used[g] && gr.source == *s && gr.target == *t && gr.type == r.relationship_type) hit = used[g] = true;
    }
    hit ? ++tp : ++fp;
  }
  for (std::size_t g = 0; g < gold.relations.size(); ++g) {
    if (used[g]) continue;
    const auto& gr = gold.relations[g];
    if (mode == RelationMode::NoErrorPropagation && (!ents.gold_matched[gr.source] || !ents.gold_matched[gr.target]))
      continue;
    ++fn;
  }
  return Scores::from_counts(tp, fp, fn);
}

namespace detail {

inline EntityMention to_raw(EntityMention m, const NormalizedText& nt) {
  if (m.span) m.span = nt.raw_span(*m.span);
  return m;
}

}  // namespace detail

struct ReportEvaluation {
  EntityScoring entities;
  Scores relations;
};

/// Scores one pipeline result (normalized spans) against its annotation.
/// `raw_text` is the input the pipeline was run on.
inline ReportEvaluation evaluate_result(const ExtractionResult& r, std::string_view raw_text,
                                        const AnnotatedReport& gold, RelationMode mode = RelationMode::Standard) {
  std::vector<EntityMention> ms;
  for (const auto& m : r.mentions) ms.push_back(detail::to_raw(m, r.normalized));
  std::vector<RelationCandidate> rels = r.relations;
  for (auto& c : rels) {
    c.source = detail::to_raw(c.source, r.normalized);
    c.target = detail::to_raw(c.target, r.normalized);
  }
  ReportEvaluation ev;
  ev.entities = score_entities(std::move(ms), gold, raw_text);
  ev.relations = score_relations(rels, ev.entities, gold, mode);
  return ev;
}

struct CorpusEvaluation {
  Scores entities;
  Scores relations;
  std::map<std::string, Scores> per_type;
  std::vector<std::pair<std::string, ReportEvaluation>> reports;
};

inline CorpusEvaluation evaluate_corpus(const std::vector<AnnotatedReport>& gold, const KbSnapshot& snap,
                                        const Resources& res, const PipelineConfig& cfg = {},
                                        RelationMode mode = RelationMode::Standard) {
  CorpusEvaluation out;
  for (const auto& g : gold) {
    auto r = run_pipeline({g.id, g.document}, snap, res, cfg);
    auto ev = evaluate_result(r, g.document, g, mode);
    out.entities = out.entities + ev.entities.scores;
    out.relations = out.relations + ev.relations;
    for (const auto& [t, s] : ev.entities.per_type) out.per_type[t] = out.per_type[t] + s;
    out.reports.emplace_back(g.id, std::move(ev));
  }
  return out;
}

/// Seed KB description: {"entities":[{"type","name","aliases"?}], "locations_csv"?}
/// with the CSV path relative to the JSON file.
inline std::unique_ptr<KnowledgeBase> load_seed_kb(const std::filesystem::path& path, PosFilterTable table = {}) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot open seed KB " + path.string());
  const auto j = nlohmann::json::parse(in);
  auto kb = std::make_unique<KnowledgeBase>(std::move(table));
  for (const auto& e : j.at("entities"))
    kb->add_entity(e.at("type").get<std::string>(), e.at("name").get<std::string>(),
                   e.value("aliases", std::vector<std::string>{}), KbSource::Manual);
  if (j.contains("locations_csv"))
    kb->ingest_locations_csv_file(path.parent_path() / j["locations_csv"].get<std::string>());
  return kb;
}

struct TemporalOptions {
  std::size_t batch_size = 5;
  bool augment = true;
  // false: simulated analyst accepts candidates that exactly match a gold
  // entity (text and type) and rejects the rest. true: accept every
  // candidate without validation.
  bool auto_accept = false;
  PipelineConfig config{};
};

struct BatchResult {
  std::size_t batch = 0;
  std::size_t reports = 0;
  Scores entities;
  Scores relations;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t kb_size = 0;  // after this batch's review step
};

/// Runs the batched experiment on a private copy of `kb`.
inline std::vector<BatchResult> temporal_experiment(const std::vector<AnnotatedReport>& reports,
                                                    const KnowledgeBase& kb, const Resources& res,
                                                    const TemporalOptions& opt = {}) {
  if (opt.batch_size == 0) throw EvalError("batch size must be positive");
  auto work = kb.clone_in_memory();
  std::vector<BatchResult> out;
  for (std::size_t start = 0, b = 0; start < reports.size(); start += opt.batch_size, ++b) {
    const std::size_t end = std::min(reports.size(), start + opt.batch_size);
    const auto snap = work->snapshot();
    BatchResult br;
    br.batch = b;
    br.reports = end - start;
    std::vector<std::pair<CandidateEntity, const AnnotatedReport*>> cands;
    for (std::size_t i = start; i < end; ++i) {
      const auto& g = reports[i];
      auto r = run_pipeline({g.id, g.document}, *snap, res, opt.config);
      auto ev = evaluate_result(r, g.document, g);
      br.entities = br.entities + ev.entities.scores;
      br.relations = br.relations + ev.relations;
      for (auto& c : r.candidates) cands.emplace_back(std::move(c), &g);
    }
    if (opt.augment) {
      for (auto& [c, g] : cands) {
        const auto current = work->snapshot();
        if (current->resolve(c.surface) || current->stoplisted(c.surface)) continue;
        const auto pending = work->candidates(CandidateStatus::Pending);
        if (std::any_of(pending.begin(), pending.end(),
                        [&](const CandidateEntity& p) { return text::iequals(p.surface, c.surface); }))
          continue;
        const auto stored = work->add_candidate(c);
        const bool valid =
            opt.auto_accept || std::any_of(g->entities.begin(), g->entities.end(), [&](const GoldEntity& e) {
              return e.text == c.surface && e.type == c.proposed_type;
            });
        work->review_candidate(stored.id, valid ? Decision::Accept : Decision::Reject);
        valid ? ++br.accepted : ++br.rejected;
      }
    }
    br.kb_size = work->size();
    out.push_back(br);
  }
  return out;
}

/// Mean entity F1 over batches for each of `shuffles` random orders.
inline std::vector<double> shuffled_mean_f1(std::vector<AnnotatedReport> reports, const KnowledgeBase& kb,
                                            const Resources& res, std::size_t shuffles, uint64_t seed,
                                            const TemporalOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::vector<double> means;
  for (std::size_t s = 0; s < shuffles; ++s) {
    for (std::size_t i = reports.size(); i > 1; --i) std::swap(reports[i - 1], reports[rng() % i]);
    const auto batches = temporal_experiment(reports, kb, res, opt);
    double sum = 0;
    for (const auto& b : batches) sum += b.entities.f1;
    means.push_back(batches.empty() ? 0.0 : sum / static_cast<double>(batches.size()));
  }
  return means;
}

/// Sample standard deviation (n-1); 0 for fewer than two values.
inline double sample_stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace stixnet
