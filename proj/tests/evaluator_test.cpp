#include <gtest/gtest.h>

#include <random>

#include "stixnet/evaluator.hpp"
#include "test_data.hpp"

using namespace stixnet;

namespace {

const Resources& res() {
  static const auto r = Resources::load(testdata::data_dir());
  return *r;
}

const std::vector<AnnotatedReport>& corpus() {
  static const auto c = load_gold_dir(testdata::path("eval/reports"));
  return c;
}

std::unique_ptr<KnowledgeBase> seed_kb() {
  return load_seed_kb(testdata::path("eval/seed_kb.json"), PosFilterTable::load(testdata::path("pos_filter_table.json")));
}

// "APT29 used 7-Zip and Raindrop in France."
AnnotatedReport hand_report() {
  return AnnotatedReport::from_json(nlohmann::json::parse(R"({
    "document": "APT29 used 7-Zip and Raindrop in France.",
    "entities": [
      {"start": 0, "end": 5, "type": "intrusion-set", "text": "APT29"},
      {"start": 11, "end": 16, "type": "tool", "text": "7-Zip"},
      {"start": 21, "end": 29, "type": "malware", "text": "Raindrop"},
      {"start": 33, "end": 39, "type": "location", "text": "France"}],
    "relations": [
      {"source": 0, "target": 1, "type": "uses"},
      {"source": 0, "target": 2, "type": "uses"},
      {"source": 0, "target": 3, "type": "targets"}]})"),
                                    "hand");
}

EntityMention pm(std::size_t s, std::size_t e, const std::string& type, const std::string& surface = "") {
  EntityMention m;
  m.surface = surface.empty() ? "e" + std::to_string(s) : surface;
  m.span = Span{s, e};
  m.stix_type = type;
  return m;
}

RelationCandidate rc(const EntityMention& a, const EntityMention& b, const std::string& type) {
  RelationCandidate c;
  c.source = a;
  c.target = b;
  c.relationship_type = type;
  c.confidence = 1.0;
  return c;
}

}  // namespace

TEST(ScoresTest, WorkedCounts) {
  auto s = Scores::from_counts(3, 1, 1);
  EXPECT_DOUBLE_EQ(s.precision, 0.75);
  EXPECT_DOUBLE_EQ(s.recall, 0.75);
  EXPECT_DOUBLE_EQ(s.f1, 0.75);
  auto perfect = Scores::from_counts(4, 0, 0);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  auto none = Scores::from_counts(0, 0, 5);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_FALSE(none.empty);
  auto empty = Scores::from_counts(0, 0, 0);
  EXPECT_TRUE(empty.empty);
  EXPECT_EQ(empty.f1, 0.0);
}

TEST(ScoresTest, IdentitiesOnRandomCounts) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20000; ++i) {
    const std::size_t tp = rng() % 50, fp = rng() % 50, fn = rng() % 50;
    auto s = Scores::from_counts(tp, fp, fn);
    const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    EXPECT_NEAR(s.precision, p, 1e-12);
    EXPECT_NEAR(s.recall, r, 1e-12);
    EXPECT_NEAR(s.f1, p + r > 0 ? 2 * p * r / (p + r) : 0.0, 1e-12);
    if (tp) EXPECT_NEAR(s.f1, 2.0 * tp / (2.0 * tp + fp + fn), 1e-12);
  }
}

TEST(GoldFormat, Validation) {
  auto j = nlohmann::json::parse(R"({"document":"abc def","entities":[{"start":0,"end":3,"type":"tool","text":"abc"}],
                                     "relations":[]})");
  EXPECT_NO_THROW(AnnotatedReport::from_json(j));
  auto wrong_text = j;
  wrong_text["entities"][0]["text"] = "abd";
  EXPECT_THROW(AnnotatedReport::from_json(wrong_text), EvalError);
  auto oob = j;
  oob["entities"][0]["end"] = 99;
  EXPECT_THROW(AnnotatedReport::from_json(oob), EvalError);
  auto bad_rel = j;
  bad_rel["relations"] = {{{"source", 0}, {"target", 4}, {"type", "uses"}}};
  EXPECT_THROW(AnnotatedReport::from_json(bad_rel), EvalError);
  EXPECT_THROW(AnnotatedReport::from_json(nlohmann::json::object()), EvalError);
}

TEST(EntityScoring, PerfectEmptyAndMismatch) {
  const auto g = hand_report();
  std::vector<EntityMention> all = {pm(0, 5, "intrusion-set"), pm(11, 16, "tool"), pm(21, 29, "malware"),
                                    pm(33, 39, "location")};
  auto s = score_entities(all, g, g.document).scores;
  EXPECT_EQ(s.f1, 1.0);
  auto e = score_entities({}, g, g.document).scores;
  EXPECT_EQ(e.fn, 4u);
  EXPECT_EQ(e.precision, 0.0);
  EXPECT_EQ(e.f1, 0.0);
  EXPECT_THROW(score_entities(all, g, "other text"), EvalError);
}

TEST(EntityScoring, ExactSpanAndTypeRequired) {
  const auto g = hand_report();
  std::vector<EntityMention> preds = {pm(0, 5, "threat-actor"), pm(11, 15, "tool"), pm(21, 29, "malware"),
                                      pm(21, 29, "malware", "dup")};
  auto s = score_entities(preds, g, g.document);
  EXPECT_EQ(s.scores.tp, 1u);
  EXPECT_EQ(s.scores.fp, 3u);
  EXPECT_EQ(s.scores.fn, 3u);
  EXPECT_EQ(s.per_type.at("malware").tp, 1u);
  EXPECT_EQ(s.per_type.at("malware").fp, 1u);
  EXPECT_EQ(s.per_type.at("location").fn, 1u);
}

TEST(EntityScoring, SpanlessGetsDocumentLevelCredit) {
  auto g = AnnotatedReport::from_json(nlohmann::json::parse(
      R"({"document":"They sent phishing mail.","entities":[{"start":10,"end":18,"type":"attack-pattern","text":"phishing"}]})"));
  EntityMention ttp;
  ttp.surface = "Phishing";
  ttp.stix_type = "attack-pattern";
  ttp.provenance = Provenance::Ttp;
  auto s = score_entities({ttp, ttp}, g, g.document).scores;
  EXPECT_EQ(s.tp, 1u);
  EXPECT_EQ(s.fp, 1u);
  EXPECT_EQ(s.fn, 0u);
  // An exact span prediction takes precedence over the document-level one.
  auto both = score_entities({ttp, pm(10, 18, "attack-pattern")}, g, g.document);
  EXPECT_EQ(both.scores.tp, 1u);
  EXPECT_EQ(both.scores.fp, 1u);
  EXPECT_TRUE(both.pred[0].has_span());
  EXPECT_TRUE(both.pred_gold[0].has_value());
}

TEST(EntityScoring, SymmetricUnderReordering) {
  const auto g = hand_report();
  std::vector<EntityMention> preds = {pm(0, 5, "intrusion-set"), pm(11, 16, "malware"), pm(21, 29, "malware"),
                                      pm(21, 29, "malware", "x"), pm(2, 9, "tool")};
  EntityMention ttp;
  ttp.surface = "Tool";
  ttp.stix_type = "tool";
  preds.push_back(ttp);
  const auto ref = score_entities(preds, g, g.document).scores;
  std::mt19937 rng(3);
  for (int i = 0; i < 50; ++i) {
    std::shuffle(preds.begin(), preds.end(), rng);
    const auto s = score_entities(preds, g, g.document).scores;
    EXPECT_EQ(s.tp, ref.tp);
    EXPECT_EQ(s.fp, ref.fp);
    EXPECT_EQ(s.fn, ref.fn);
  }
}

TEST(RelationScoring, HandScoredBothModes) {
  const auto g = hand_report();
  auto apt = pm(0, 5, "intrusion-set"), zip = pm(11, 16, "tool"), rain_wrong = pm(21, 29, "tool"),
       fr = pm(33, 39, "location");
  // Entities: APT29, 7-Zip, France correct; Raindrop mistyped as tool.
  const auto ents = score_entities({apt, zip, rain_wrong, fr}, g, g.document);
  ASSERT_EQ(ents.scores.tp, 3u);
  const std::vector<RelationCandidate> preds = {
      rc(apt, zip, "uses"),         // TP
      rc(apt, rain_wrong, "uses"),  // endpoint misclassified
      rc(apt, fr, "originates-from"),  // wrong type: FP in both modes
  };
  auto std_scores = score_relations(preds, ents, g, RelationMode::Standard);
  EXPECT_EQ(std_scores.tp, 1u);
  EXPECT_EQ(std_scores.fp, 2u);
  EXPECT_EQ(std_scores.fn, 2u);  // apt-uses-raindrop, apt-targets-france
  auto nep = score_relations(preds, ents, g, RelationMode::NoErrorPropagation);
  EXPECT_EQ(nep.tp, 1u);
  EXPECT_EQ(nep.fp, 1u);
  EXPECT_EQ(nep.fn, 1u);  // apt-uses-raindrop dropped: its target entity was missed
}

TEST(RelationScoring, DirectionAndConsumption) {
  const auto g = hand_report();
  auto apt = pm(0, 5, "intrusion-set"), zip = pm(11, 16, "tool");
  const auto ents = score_entities({apt, zip}, g, g.document);
  auto s = score_relations({rc(zip, apt, "uses"), rc(apt, zip, "uses"), rc(apt, zip, "uses")}, ents, g);
  EXPECT_EQ(s.tp, 1u);
  EXPECT_EQ(s.fp, 2u);
}

TEST(RelationScoring, NothingOnEitherSide) {
  auto g = AnnotatedReport::from_json(nlohmann::json::parse(R"({"document":"x","entities":[]})"));
  auto ents = score_entities({}, g, g.document);
  auto s = score_relations({}, ents, g);
  EXPECT_TRUE(s.empty);
  EXPECT_EQ(s.precision, 0.0);
  EXPECT_EQ(s.recall, 0.0);
  EXPECT_EQ(s.f1, 0.0);
}

TEST(Evaluate, RawOffsetsThroughNormalization) {
  const std::string doc = "APT29 beaconed to 198.51.100[.]7 and used\n7-Zip.";
  auto g = AnnotatedReport::from_json(nlohmann::json::parse(R"({"document":"APT29 beaconed to 198.51.100[.]7 and used\n7-Zip.",
    "entities":[{"start":0,"end":5,"type":"intrusion-set","text":"APT29"},
                {"start":18,"end":32,"type":"indicator","text":"198.51.100[.]7"},
                {"start":42,"end":47,"type":"tool","text":"7-Zip"}],
    "relations":[{"source":0,"target":2,"type":"uses"}]})"));
  KnowledgeBase kb;
  kb.add_entity("intrusion-set", "APT29", {}, KbSource::Manual);
  kb.add_entity("tool", "7-Zip", {}, KbSource::Manual);
  auto r = run_pipeline({"raw", doc}, *kb.snapshot(), res());
  auto ev = evaluate_result(r, doc, g);
  EXPECT_EQ(ev.entities.scores.tp, 3u) << result_to_json(r).dump();
  EXPECT_EQ(ev.entities.scores.fp, 0u);
  EXPECT_EQ(ev.relations.tp, 1u);
}

TEST(Corpus, BundledSyntheticCorpusShape) {
  ASSERT_EQ(corpus().size(), 20u);
  for (const auto& r : corpus()) EXPECT_FALSE(r.entities.empty()) << r.id;
  EXPECT_EQ(corpus().front().id, "r01");
}

TEST(Temporal, AugmentedBeatsFrozen) {
  auto kb = seed_kb();
  TemporalOptions aug, frozen;
  frozen.augment = false;
  const auto a = temporal_experiment(corpus(), *kb, res(), aug);
  const auto f = temporal_experiment(corpus(), *kb, res(), frozen);
  ASSERT_EQ(a.size(), 4u);
  ASSERT_EQ(f.size(), 4u);
  for (std::size_t b = 1; b < a.size(); ++b) {
    EXPECT_GE(a[b].entities.f1, f[b].entities.f1) << b;
    EXPECT_GE(a[b].entities.recall, a[b - 1].entities.recall) << b;
    EXPECT_GT(a[b].kb_size, a[b - 1].kb_size);
  }
  // Frozen: every later batch misses exactly its 10 bare mentions of earlier names.
  EXPECT_EQ(f[0].entities.fn, 0u);
  for (std::size_t b = 1; b < f.size(); ++b) {
    EXPECT_EQ(f[b].entities.fn, 10u) << b;
    EXPECT_EQ(f[b].kb_size, f[0].kb_size);
  }
  EXPECT_EQ(kb->size(), f[0].kb_size);  // the caller's KB is untouched
}

TEST(Temporal, OversizedBatchIsSingleBatch) {
  auto kb = seed_kb();
  TemporalOptions aug, frozen;
  aug.batch_size = frozen.batch_size = 50;
  frozen.augment = false;
  const auto a = temporal_experiment(corpus(), *kb, res(), aug);
  const auto f = temporal_experiment(corpus(), *kb, res(), frozen);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].entities.tp, f[0].entities.tp);
  EXPECT_EQ(a[0].entities.f1, f[0].entities.f1);
  TemporalOptions zero;
  zero.batch_size = 0;
  EXPECT_THROW(temporal_experiment(corpus(), *kb, res(), zero), EvalError);
}

TEST(Temporal, AnalystRejectsNonGoldCandidates) {
  auto kb = seed_kb();
  auto g = AnnotatedReport::from_json(nlohmann::json::parse(R"({"document":"APT29 deployed a loader called Quuxbar.",
    "entities":[{"start":0,"end":5,"type":"intrusion-set","text":"APT29"}]})"),
                                      "q");
  TemporalOptions oracle, blind;
  blind.auto_accept = true;
  auto o = temporal_experiment({g}, *kb, res(), oracle);
  auto b = temporal_experiment({g}, *kb, res(), blind);
  EXPECT_EQ(o[0].rejected, 1u);
  EXPECT_EQ(o[0].accepted, 0u);
  EXPECT_EQ(b[0].accepted, 1u);
  EXPECT_EQ(b[0].kb_size, o[0].kb_size + 1);
}

TEST(Temporal, OrderIndependence) {
  auto kb = seed_kb();
  const auto means = shuffled_mean_f1(corpus(), *kb, res(), 10, 2024);
  ASSERT_EQ(means.size(), 10u);
  EXPECT_LT(sample_stddev(means), 0.02);
  EXPECT_NEAR(sample_stddev({1.0, 3.0}), std::sqrt(2.0), 1e-12);
  EXPECT_EQ(sample_stddev({0.5}), 0.0);
}
