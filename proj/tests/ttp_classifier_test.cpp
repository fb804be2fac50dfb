#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "stixnet/ttp_classifier.hpp"
#include "test_data.hpp"

using namespace stixnet;

namespace {

const LabelSpace& space() {
  static const LabelSpace s = LabelSpace::load(testdata::path("ttp_labels.json"));
  return s;
}
const std::vector<TtpDocument>& corpus() {
  static const auto c = load_ttp_corpus(testdata::path("ttp_corpus.jsonl"));
  return c;
}
const TfidfModel& full_model() {
  static const TfidfModel m = train_ttp(corpus(), space());
  return m;
}

LabelSpace two_labels() {
  return LabelSpace({{"T1", "One", "attack-pattern"}, {"TA1", "Two", "x-mitre-tactic"}});
}

}  // namespace

TEST(TtpTerms, UnigramsAndBigramsStopAtPunctuation) {
  using V = std::vector<std::string>;
  EXPECT_EQ(ttp_terms("Ran cmd.exe, then PowerShell"),
            (V{"ran", "ran cmd.exe", "cmd.exe", "then", "then powershell", "powershell"}));
  EXPECT_EQ(ttp_terms("T1518.001 seen\nagain"), (V{"t1518.001", "t1518.001 seen", "seen", "again"}));
  EXPECT_TRUE(ttp_terms("  ... ").empty());
}

TEST(LabelSpaceTest, BundledLabels) {
  EXPECT_EQ(space().size(), 10u);
  std::set<std::string> ids;
  for (const auto& l : space().labels()) ids.insert(l.id);
  EXPECT_EQ(ids.size(), 10u);
  EXPECT_TRUE(space().index_of("T1518"));
  EXPECT_THROW(LabelSpace({{"T1", "a", "attack-pattern"}, {"T1", "b", "attack-pattern"}}), TrainError);
  EXPECT_THROW(LabelSpace({{"T1", "a", "malware"}}), TrainError);
}

TEST(TtpCorpus, BundledCorpusShape) {
  EXPECT_GE(corpus().size(), 200u);
  std::map<std::string, int> per;
  for (const auto& d : corpus())
    for (const auto& l : d.labels) ++per[l];
  EXPECT_EQ(per.size(), 10u);
  for (const auto& [l, c] : per) EXPECT_GE(c, 20) << l;
}

TEST(TtpTrain, IdfMatchesFormula) {
  std::vector<TtpDocument> docs = {{"alpha beta", {"T1"}}, {"alpha gamma", {"TA1"}}, {"alpha", {"T1"}}};
  auto m = train_ttp(docs, two_labels());
  const auto& v = m.vocabulary();
  ASSERT_EQ(v.size(), 5u);  // alpha, beta, gamma, "alpha beta", "alpha gamma"
  EXPECT_NEAR(m.idf()[v.at("alpha")], std::log(4.0 / 4.0) + 1.0, 1e-15);
  EXPECT_NEAR(m.idf()[v.at("beta")], std::log(4.0 / 2.0) + 1.0, 1e-15);
  EXPECT_NEAR(m.idf()[v.at("alpha gamma")], std::log(4.0 / 2.0) + 1.0, 1e-15);

  // "alpha alpha beta": tf alpha=2, beta=1, bigrams "alpha alpha" (OOV), "alpha beta"=1.
  auto x = m.vectorize("alpha alpha beta");
  const double a = 2 * 1.0, b = std::log(2.0) + 1.0, ab = std::log(2.0) + 1.0;
  const double norm = std::sqrt(a * a + b * b + ab * ab);
  std::map<std::size_t, double> got(x.begin(), x.end());
  ASSERT_EQ(got.size(), 3u);
  EXPECT_NEAR(got[v.at("alpha")], a / norm, 1e-15);
  EXPECT_NEAR(got[v.at("beta")], b / norm, 1e-15);
  EXPECT_NEAR(got[v.at("alpha beta")], ab / norm, 1e-15);
}

TEST(TtpTrain, SeparableTwoDocuments) {
  std::vector<TtpDocument> docs = {{"powershell script executed", {"T1"}}, {"network share enumeration", {"TA1"}}};
  auto m = train_ttp(docs, two_labels());
  auto p0 = m.predict(docs[0].text);
  auto p1 = m.predict(docs[1].text);
  ASSERT_EQ(p0.size(), 1u);
  ASSERT_EQ(p1.size(), 1u);
  EXPECT_EQ(p0[0].label_id, "T1");
  EXPECT_EQ(p1[0].label_id, "TA1");
}

TEST(TtpTrain, Errors) {
  EXPECT_THROW(train_ttp({{"x", {"T9999"}}}, two_labels()), TrainError);
  EXPECT_THROW(train_ttp({}, two_labels()), TrainError);
}

TEST(TtpTrain, LabelWithoutPositivesNeverPredicted) {
  auto m = train_ttp({{"alpha", {"T1"}}, {"beta", {}}}, two_labels());
  ASSERT_EQ(m.warnings().size(), 1u);
  EXPECT_NE(m.warnings()[0].find("TA1"), std::string::npos);
  EXPECT_FALSE(m.active()[1]);
  for (const auto& p : m.predict("alpha beta", 0.0)) EXPECT_NE(p.label_id, "TA1");
}

TEST(TtpPredict, EmptyTextAndImpossibleThreshold) {
  EXPECT_TRUE(full_model().predict("").empty());
  EXPECT_TRUE(full_model().predict("   \n").empty());
  for (const auto& d : corpus()) EXPECT_TRUE(full_model().predict(d.text, 1.01).empty());
}

TEST(TtpPredict, MemorizesTrainingDocuments) {
  for (const auto& d : corpus()) {
    std::set<std::string> pred;
    for (const auto& p : full_model().predict(d.text)) pred.insert(p.label_id);
    EXPECT_EQ(pred, std::set<std::string>(d.labels.begin(), d.labels.end())) << d.text;
  }
}

TEST(TtpPredict, SortedDescending) {
  auto ps = full_model().predict(corpus()[0].text, 0.0);
  ASSERT_EQ(ps.size(), 10u);
  for (std::size_t i = 1; i < ps.size(); ++i) EXPECT_GE(ps[i - 1].score, ps[i].score);
}

TEST(TtpPredict, DuplicationLeavesScoresUnchanged) {
  for (std::size_t i = 0; i < corpus().size(); i += 11) {
    const auto& t = corpus()[i].text;
    const auto a = full_model().scores(t);
    const auto b = full_model().scores(t + " " + t);
    for (std::size_t l = 0; l < a.size(); ++l) EXPECT_NEAR(a[l], b[l], 1e-9);
  }
}

TEST(TtpPredict, MentionsAreDocumentLevel) {
  const auto& d = corpus()[0];
  auto ms = full_model().to_mentions(full_model().predict(d.text));
  ASSERT_FALSE(ms.empty());
  for (const auto& m : ms) {
    EXPECT_FALSE(m.has_span());
    EXPECT_EQ(m.provenance, Provenance::Ttp);
    EXPECT_TRUE(m.stix_type == "attack-pattern" || m.stix_type == "x-mitre-tactic");
    EXPECT_GE(m.confidence, 0.5);
  }
}

TEST(TtpTrain, DeterministicAcrossRuns) {
  auto a = train_ttp(corpus(), space());
  auto b = train_ttp(corpus(), space());
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_EQ(a.bias(), b.bias());
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(TtpModel, SaveLoadRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "stixnet-ttp-model.json";
  full_model().save(path);
  auto m = TfidfModel::load(path);
  EXPECT_EQ(m.weights(), full_model().weights());
  EXPECT_EQ(m.idf(), full_model().idf());
  EXPECT_EQ(m.vocabulary(), full_model().vocabulary());
  EXPECT_EQ(m.predict(corpus()[3].text), full_model().predict(corpus()[3].text));
  auto j = full_model().to_json();
  j["version"] = 99;
  EXPECT_THROW(TfidfModel::from_json(j), Error);
  std::filesystem::remove(path);
}

TEST(TtpGate, HeldOutMicroF1) {
  auto [train, test] = split_corpus(corpus(), 0.2, 7);
  EXPECT_EQ(train.size() + test.size(), corpus().size());
  EXPECT_EQ(test.size(), 48u);
  auto m = train_ttp(train, space());
  // Independent micro-F1.
  double tp = 0, fp = 0, fn = 0;
  for (const auto& d : test) {
    std::set<std::string> gold(d.labels.begin(), d.labels.end());
    std::set<std::string> pred;
    for (const auto& p : m.predict(d.text)) pred.insert(p.label_id);
    for (const auto& p : pred) (gold.count(p) ? tp : fp) += 1;
    for (const auto& g : gold) fn += pred.count(g) ? 0 : 1;
  }
  const double f1 = 2 * tp / (2 * tp + fp + fn);
  EXPECT_GE(f1, 0.8);
  EXPECT_NEAR(evaluate_ttp(m, test).f1, f1, 1e-12);
}
