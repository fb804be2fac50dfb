#include <gtest/gtest.h>

#include "stixnet/kb_matcher.hpp"
#include "stixnet/novel_extractor.hpp"
#include "test_data.hpp"

using namespace stixnet;

namespace {

const Lexicon& lex() {
  static const Lexicon l = Lexicon::load_dir(testdata::data_dir());
  return l;
}
const NovelRules& rules() {
  static const NovelRules r = NovelRules::load(testdata::path("novel_rules.json"));
  return r;
}

struct Run {
  NormalizedText nt;
  std::vector<EntityMention> kb;
  NovelResult novel;
};

Run run(const std::string& text, KnowledgeBase& kb) {
  Run r;
  r.nt = split_sentences(normalize(text));
  auto snap = kb.snapshot();
  auto graphs = analyze(r.nt, lex());
  r.kb = match_entities(r.nt, *snap);
  r.novel = extract_novel(r.nt, graphs, r.kb, *snap, rules(), "r1");
  return r;
}

Run run(const std::string& text) {
  KnowledgeBase kb;
  return run(text, kb);
}

std::vector<std::pair<std::string, std::string>> found(const Run& r) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& m : r.novel.mentions) out.emplace_back(m.surface, m.stix_type);
  return out;
}

using Pairs = std::vector<std::pair<std::string, std::string>>;

}  // namespace

TEST(NovelRules, LoadsBundledFile) {
  EXPECT_EQ(rules().rules.size(), 3u);
  EXPECT_DOUBLE_EQ(rules().confidence, 0.8);
  EXPECT_EQ(rules().type_nouns.at("backdoor"), "malware");
  EXPECT_EQ(rules().type_nouns.at("gang"), "intrusion-set");
  EXPECT_EQ(rules().type_nouns.at("utility"), "tool");
  EXPECT_EQ(rules().type_nouns.at("operation"), "campaign");
  for (const auto& [noun, type] : rules().type_nouns) EXPECT_TRUE(is_sdo_type(type)) << noun;
}

TEST(NovelRules, RejectsInvalidData) {
  auto base = nlohmann::json::parse(R"({"rules":[{"id":"a","frame":"naming_verb","trigger_lemmas":["name"]}],
                                        "type_nouns":{"malware":"malware"}})");
  EXPECT_NO_THROW(NovelRules::from_json(base));
  auto bad_type = base;
  bad_type["type_nouns"]["gizmo"] = "gadget";
  EXPECT_THROW(NovelRules::from_json(bad_type), ConfigError);
  auto bad_case = base;
  bad_case["rules"][0]["trigger_lemmas"] = {"Name"};
  EXPECT_THROW(NovelRules::from_json(bad_case), ConfigError);
  auto bad_frame = base;
  bad_frame["rules"][0]["frame"] = "regex";
  EXPECT_THROW(NovelRules::from_json(bad_frame), ConfigError);
}

TEST(Novel, BackdoorDubbed) {
  auto r = run("Researchers found a new backdoor dubbed SUNBURST in the update.");
  EXPECT_EQ(found(r), (Pairs{{"SUNBURST", "malware"}}));
  ASSERT_EQ(r.novel.candidates.size(), 1u);
  const auto& c = r.novel.candidates[0];
  EXPECT_EQ(c.surface, "SUNBURST");
  EXPECT_EQ(c.proposed_type, "malware");
  EXPECT_EQ(c.report_id, "r1");
  EXPECT_EQ(c.status, CandidateStatus::Pending);
  EXPECT_EQ(r.nt.slice(c.span), "SUNBURST");
  EXPECT_EQ(c.trigger, "passive_trigger:dubbed");
  EXPECT_DOUBLE_EQ(r.novel.mentions[0].confidence, 0.8);
  EXPECT_EQ(r.novel.mentions[0].provenance, Provenance::Novel);
}

TEST(Novel, TypeNounAppositive) {
  KnowledgeBase kb;
  kb.add_entity("intrusion-set", "APT29", {}, KbSource::Manual);
  kb.add_entity("tool", "7-Zip", {}, KbSource::Manual);
  auto r = run("APT29 used 7-Zip to decode the malware Raindrop.", kb);
  EXPECT_EQ(found(r), (Pairs{{"Raindrop", "malware"}}));
  EXPECT_EQ(r.novel.candidates.at(0).trigger, "type_noun_appos:malware");
}

TEST(Novel, KnownEntityBlocksCandidate) {
  KnowledgeBase kb;
  kb.add_entity("intrusion-set", "APT29", {}, KbSource::Manual);
  auto r = run("They saw the malware APT29 again.", kb);
  EXPECT_TRUE(r.novel.mentions.empty());
  EXPECT_TRUE(r.novel.candidates.empty());
}

TEST(Novel, AliasResolutionBlocksCandidateWithoutOverlap) {
  KnowledgeBase kb;
  kb.add_entity("malware", "Sunburst", {"Solorigate"}, KbSource::Manual);
  // No kb mentions passed in: the snapshot check alone must reject it.
  auto nt = split_sentences(normalize("A backdoor dubbed SOLORIGATE appeared."));
  auto res = extract_novel(nt, analyze(nt, lex()), {}, *kb.snapshot(), rules());
  EXPECT_TRUE(res.mentions.empty());
}

TEST(Novel, StoplistBlocksCandidate) {
  KnowledgeBase kb;
  auto c = kb.add_candidate({"", "Update", "malware", "r0", {0, 6}, "x", CandidateStatus::Pending});
  kb.review_candidate(c.id, Decision::Reject);
  auto r = run("The malware Update spread.", kb);
  EXPECT_TRUE(r.novel.mentions.empty());
}

TEST(Novel, KnownAsMultiToken) {
  auto r = run("The group known as Cozy Bear deployed a loader called TEARDROP.");
  EXPECT_EQ(found(r), (Pairs{{"Cozy Bear", "intrusion-set"}, {"TEARDROP", "malware"}}));
}

TEST(Novel, NamingVerbFrames) {
  EXPECT_EQ(found(run("Microsoft tracks this actor as NOBELIUM.")), (Pairs{{"NOBELIUM", "intrusion-set"}}));
  EXPECT_EQ(found(run("Researchers named the ransomware BlackMatter.")), (Pairs{{"BlackMatter", "malware"}}));
}

TEST(Novel, NoTypeContextNoCandidate) {
  EXPECT_TRUE(run("Analysts dubbed it Hafnium.").novel.mentions.empty());
  EXPECT_TRUE(run("The weather was called Storm Ciara.").novel.mentions.empty());
}

TEST(Novel, LowercaseCaptureRejected) {
  EXPECT_TRUE(run("They dropped the malware payload first.").novel.mentions.empty());
  EXPECT_TRUE(run("A tool dubbed something else.").novel.mentions.empty());
}

TEST(Novel, CandidatesDedupedPerReportMentionsKept) {
  auto r = run("The malware Raindrop loads. Later the trojan Raindrop beacons.");
  EXPECT_EQ(r.novel.mentions.size(), 2u);
  ASSERT_EQ(r.novel.candidates.size(), 1u);
  for (const auto& m : r.novel.mentions) EXPECT_EQ(text::lower(m.surface), text::lower(r.novel.candidates[0].surface));
}

TEST(Novel, MentionsNeverOverlap) {
  auto r = run("The backdoor Raindrop, dubbed Raindrop by analysts, and the tool AdFind Lite Pro Max Extra.");
  for (std::size_t i = 0; i < r.novel.mentions.size(); ++i)
    for (std::size_t j = i + 1; j < r.novel.mentions.size(); ++j)
      EXPECT_FALSE(r.novel.mentions[i].span->overlaps(*r.novel.mentions[j].span));
  for (const auto& m : r.novel.mentions) EXPECT_LE(std::count(m.surface.begin(), m.surface.end(), ' '), 3);
}

TEST(Novel, InvariantsOverFixtureSentences) {
  KnowledgeBase kb;
  kb.add_entity("intrusion-set", "APT29", {"Cozy Bear", "NOBELIUM"}, KbSource::Manual);
  kb.add_entity("malware", "Sunburst", {}, KbSource::Manual);
  const std::vector<std::string> docs = {
      "The group known as Cozy Bear deployed a loader called TEARDROP.",
      "Microsoft tracks this actor as NOBELIUM. A new backdoor dubbed SUNBURST and the implant GoldMax were found.",
      "The malware Raindrop and the tool AdFind were used in the campaign SolarStorm.",
  };
  for (const auto& d : docs) {
    auto a = run(d, kb);
    auto b = run(d, kb);
    EXPECT_EQ(a.novel.mentions, b.novel.mentions);
    EXPECT_EQ(a.novel.candidates, b.novel.candidates);
    auto snap = kb.snapshot();
    for (const auto& c : a.novel.candidates) EXPECT_EQ(snap->resolve(c.surface), nullptr) << c.surface;
    for (const auto& m : a.novel.mentions) {
      EXPECT_TRUE(std::any_of(a.novel.candidates.begin(), a.novel.candidates.end(),
                              [&](const auto& c) { return text::iequals(c.surface, m.surface); }));
      for (const auto& k : a.kb) EXPECT_FALSE(m.span->overlaps(*k.span));
    }
  }
  auto r = run(docs[1], kb);
  EXPECT_EQ(found(r), (Pairs{{"GoldMax", "malware"}}));
}
