#include <gtest/gtest.h>

#include "ioc_fixture.hpp"
#include "stixnet/ioc_finder.hpp"
#include "test_data.hpp"

using namespace stixnet;

namespace {

const IocRuleSet& rules() {
  static const IocRuleSet r = IocRuleSet::load(testdata::path("ioc_rules.json"));
  return r;
}

std::vector<IocMatch> find(const std::string& s) { return find_iocs(s, rules()); }

}  // namespace

TEST(IocFinder, Cve) {
  auto m = find("Exploits CVE-2021-44228 in Log4j.");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].ioc_type, IocType::Cve);
  EXPECT_EQ(m[0].stix_type, "vulnerability");
  EXPECT_EQ(m[0].value, "CVE-2021-44228");
}

TEST(IocFinder, Md5) {
  auto m = find("hash e802c6b77dd5842906ed96ab1674c525");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].ioc_type, IocType::Md5);
  EXPECT_EQ(m[0].stix_type, "indicator");
}

TEST(IocFinder, TechniqueIdWithSubtechnique) {
  auto m = find("uses T1518.001 and T1518");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].value, "T1518.001");
  EXPECT_EQ(m[0].stix_type, "attack-pattern");
  EXPECT_EQ(m[1].value, "T1518");
}

TEST(IocFinder, Ipv4OctetRange) {
  EXPECT_TRUE(find("999.1.1.1").empty());
  // Oracle: every value 0..300 in the first octet; valid iff <= 255.
  for (int v = 0; v <= 300; ++v) {
    const std::string ip = std::to_string(v) + ".1.2.3";
    const auto m = find("host " + ip + " seen");
    const bool expected = v <= 255;
    ASSERT_EQ(!m.empty(), expected) << ip;
    if (expected) {
      ASSERT_EQ(m[0].value, ip);
    }
  }
}

TEST(IocFinder, CveYearValidation) {
  EXPECT_TRUE(find("CVE-1998-0001").empty());
  EXPECT_EQ(find("cve-1999-0001").size(), 1u);
}

TEST(IocFinder, HashWordBoundaries) {
  const std::string sha256 = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
  auto m = find(sha256);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].ioc_type, IocType::Sha256);
  EXPECT_TRUE(find(sha256 + "ab").empty());  // 66 hex chars: no hash of any length
  EXPECT_TRUE(find("xe802c6b77dd5842906ed96ab1674c525").empty());
}

TEST(IocFinder, LongestMatchWinsOverlaps) {
  auto m = find("Beacon to http://evil.com/gate.php and mail attacker@evil.com.");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].ioc_type, IocType::Url);
  EXPECT_EQ(m[0].value, "http://evil.com/gate.php");
  EXPECT_EQ(m[1].ioc_type, IocType::Email);
  EXPECT_EQ(m[1].value, "attacker@evil.com");
}

TEST(IocFinder, DomainNeedsKnownTld) {
  EXPECT_TRUE(find("open file.exe and notes.txt").empty());
  auto m = find("resolves evil.com daily");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].ioc_type, IocType::Domain);
}

TEST(IocFinder, TrailingPunctuationTrimmed) {
  auto m = find("Dropped to /tmp/x/y.sh. Then C:\\Temp\\a.exe, done.");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].value, "/tmp/x/y.sh");
  EXPECT_EQ(m[1].value, "C:\\Temp\\a.exe");
}

TEST(IocFinder, NoMatchesOnProse) { EXPECT_TRUE(find("APT29 used 7-Zip to decode the malware Raindrop.").empty()); }

TEST(IocFinder, SpanFidelityAndDeterminism) {
  std::mt19937 rng(3);
  auto e = fixture::embed(fixture::ioc_items(), rng);
  auto a = find(e.text);
  auto b = find(e.text);
  EXPECT_EQ(a, b);
  for (const auto& m : a) EXPECT_EQ(e.text.substr(m.span.start, m.span.length()), m.value);
}

TEST(IocFinder, RandomEmbeddingsRecoverGroundTruth) {
  std::mt19937 rng(42);
  auto items = fixture::ioc_items();
  for (int round = 0; round < 40; ++round) {
    std::shuffle(items.begin(), items.end(), rng);
    auto e = fixture::embed(items, rng);
    EXPECT_EQ(find(e.text), e.truth) << e.text;
  }
}

TEST(IocFinder, RefangComposition) {
  for (const auto& item : fixture::ioc_items()) {
    const std::string plain = "seen " + item.value + " today";
    const std::string defanged = "seen " + fixture::defang(item.value) + " today";
    auto a = find_iocs(normalize(plain), rules());
    auto b = find_iocs(normalize(defanged), rules());
    ASSERT_EQ(a.size(), 1u) << item.value;
    ASSERT_EQ(b.size(), 1u) << defanged;
    EXPECT_EQ(a[0].value, b[0].value);
    EXPECT_EQ(a[0].ioc_type, b[0].ioc_type);
  }
}

TEST(MapIocToStix, Table) {
  EXPECT_EQ(map_ioc_to_stix(IocType::Md5), "indicator");
  EXPECT_EQ(map_ioc_to_stix(IocType::Cve), "vulnerability");
  EXPECT_EQ(map_ioc_to_stix(IocType::AttackTechniqueId), "attack-pattern");
  EXPECT_EQ(map_ioc_to_stix("Bitcoin"), "indicator");
  EXPECT_THROW(map_ioc_to_stix("YARA"), UnknownIocType);
}

TEST(IocRuleSet, RuleFileIsVersioned) {
  EXPECT_EQ(rules().version(), 1);
  EXPECT_GE(rules().rules().size(), 13u);
}
