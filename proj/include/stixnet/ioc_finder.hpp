#pragma once

// Regex-driven Indicator of Compromise extraction with span tracking.

#include <arpa/inet.h>

#include <boost/regex.hpp>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stixnet/errors.hpp"
#include "stixnet/text_normalizer.hpp"
#include "stixnet/types.hpp"

namespace stixnet {

enum class IocType {
  IPv4,
  IPv6,
  Url,
  Domain,
  Email,
  Md5,
  Sha1,
  Sha256,
  FilePath,
  RegistryKey,
  Cve,
  AttackTechniqueId,
  Bitcoin,
};

inline constexpr std::array<std::pair<IocType, std::string_view>, 13> kIocTypeNames = {{
    {IocType::IPv4, "IPv4"},
    {IocType::IPv6, "IPv6"},
    {IocType::Url, "URL"},
    {IocType::Domain, "domain"},
    {IocType::Email, "email"},
    {IocType::Md5, "MD5"},
    {IocType::Sha1, "SHA1"},
    {IocType::Sha256, "SHA256"},
    {IocType::FilePath, "file_path"},
    {IocType::RegistryKey, "registry_key"},
    {IocType::Cve, "CVE"},
    {IocType::AttackTechniqueId, "AttackTechniqueId"},
    {IocType::Bitcoin, "Bitcoin"},
}};

inline std::string_view to_string(IocType t) {
  for (const auto& [type, name] : kIocTypeNames)
    if (type == t) return name;
  return "unknown";
}

inline IocType ioc_type_from_string(std::string_view s) {
  for (const auto& [type, name] : kIocTypeNames)
    if (name == s) return type;
  throw UnknownIocType("unknown IOC type '" + std::string(s) + "'");
}

inline std::string_view map_ioc_to_stix(IocType t) {
  switch (t) {
    case IocType::Cve: return "vulnerability";
    case IocType::AttackTechniqueId: return "attack-pattern";
    default: return "indicator";
  }
}

inline std::string_view map_ioc_to_stix(std::string_view ioc_type) {
  return map_ioc_to_stix(ioc_type_from_string(ioc_type));
}

struct IocMatch {
  IocType ioc_type;
  std::string value;
  Span span;
  std::string stix_type;

  friend bool operator==(const IocMatch&, const IocMatch&) = default;
};

/// Compiled, immutable IOC rule set; safe to share across threads.
class IocRuleSet {
 public:
  enum class Hint { TrimTrailingPunct, KnownTld, Ipv4Octets, Ipv6Valid, CveYear, BitcoinShape };

  struct Rule {
    std::string name;
    IocType type;
    boost::regex pattern;
    std::vector<Hint> hints;
  };

  static IocRuleSet from_json(const nlohmann::json& j) {
    IocRuleSet set;
    set.version_ = j.value("version", 1);
    for (const auto& t : j.at("tlds")) set.tlds_.insert(text::lower(t.get<std::string>()));
    for (const auto& r : j.at("rules")) {
      Rule rule;
      rule.name = r.at("name").get<std::string>();
      rule.type = ioc_type_from_string(r.at("type").get<std::string>());
      boost::regex::flag_type flags = boost::regex::perl;
      if (r.value("icase", false)) flags |= boost::regex::icase;
      rule.pattern = boost::regex(r.at("pattern").get<std::string>(), flags);
      for (const auto& h : r.value("hints", nlohmann::json::array())) rule.hints.push_back(hint_from_string(h.get<std::string>()));
      set.rules_.push_back(std::move(rule));
    }
    return set;
  }

  static IocRuleSet load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open IOC rule file " + path);
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw Error("bad IOC rule file " + path + ": " + e.what());
    }
  }

  int version() const noexcept { return version_; }
  const std::vector<Rule>& rules() const noexcept { return rules_; }
  bool known_tld(std::string_view tld) const { return tlds_.count(text::lower(tld)) > 0; }

 private:
  static Hint hint_from_string(const std::string& s) {
    if (s == "trim_trailing_punct") return Hint::TrimTrailingPunct;
    if (s == "known_tld") return Hint::KnownTld;
    if (s == "ipv4_octets") return Hint::Ipv4Octets;
    if (s == "ipv6_valid") return Hint::Ipv6Valid;
    if (s == "cve_year") return Hint::CveYear;
    if (s == "bitcoin_shape") return Hint::BitcoinShape;
    throw Error("unknown IOC validation hint '" + s + "'");
  }

  int version_ = 1;
  std::vector<Rule> rules_;
  std::set<std::string> tlds_;
};

namespace detail {

inline bool valid_ipv4(std::string_view v) {
  int octet = -1;
  for (char c : v) {
    if (c == '.') {
      if (octet < 0 || octet > 255) return false;
      octet = -1;
    } else {
      octet = (octet < 0 ? 0 : octet * 10) + (c - '0');
    }
  }
  return octet >= 0 && octet <= 255;
}

inline bool valid_ipv6(const std::string& v) {
  in6_addr addr{};
  return inet_pton(AF_INET6, v.c_str(), &addr) == 1;
}

inline bool valid_cve_year(std::string_view v) {
  // "CVE-YYYY-..."
  if (v.size() < 8) return false;
  const int year = std::stoi(std::string(v.substr(4, 4)));
  return year >= 1999;
}

// Legacy base58 addresses mix upper and lower case; hex blobs never do.
inline bool bitcoin_shape(std::string_view v) {
  if (v.substr(0, 3) == "bc1") return true;
  bool upper = false, lower = false;
  for (char c : v) {
    upper |= text::is_upper(c);
    lower |= text::is_lower(c);
  }
  return upper && lower;
}

inline std::size_t trim_trailing(std::string_view v) {
  std::size_t n = v.size();
  while (n > 0) {
    const char c = v[n - 1];
    if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == ')' || c == '\'' || c == '"')
      --n;
    else
      break;
  }
  return n;
}

}  // namespace detail

/// Longest span first, ties to the earlier start, then to the earlier rule.
template <typename Candidate, typename SpanOf, typename RankOf>
std::vector<Candidate> select_non_overlapping(std::vector<Candidate> cands, SpanOf span_of, RankOf rank_of) {
  std::stable_sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
    const Span sa = span_of(a), sb = span_of(b);
    if (sa.length() != sb.length()) return sa.length() > sb.length();
    if (sa.start != sb.start) return sa.start < sb.start;
    return rank_of(a) < rank_of(b);
  });
  std::vector<Candidate> kept;
  std::map<std::size_t, std::size_t> taken;  // start -> end, disjoint
  for (auto& c : cands) {
    const Span s = span_of(c);
    auto next = taken.lower_bound(s.start);
    if (next != taken.end() && next->first < s.end) continue;
    if (next != taken.begin() && std::prev(next)->second > s.start) continue;
    taken.emplace(s.start, s.end);
    kept.push_back(std::move(c));
  }
  std::sort(kept.begin(), kept.end(),
            [&](const Candidate& a, const Candidate& b) { return span_of(a).start < span_of(b).start; });
  return kept;
}

inline std::vector<IocMatch> find_iocs(std::string_view text, const IocRuleSet& rules) {
  struct Cand {
    IocMatch m;
    std::size_t rank;
  };
  std::vector<Cand> cands;
  const std::string owned(text);
  for (std::size_t r = 0; r < rules.rules().size(); ++r) {
    const auto& rule = rules.rules()[r];
    for (boost::sregex_iterator it(owned.begin(), owned.end(), rule.pattern), end; it != end; ++it) {
      std::size_t start = static_cast<std::size_t>(it->position(std::size_t{0}));
      std::string value = it->str(std::size_t{0});
      bool ok = true;
      for (auto hint : rule.hints) {
        switch (hint) {
          case IocRuleSet::Hint::TrimTrailingPunct: value.resize(detail::trim_trailing(value)); break;
          case IocRuleSet::Hint::KnownTld: {
            const auto dot = value.rfind('.');
            ok = dot != std::string::npos && rules.known_tld(std::string_view(value).substr(dot + 1));
            break;
          }
          case IocRuleSet::Hint::Ipv4Octets: ok = detail::valid_ipv4(value); break;
          case IocRuleSet::Hint::Ipv6Valid: ok = detail::valid_ipv6(value); break;
          case IocRuleSet::Hint::CveYear: ok = detail::valid_cve_year(value); break;
          case IocRuleSet::Hint::BitcoinShape: ok = detail::bitcoin_shape(value); break;
        }
        if (!ok) break;
      }
      if (!ok || value.empty()) continue;
      const Span span{start, start + value.size()};
      cands.push_back({{rule.type, std::move(value), span, std::string(map_ioc_to_stix(rule.type))}, r});
    }
  }
  auto kept = select_non_overlapping(
      std::move(cands), [](const Cand& c) { return c.m.span; }, [](const Cand& c) { return c.rank; });
  std::vector<IocMatch> out;
  out.reserve(kept.size());
  for (auto& c : kept) out.push_back(std::move(c.m));
  return out;
}

inline std::vector<IocMatch> find_iocs(const NormalizedText& nt, const IocRuleSet& rules) {
  return find_iocs(nt.text, rules);
}

inline EntityMention to_mention(const IocMatch& m) {
  EntityMention em;
  em.surface = m.value;
  em.span = m.span;
  em.stix_type = m.stix_type;
  em.confidence = 1.0;
  em.provenance = Provenance::Ioc;
  return em;
}

}  // namespace stixnet
