#pragma once

// Fifty indicators over thirteen IOC types and a generator that embeds them
// in filler prose at known offsets.

#include <random>
#include <string>
#include <vector>

#include "stixnet/ioc_finder.hpp"

namespace fixture {

struct IocItem {
  std::string value;
  stixnet::IocType type;
};

inline const std::vector<IocItem>& ioc_items() {
  using T = stixnet::IocType;
  static const std::vector<IocItem> items = {
      {"192.168.1.1", T::IPv4},
      {"10.0.0.254", T::IPv4},
      {"8.8.8.8", T::IPv4},
      {"185.220.101.45", T::IPv4},
      {"203.0.113.7", T::IPv4},
      {"2001:db8::1", T::IPv6},
      {"fe80::1ff:fe23:4567:890a", T::IPv6},
      {"2001:0db8:85a3:0000:0000:8a2e:0370:7334", T::IPv6},
      {"http://evil.com/payload.exe", T::Url},
      {"https://update-check.net/api/v2?id=7", T::Url},
      {"ftp://files.badhost.org/drop/x.bin", T::Url},
      {"http://185.220.101.45:8080/gate.php", T::Url},
      {"https://cdn.example.io/a/b", T::Url},
      {"evil.com", T::Domain},
      {"update-check.net", T::Domain},
      {"malware-c2.ru", T::Domain},
      {"login.microsoftonline-secure.xyz", T::Domain},
      {"badhost.org", T::Domain},
      {"example@mail.com", T::Email},
      {"attacker@protonmail.com", T::Email},
      {"hr.dept@corp-mail.net", T::Email},
      {"x_y+z@badhost.org", T::Email},
      {"e802c6b77dd5842906ed96ab1674c525", T::Md5},
      {"d41d8cd98f00b204e9800998ecf8427e", T::Md5},
      {"5f4dcc3b5aa765d61d8327deb882cf99", T::Md5},
      {"098f6bcd4621d373cade4e832627b4f6", T::Md5},
      {"da39a3ee5e6b4b0d3255bfef95601890afd80709", T::Sha1},
      {"a94a8fe5ccb19ba61c4c0873d391e987982fbbd3", T::Sha1},
      {"2fd4e1c67a2d28fced849ee1bb76e7391b93eb12", T::Sha1},
      {"e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855", T::Sha256},
      {"9f86d081884c7d659a2feaa0c55ad015a3bf4f1b2b0b822cd15d6c15b0f00a08", T::Sha256},
      {"2c26b46b68ffc68ff99b453c1d30413413422d706483bfa0f98a5e886266e7ae", T::Sha256},
      {"/path/to/file", T::FilePath},
      {"/tmp/.x/payload.sh", T::FilePath},
      {"/etc/cron.d/update", T::FilePath},
      {"C:\\Windows\\System32\\evil.dll", T::FilePath},
      {"C:\\Users\\Public\\run.bat", T::FilePath},
      {"HKLM\\Software\\Microsoft\\Windows\\CurrentVersion\\Run", T::RegistryKey},
      {"HKEY_CURRENT_USER\\Software\\Classes\\mscfile", T::RegistryKey},
      {"HKCU\\Environment", T::RegistryKey},
      {"CVE-2021-44228", T::Cve},
      {"CVE-2017-0144", T::Cve},
      {"CVE-2023-23397", T::Cve},
      {"CVE-1999-0001", T::Cve},
      {"T1518", T::AttackTechniqueId},
      {"T1518.001", T::AttackTechniqueId},
      {"T1059.001", T::AttackTechniqueId},
      {"T1566", T::AttackTechniqueId},
      {"1BoatSLRHtKNngkdXEeobR76b53LETtpyT", T::Bitcoin},
      {"bc1qar0srrr7xfkvy5l643lydnw9re59gtzzwf5mdq", T::Bitcoin},
  };
  return items;
}

struct Embedded {
  std::string text;
  std::vector<stixnet::IocMatch> truth;
};

/// Random filler prose with the given items inserted at recorded offsets.
inline Embedded embed(const std::vector<IocItem>& items, std::mt19937& rng) {
  static const std::vector<std::string> filler = {
      "the", "actor", "contacted", "server", "and", "then", "dropped", "payload", "observed",
      "during", "analysis", "we", "noticed", "traffic", "to", "host", "persistence", "via"};
  static const std::vector<std::string> after = {"", ".", ",", ";", ")"};
  std::uniform_int_distribution<std::size_t> word(0, filler.size() - 1);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_int_distribution<std::size_t> punct(0, after.size() - 1);
  Embedded out;
  for (const auto& item : items) {
    for (int i = count(rng); i > 0; --i) out.text += filler[word(rng)] + " ";
    const auto p = after[punct(rng)];
    const bool paren = p == ")";
    if (paren) out.text += "(";
    const std::size_t start = out.text.size();
    out.text += item.value;
    out.truth.push_back({item.type, item.value, {start, start + item.value.size()},
                         std::string(stixnet::map_ioc_to_stix(item.type))});
    out.text += p + " ";
  }
  out.text += "end.";
  return out;
}

/// Inverse of refanging for the fixture: dots, at-signs and the URL scheme.
inline std::string defang(const std::string& v) {
  std::string out;
  std::size_t i = 0;
  if (v.rfind("http", 0) == 0) {
    out = "hxxp";
    i = 4;
  }
  for (; i < v.size(); ++i) {
    if (v[i] == '.') out += "[.]";
    else if (v[i] == '@') out += "[at]";
    else out.push_back(v[i]);
  }
  return out;
}

}  // namespace fixture
