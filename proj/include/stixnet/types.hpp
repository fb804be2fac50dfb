#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "stixnet/errors.hpp"

namespace stixnet {

/// Half-open byte range [start, end) into a text buffer.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start; }
  bool empty() const noexcept { return end <= start; }
  bool overlaps(const Span& o) const noexcept { return start < o.end && o.start < end; }
  bool contains(const Span& o) const noexcept { return start <= o.start && o.end <= end; }
  bool contains(std::size_t pos) const noexcept { return start <= pos && pos < end; }

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

inline constexpr std::array<std::string_view, 18> kSdoTypes = {
    "attack-pattern", "campaign",       "course-of-action", "grouping",
    "identity",       "indicator",      "infrastructure",   "intrusion-set",
    "location",       "malware",        "malware-analysis", "note",
    "observed-data",  "opinion",        "report",           "threat-actor",
    "tool",           "vulnerability"};

inline constexpr std::string_view kMitreTactic = "x-mitre-tactic";

inline bool is_sdo_type(std::string_view t) {
  return std::find(kSdoTypes.begin(), kSdoTypes.end(), t) != kSdoTypes.end();
}

/// SDO types plus the ATT&CK tactic extension accepted by the knowledge base.
inline bool is_entity_type(std::string_view t) { return is_sdo_type(t) || t == kMitreTactic; }

enum class Provenance { Ioc, Kb, Novel, Ttp };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Ioc: return "ioc";
    case Provenance::Kb: return "kb";
    case Provenance::Novel: return "novel";
    case Provenance::Ttp: return "ttp";
  }
  return "unknown";
}

inline Provenance provenance_from_string(std::string_view s) {
  if (s == "ioc") return Provenance::Ioc;
  if (s == "kb") return Provenance::Kb;
  if (s == "novel") return Provenance::Novel;
  if (s == "ttp") return Provenance::Ttp;
  throw Error("unknown provenance '" + std::string(s) + "'");
}

/// A typed extraction. TTP mentions are document-level and carry no span.
struct EntityMention {
  std::string surface;
  std::optional<Span> span;
  std::string stix_type;
  std::optional<std::string> kb_id;
  double confidence = 1.0;
  Provenance provenance = Provenance::Kb;
  // Canonical entity name (KB name, TTP label name); equals surface otherwise.
  std::string canonical;

  bool has_span() const noexcept { return span.has_value(); }
  const std::string& name() const noexcept { return canonical.empty() ? surface : canonical; }

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

namespace text {

inline char ascii_lower(char c) noexcept {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = ascii_lower(c);
  return out;
}

inline bool is_alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
inline bool is_upper(char c) noexcept { return c >= 'A' && c <= 'Z'; }
inline bool is_lower(char c) noexcept { return c >= 'a' && c <= 'z'; }
inline bool is_alnum(char c) noexcept { return is_alpha(c) || is_digit(c); }
inline bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
inline bool is_hex(char c) noexcept {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

/// Word characters for entity boundaries: letters, digits, '-', and any
/// non-ASCII byte (treated as a letter).
inline bool is_word_char(char c) noexcept {
  return is_alnum(c) || c == '-' || static_cast<unsigned char>(c) >= 0x80;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
  return true;
}

inline bool starts_with_icase(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  return iequals(s.substr(pos, prefix.size()), prefix);
}

}  // namespace text
}  // namespace stixnet
