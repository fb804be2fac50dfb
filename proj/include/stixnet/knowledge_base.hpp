#pragma once

// Named STIX entities with aliases, ATT&CK/locations ingestion, immutable
// matching snapshots and the analyst review queue.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "stixnet/aho_corasick.hpp"
#include "stixnet/errors.hpp"
#include "stixnet/ids.hpp"
#include "stixnet/types.hpp"

namespace stixnet {

enum class KbSource { Manual, Attack, Locations, NovelAccepted };

inline std::string_view to_string(KbSource s) {
  switch (s) {
    case KbSource::Manual: return "manual";
    case KbSource::Attack: return "attack";
    case KbSource::Locations: return "locations";
    case KbSource::NovelAccepted: return "novel-accepted";
  }
  return "manual";
}

inline KbSource kb_source_from_string(std::string_view s) {
  if (s == "manual") return KbSource::Manual;
  if (s == "attack") return KbSource::Attack;
  if (s == "locations") return KbSource::Locations;
  if (s == "novel-accepted") return KbSource::NovelAccepted;
  throw IngestError("unknown KB source '" + std::string(s) + "'");
}

struct KbEntity {
  std::string id;
  std::string stix_type;
  std::string name;
  std::vector<std::string> aliases;
  std::vector<std::string> allowed_pos;
  KbSource source = KbSource::Manual;
  std::string created;

  friend bool operator==(const KbEntity&, const KbEntity&) = default;
};

inline void to_json(nlohmann::json& j, const KbEntity& e) {
  j = nlohmann::json{{"id", e.id},
                     {"stix_type", e.stix_type},
                     {"name", e.name},
                     {"aliases", e.aliases},
                     {"allowed_pos", e.allowed_pos},
                     {"source", std::string(to_string(e.source))},
                     {"created", e.created}};
}

inline void from_json(const nlohmann::json& j, KbEntity& e) {
  e.id = j.at("id").get<std::string>();
  e.stix_type = j.at("stix_type").get<std::string>();
  e.name = j.at("name").get<std::string>();
  e.aliases = j.value("aliases", std::vector<std::string>{});
  e.allowed_pos = j.value("allowed_pos", std::vector<std::string>{});
  e.source = kb_source_from_string(j.value("source", std::string("manual")));
  e.created = j.value("created", std::string{});
}

/// stix_type -> POS tags a KB match may carry. Unlisted types are unrestricted.
class PosFilterTable {
 public:
  PosFilterTable() = default;
  explicit PosFilterTable(std::map<std::string, std::vector<std::string>> table) : table_(std::move(table)) {}

  static PosFilterTable from_json(const nlohmann::json& j) {
    return PosFilterTable(j.at("allowed_pos").get<std::map<std::string, std::vector<std::string>>>());
  }

  static PosFilterTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open POS filter table " + path);
    return from_json(nlohmann::json::parse(in));
  }

  std::vector<std::string> allowed_for(const std::string& stix_type) const {
    auto it = table_.find(stix_type);
    return it == table_.end() ? std::vector<std::string>{} : it->second;
  }

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

struct AliasTarget {
  std::size_t entity = 0;  // index into KbSnapshot::entities
  std::string id;
  std::string stix_type;
};

/// Immutable compiled view of the KB used for matching.
struct KbSnapshot {
  uint64_t version = 0;
  std::vector<KbEntity> entities;
  AhoCorasick automaton;                                     // case-folded surfaces
  std::unordered_map<std::string, AliasTarget> alias_index;  // case-folded surface -> entity
  std::unordered_set<std::string> stoplist;                  // case-folded rejected surfaces
  std::unordered_map<std::string, std::size_t> by_id;        // entity id -> index

  const AliasTarget* resolve(std::string_view surface) const {
    auto it = alias_index.find(text::lower(surface));
    return it == alias_index.end() ? nullptr : &it->second;
  }

  const KbEntity* find(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &entities[it->second];
  }

  bool stoplisted(std::string_view surface) const { return stoplist.count(text::lower(surface)) > 0; }
};

enum class CandidateStatus { Pending, Accepted, Rejected };

inline std::string_view to_string(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::Pending: return "pending";
    case CandidateStatus::Accepted: return "accepted";
    case CandidateStatus::Rejected: return "rejected";
  }
  return "pending";
}

inline CandidateStatus candidate_status_from_string(std::string_view s) {
  if (s == "pending") return CandidateStatus::Pending;
  if (s == "accepted") return CandidateStatus::Accepted;
  if (s == "rejected") return CandidateStatus::Rejected;
  throw Error("unknown candidate status '" + std::string(s) + "'");
}

struct CandidateEntity {
  std::string id;
  std::string surface;
  std::string proposed_type;
  std::string report_id;
  Span span;
  std::string trigger;
  CandidateStatus status = CandidateStatus::Pending;

  friend bool operator==(const CandidateEntity&, const CandidateEntity&) = default;
};

inline void to_json(nlohmann::json& j, const CandidateEntity& c) {
  j = nlohmann::json{{"id", c.id},
                     {"surface", c.surface},
                     {"proposed_type", c.proposed_type},
                     {"report_id", c.report_id},
                     {"span", {c.span.start, c.span.end}},
                     {"trigger", c.trigger},
                     {"status", std::string(to_string(c.status))}};
}

inline void from_json(const nlohmann::json& j, CandidateEntity& c) {
  c.id = j.at("id").get<std::string>();
  c.surface = j.at("surface").get<std::string>();
  c.proposed_type = j.at("proposed_type").get<std::string>();
  c.report_id = j.value("report_id", std::string{});
  const auto& span = j.at("span");
  c.span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
  c.trigger = j.value("trigger", std::string{});
  c.status = candidate_status_from_string(j.value("status", std::string("pending")));
}

enum class Decision { Accept, Reject };

struct IngestReport {
  std::size_t added = 0;
  std::vector<std::string> conflicts;  // human-readable, with entity ids
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(text::trim(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(text::trim(cur));
  return out;
}

}  // namespace detail

/// Single-writer, multi-reader entity store. Readers work on immutable
/// snapshots; every mutation is serialized and, when a directory is
/// attached, appended to kb.jsonl / candidates.jsonl.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(PosFilterTable table = {}, std::optional<std::filesystem::path> dir = std::nullopt)
      : table_(std::move(table)), dir_(std::move(dir)) {
    if (dir_) load();
  }

  KnowledgeBase(const KnowledgeBase&) = delete;
  KnowledgeBase& operator=(const KnowledgeBase&) = delete;

  /// Detached in-memory copy (no persistence directory).
  std::unique_ptr<KnowledgeBase> clone_in_memory() const {
    auto copy = std::make_unique<KnowledgeBase>(table_);
    std::shared_lock lock(mutex_);
    copy->entities_ = entities_;
    copy->surfaces_ = surfaces_;
    copy->candidates_ = candidates_;
    copy->candidate_order_ = candidate_order_;
    copy->stoplist_ = stoplist_;
    copy->next_candidate_ = next_candidate_;
    copy->version_ = version_;
    return copy;
  }

  const PosFilterTable& pos_table() const noexcept { return table_; }
  const std::optional<std::filesystem::path>& directory() const noexcept { return dir_; }

  /// Adds one entity. Throws AliasConflict when any surface form is taken.
  KbEntity add_entity(const std::string& stix_type, const std::string& name, std::vector<std::string> aliases,
                      KbSource source, std::optional<std::vector<std::string>> allowed_pos = std::nullopt) {
    std::unique_lock lock(mutex_);
    return add_locked(stix_type, name, std::move(aliases), source, std::move(allowed_pos), nullptr);
  }

  /// ATT&CK STIX 2.1 bundle: tactics, techniques, mitigations, groups and
  /// software. Alias conflicts are skipped and reported.
  IngestReport ingest_attack_bundle(const nlohmann::json& bundle) {
    if (!bundle.is_object() || bundle.value("type", std::string{}) != "bundle" || !bundle.contains("objects") ||
        !bundle.at("objects").is_array())
      throw IngestError("not a STIX bundle: expected {\"type\":\"bundle\",\"objects\":[...]}");
    IngestReport report;
    std::unique_lock lock(mutex_);
    for (const auto& obj : bundle.at("objects")) {
      if (!obj.is_object() || !obj.contains("type")) throw IngestError("bundle object without a type");
      const std::string type = obj.at("type").get<std::string>();
      std::string stix_type;
      std::string alias_key;
      if (type == "x-mitre-tactic") {
        stix_type = "x-mitre-tactic";
      } else if (type == "attack-pattern") {
        stix_type = "attack-pattern";
      } else if (type == "course-of-action") {
        stix_type = "course-of-action";
      } else if (type == "intrusion-set") {
        stix_type = "intrusion-set";
        alias_key = "aliases";
      } else if (type == "malware" || type == "tool") {
        stix_type = type;
        alias_key = "x_mitre_aliases";
      } else {
        continue;
      }
      if (obj.value("revoked", false) || obj.value("x_mitre_deprecated", false)) continue;
      if (!obj.contains("name") || !obj.at("name").is_string())
        throw IngestError("bundle object " + obj.value("id", std::string("?")) + " has no name");
      std::vector<std::string> aliases;
      if (!alias_key.empty() && obj.contains(alias_key)) {
        for (const auto& a : obj.at(alias_key)) aliases.push_back(a.get<std::string>());
      }
      add_locked(stix_type, obj.at("name").get<std::string>(), std::move(aliases), KbSource::Attack, std::nullopt,
                 &report);
    }
    return report;
  }

  IngestReport ingest_attack_bundle_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw IngestError("malformed bundle " + path.string() + ": " + e.what());
    }
    return ingest_attack_bundle(j);
  }

  /// CSV with header name,nationality; nationality may hold several
  /// ';'-separated adjectives, each becoming an alias of the location.
  IngestReport ingest_locations_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IngestError("locations CSV is empty (missing header)");
    const auto header = detail::split_csv_line(line);
    std::ptrdiff_t name_col = -1, nat_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string h = text::lower(text::trim(header[i]));
      if (h == "name") name_col = static_cast<std::ptrdiff_t>(i);
      if (h == "nationality") nat_col = static_cast<std::ptrdiff_t>(i);
    }
    if (name_col < 0 || nat_col < 0) throw IngestError("locations CSV needs 'name' and 'nationality' columns");
    IngestReport report;
    std::unique_lock lock(mutex_);
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (text::trim(line).empty()) continue;
      const auto cells = detail::split_csv_line(line);
      if (cells.size() <= static_cast<std::size_t>(std::max(name_col, nat_col)))
        throw IngestError("locations CSV row " + std::to_string(row) + " has too few columns");
      const std::string name = cells[static_cast<std::size_t>(name_col)];
      if (name.empty()) continue;
      std::vector<std::string> aliases;
      std::stringstream ss(cells[static_cast<std::size_t>(nat_col)]);
      std::string adj;
      while (std::getline(ss, adj, ';')) {
        adj = text::trim(adj);
        if (!adj.empty()) aliases.push_back(adj);
      }
      add_locked("location", name, std::move(aliases), KbSource::Locations, std::nullopt, &report);
    }
    return report;
  }

  IngestReport ingest_locations_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path.string());
    return ingest_locations_csv(in);
  }

  /// Compiled view; the version moves only when content changed.
  std::shared_ptr<const KbSnapshot> snapshot() const {
    std::lock_guard cache_lock(cache_mutex_);
    std::shared_lock lock(mutex_);
    if (cached_ && cached_->version == version_) return cached_;
    auto snap = std::make_shared<KbSnapshot>();
    snap->version = version_;
    snap->entities = entities_;
    std::vector<std::string> patterns;
    for (std::size_t i = 0; i < snap->entities.size(); ++i) {
      const auto& e = snap->entities[i];
      snap->by_id.emplace(e.id, i);
      auto add = [&](const std::string& surface) {
        const std::string folded = text::lower(surface);
        if (snap->alias_index.emplace(folded, AliasTarget{i, e.id, e.stix_type}).second) patterns.push_back(folded);
      };
      add(e.name);
      for (const auto& a : e.aliases) add(a);
    }
    snap->automaton = AhoCorasick(std::move(patterns));
    snap->stoplist.insert(stoplist_.begin(), stoplist_.end());
    cached_ = std::move(snap);
    return cached_;
  }

  /// Queues a pending candidate and returns it with its assigned id.
  CandidateEntity add_candidate(CandidateEntity c) {
    std::unique_lock lock(mutex_);
    c.id = "cand-" + std::to_string(next_candidate_++);
    c.status = CandidateStatus::Pending;
    candidate_order_.push_back(c.id);
    candidates_[c.id] = c;
    append("candidates.jsonl", nlohmann::json(c));
    return c;
  }

  /// Accept creates a novel-accepted entity (type overridable); reject adds
  /// the surface to the stoplist. Other pending candidates with the same
  /// surface follow the decision.
  std::optional<KbEntity> review_candidate(const std::string& id, Decision decision,
                                           const std::optional<std::string>& editor_type = std::nullopt) {
    std::unique_lock lock(mutex_);
    auto it = candidates_.find(id);
    if (it == candidates_.end()) throw UnknownCandidate("unknown candidate " + id);
    if (it->second.status != CandidateStatus::Pending)
      throw AlreadyDecided("candidate " + id + " is already " + std::string(to_string(it->second.status)));
    CandidateEntity& cand = it->second;
    std::optional<KbEntity> created;
    CandidateStatus status;
    if (decision == Decision::Accept) {
      const std::string type = editor_type.value_or(cand.proposed_type);
      created = add_locked(type, cand.surface, {}, KbSource::NovelAccepted, std::nullopt, nullptr);
      status = CandidateStatus::Accepted;
    } else {
      stoplist_.insert(text::lower(cand.surface));
      ++version_;
      status = CandidateStatus::Rejected;
    }
    const std::string folded = text::lower(cand.surface);
    for (auto& [cid, other] : candidates_) {
      if (other.status == CandidateStatus::Pending && text::lower(other.surface) == folded) {
        other.status = status;
        append("candidates.jsonl", nlohmann::json(other));
      }
    }
    return created;
  }

  std::vector<CandidateEntity> candidates(std::optional<CandidateStatus> status = std::nullopt) const {
    std::shared_lock lock(mutex_);
    std::vector<CandidateEntity> out;
    for (const auto& id : candidate_order_) {
      const auto& c = candidates_.at(id);
      if (!status || c.status == *status) out.push_back(c);
    }
    return out;
  }

  std::optional<CandidateEntity> candidate(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = candidates_.find(id);
    if (it == candidates_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<KbEntity> entities() const {
    std::shared_lock lock(mutex_);
    return entities_;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entities_.size();
  }

  std::set<std::string> stoplist() const {
    std::shared_lock lock(mutex_);
    return {stoplist_.begin(), stoplist_.end()};
  }

 private:
  KbEntity add_locked(const std::string& stix_type, const std::string& name, std::vector<std::string> aliases,
                      KbSource source, std::optional<std::vector<std::string>> allowed_pos, IngestReport* report) {
    const std::string clean_name = text::trim(name);
    if (clean_name.empty()) throw IngestError("entity name must be nonempty");
    if (!is_entity_type(stix_type)) throw IngestError("'" + stix_type + "' is not a STIX domain object type");

    KbEntity e;
    e.stix_type = stix_type;
    e.name = clean_name;
    e.id = "kb--" + ids::uuid5(stix_type + "|" + text::lower(clean_name));
    e.source = source;
    e.created = ids::utc_now();
    e.allowed_pos = allowed_pos ? std::move(*allowed_pos) : table_.allowed_for(stix_type);

    std::set<std::string> seen{text::lower(clean_name)};
    auto taken = [&](const std::string& folded) -> const std::string* {
      auto it = surfaces_.find(folded);
      return it == surfaces_.end() ? nullptr : &it->second;
    };
    if (const auto* owner = taken(*seen.begin())) {
      if (!report) throw AliasConflict(clean_name, *owner, e.id);
      report->conflicts.push_back("'" + clean_name + "' (" + e.id + ") conflicts with " + *owner + "; skipped");
      return e;
    }
    for (auto& a : aliases) {
      a = text::trim(a);
      const std::string folded = text::lower(a);
      if (a.empty() || !seen.insert(folded).second) continue;
      if (const auto* owner = taken(folded)) {
        if (!report) throw AliasConflict(a, *owner, e.id);
        report->conflicts.push_back("alias '" + a + "' of " + e.id + " conflicts with " + *owner + "; alias dropped");
        continue;
      }
      e.aliases.push_back(a);
    }
    surfaces_[text::lower(e.name)] = e.id;
    for (const auto& a : e.aliases) surfaces_[text::lower(a)] = e.id;
    entities_.push_back(e);
    ++version_;
    if (report) ++report->added;
    append("kb.jsonl", nlohmann::json(e));
    return e;
  }

  void append(const char* file, const nlohmann::json& j) {
    if (!dir_) return;
    std::ofstream out(*dir_ / file, std::ios::app);
    if (!out) throw Error("cannot write " + (*dir_ / file).string());
    out << j.dump() << '\n';
  }

  void load() {
    std::filesystem::create_directories(*dir_);
    std::string line;
    std::size_t n = 0;
    if (std::ifstream in(*dir_ / "kb.jsonl"); in) {
      while (std::getline(in, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        KbEntity e;
        try {
          e = nlohmann::json::parse(line).get<KbEntity>();
        } catch (const nlohmann::json::exception& ex) {
          throw IngestError("kb.jsonl line " + std::to_string(n) + ": " + ex.what());
        }
        surfaces_[text::lower(e.name)] = e.id;
        for (const auto& a : e.aliases) surfaces_[text::lower(a)] = e.id;
        entities_.push_back(std::move(e));
      }
    }
    n = 0;
    if (std::ifstream in(*dir_ / "candidates.jsonl"); in) {
      while (std::getline(in, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        CandidateEntity c;
        try {
          c = nlohmann::json::parse(line).get<CandidateEntity>();
        } catch (const nlohmann::json::exception& ex) {
          throw IngestError("candidates.jsonl line " + std::to_string(n) + ": " + ex.what());
        }
        if (!candidates_.count(c.id)) candidate_order_.push_back(c.id);
        const auto dash = c.id.rfind('-');
        if (dash != std::string::npos) {
          try {
            next_candidate_ = std::max<uint64_t>(next_candidate_, std::stoull(c.id.substr(dash + 1)) + 1);
          } catch (const std::exception&) {
          }
        }
        candidates_[c.id] = std::move(c);
      }
    }
    for (const auto& [id, c] : candidates_)
      if (c.status == CandidateStatus::Rejected) stoplist_.insert(text::lower(c.surface));
    version_ = entities_.size() + stoplist_.size();
  }

  PosFilterTable table_;
  std::optional<std::filesystem::path> dir_;

  mutable std::shared_mutex mutex_;
  std::vector<KbEntity> entities_;
  std::unordered_map<std::string, std::string> surfaces_;  // folded surface -> entity id
  std::unordered_map<std::string, CandidateEntity> candidates_;
  std::vector<std::string> candidate_order_;
  std::unordered_set<std::string> stoplist_;
  uint64_t next_candidate_ = 1;
  uint64_t version_ = 0;

  mutable std::mutex cache_mutex_;
  mutable std::shared_ptr<const KbSnapshot> cached_;
};

}  // namespace stixnet
