#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "stixnet/errors.hpp"
#include "stixnet/ids.hpp"
#include "stixnet/knowledge_base.hpp"
#include "stixnet/pipeline.hpp"

namespace stixnet {

/// Queues the run's candidates in the KB and writes the assigned ids back
/// into the result. A surface that already has a pending candidate of the
/// same type is not queued twice.
inline void persist_candidates(KnowledgeBase& kb, ExtractionResult& r) {
  auto pending = kb.candidates(CandidateStatus::Pending);
  for (auto& c : r.candidates) {
    auto same = std::find_if(pending.begin(), pending.end(), [&](const CandidateEntity& p) {
      return p.proposed_type == c.proposed_type && text::lower(p.surface) == text::lower(c.surface);
    });
    if (same != pending.end()) {
      c.id = same->id;
      continue;
    }
    c.report_id = r.report_id;
    c = kb.add_candidate(c);
    pending.push_back(c);
  }
}

enum class ReportStatus { Queued, Done, Failed };

inline std::string_view to_string(ReportStatus s) {
  switch (s) {
    case ReportStatus::Queued: return "queued";
    case ReportStatus::Done: return "done";
    case ReportStatus::Failed: return "failed";
  }
  return "unknown";
}

struct StoredReport {
  std::string report_id;
  RawDocument raw;
  ReportStatus status = ReportStatus::Queued;
  std::optional<ExtractionResult> result;
  std::string error;
};

/// Thread-safe in-memory report table.
class ReportStore {
 public:
  void put(StoredReport r) {
    auto stored = std::make_shared<const StoredReport>(std::move(r));
    std::unique_lock lock(mutex_);
    reports_[stored->report_id] = std::move(stored);
  }

  std::shared_ptr<const StoredReport> get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = reports_.find(id);
    return it == reports_.end() ? nullptr : it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return reports_.size();
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const StoredReport>> reports_;
};

struct ServiceOptions {
  std::size_t max_body_bytes = 5 * 1024 * 1024;
  PipelineConfig config;
  std::optional<std::filesystem::path> static_dir;
  std::size_t default_page_size = 50;
  std::size_t max_page_size = 500;
};

class Service {
 public:
  Service(KnowledgeBase& kb, std::shared_ptr<const Resources> res, ServiceOptions opt = {})
      : kb_(kb), res_(std::move(res)), opt_(std::move(opt)) {}

  ReportStore& reports() noexcept { return reports_; }
  const ServiceOptions& options() const noexcept { return opt_; }

  void install(httplib::Server& srv) {
    srv.set_payload_max_length(opt_.max_body_bytes + 1);
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        if (ep) std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        error(res, 500, "internal_error", e.what());
        return;
      } catch (...) {
      }
      error(res, 500, "internal_error", "unknown exception");
    });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      switch (res.status) {
        case 404: error(res, 404, "not_found", "no such resource"); break;
        case 413: error(res, 413, "payload_too_large", "request body exceeds the size limit"); break;
        default: error(res, res.status, "http_error", httplib::status_message(res.status));
      }
    });

    srv.Post("/reports", [this](const httplib::Request& q, httplib::Response& r) { post_report(q, r); });
    srv.Get(R"(/reports/([^/]+)/extraction)",
            [this](const httplib::Request& q, httplib::Response& r) { get_extraction(q, r); });
    srv.Get(R"(/reports/([^/]+))", [this](const httplib::Request& q, httplib::Response& r) { get_report(q, r); });
    srv.Get("/candidates", [this](const httplib::Request& q, httplib::Response& r) { get_candidates(q, r); });
    srv.Post(R"(/candidates/([^/]+)/decision)",
             [this](const httplib::Request& q, httplib::Response& r) { post_decision(q, r); });
    srv.Get("/kb/entities", [this](const httplib::Request& q, httplib::Response& r) { get_entities(q, r); });
    if (opt_.static_dir) srv.set_mount_point("/", opt_.static_dir->string());
  }

  static void error(httplib::Response& res, int status, const std::string& code, const std::string& detail) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", code}, {"detail", detail}}.dump(), "application/json");
  }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  // Body: JSON {"content", "format", "config"} or raw text with ?format=.
  void post_report(const httplib::Request& req, httplib::Response& res) {
    if (req.body.size() > opt_.max_body_bytes)
      return error(res, 413, "payload_too_large",
                   "body is " + std::to_string(req.body.size()) + " bytes, limit " +
                       std::to_string(opt_.max_body_bytes));
    RawDocument doc;
    std::string format = req.has_param("format") ? req.get_param_value("format") : "text";
    nlohmann::json overrides = nlohmann::json::object();
    if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
      auto body = nlohmann::json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) return error(res, 400, "bad_request", "body is not a JSON object");
      if (!body.contains("content") || !body["content"].is_string())
        return error(res, 400, "bad_request", "missing string field 'content'");
      doc.content = body["content"].get<std::string>();
      if (body.contains("format")) {
        if (!body["format"].is_string()) return error(res, 400, "bad_request", "'format' must be a string");
        format = body["format"].get<std::string>();
      }
      if (body.contains("config")) overrides = body["config"];
    } else {
      doc.content = req.body;
    }
    if (text::trim(doc.content).empty()) return error(res, 400, "empty_document", "report content is empty");
    if (format == "html") {
      doc.format = DocFormat::Html;
    } else if (format != "text") {
      return error(res, 400, "bad_request", "format must be 'text' or 'html'");
    }

    PipelineConfig cfg;
    try {
      cfg = opt_.config.with_overrides(overrides);
    } catch (const Error& e) {
      return error(res, 400, "bad_config", e.what());
    } catch (const nlohmann::json::exception& e) {
      return error(res, 400, "bad_config", e.what());
    }

    doc.id = "report--" + ids::uuid4();
    StoredReport stored{doc.id, doc, ReportStatus::Queued, std::nullopt, {}};
    reports_.put(stored);
    try {
      auto snap = kb_.snapshot();
      auto result = run_pipeline(doc, *snap, *res_, cfg);
      persist_candidates(kb_, result);
      stored.result = std::move(result);
      stored.status = ReportStatus::Done;
    } catch (const std::exception& e) {
      stored.status = ReportStatus::Failed;
      stored.error = e.what();
    }
    reports_.put(std::move(stored));
    reply(res, 202, {{"report_id", doc.id}});
  }

  void get_report(const httplib::Request& req, httplib::Response& res) {
    auto r = reports_.get(req.matches[1]);
    if (!r) return error(res, 404, "unknown_report", "no report " + std::string(req.matches[1]));
    nlohmann::json j{{"report_id", r->report_id}, {"status", std::string(to_string(r->status))}};
    if (r->status == ReportStatus::Failed) j["detail"] = r->error;
    reply(res, 200, j);
  }

  void get_extraction(const httplib::Request& req, httplib::Response& res) {
    auto r = reports_.get(req.matches[1]);
    if (!r) return error(res, 404, "unknown_report", "no report " + std::string(req.matches[1]));
    if (r->status == ReportStatus::Queued) return error(res, 409, "not_ready", "extraction is still queued");
    if (r->status == ReportStatus::Failed) return error(res, 500, "extraction_failed", r->error);
    const std::string format = req.has_param("format") ? req.get_param_value("format") : "json";
    if (format == "stix") return reply(res, 200, to_stix_bundle(*r->result));
    if (format != "json") return error(res, 400, "bad_request", "format must be 'json' or 'stix'");
    reply(res, 200, result_to_json(*r->result));
  }

  void get_candidates(const httplib::Request& req, httplib::Response& res) {
    std::optional<CandidateStatus> status;
    if (req.has_param("status")) {
      try {
        status = candidate_status_from_string(req.get_param_value("status"));
      } catch (const Error& e) {
        return error(res, 400, "bad_request", e.what());
      }
    }
    auto items = nlohmann::json::array();
    for (const auto& c : kb_.candidates(status)) items.push_back(c);
    reply(res, 200, {{"items", items}, {"total", items.size()}});
  }

  void post_decision(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("decision") || !body["decision"].is_string())
      return error(res, 400, "bad_request", "expected {\"decision\": \"accept\"|\"reject\", \"type\"?}");
    const auto d = body["decision"].get<std::string>();
    if (d != "accept" && d != "reject") return error(res, 400, "bad_request", "decision must be accept or reject");
    std::optional<std::string> type;
    if (body.contains("type") && !body["type"].is_null()) {
      if (!body["type"].is_string()) return error(res, 400, "bad_request", "'type' must be a string");
      type = body["type"].get<std::string>();
      if (!is_entity_type(*type)) return error(res, 400, "bad_request", "unknown STIX type '" + *type + "'");
    }
    try {
      auto entity = kb_.review_candidate(id, d == "accept" ? Decision::Accept : Decision::Reject, type);
      nlohmann::json out{{"candidate", *kb_.candidate(id)}};
      out["entity"] = entity ? nlohmann::json(*entity) : nlohmann::json(nullptr);
      reply(res, 200, out);
    } catch (const UnknownCandidate& e) {
      error(res, 404, "unknown_candidate", e.what());
    } catch (const AlreadyDecided& e) {
      error(res, 409, "already_decided", e.what());
    } catch (const AliasConflict& e) {
      error(res, 409, "alias_conflict", e.what());
    }
  }

  void get_entities(const httplib::Request& req, httplib::Response& res) {
    std::size_t page = 1, page_size = opt_.default_page_size;
    try {
      if (req.has_param("page")) page = std::stoul(req.get_param_value("page"));
      if (req.has_param("page_size")) page_size = std::stoul(req.get_param_value("page_size"));
    } catch (const std::exception&) {
      return error(res, 400, "bad_request", "page and page_size must be positive integers");
    }
    if (page == 0 || page_size == 0 || page_size > opt_.max_page_size)
      return error(res, 400, "bad_request",
                   "page must be >= 1 and page_size in [1, " + std::to_string(opt_.max_page_size) + "]");
    const std::string type = req.has_param("type") ? req.get_param_value("type") : "";
    const std::string q = text::lower(req.has_param("q") ? req.get_param_value("q") : "");

    auto hit = [&](const KbEntity& e) {
      if (!type.empty() && e.stix_type != type) return false;
      if (q.empty() || text::lower(e.name).find(q) != std::string::npos) return true;
      return std::any_of(e.aliases.begin(), e.aliases.end(),
                         [&](const std::string& a) { return text::lower(a).find(q) != std::string::npos; });
    };
    std::vector<KbEntity> all;
    for (auto& e : kb_.entities())
      if (hit(e)) all.push_back(std::move(e));
    std::sort(all.begin(), all.end(), [](const KbEntity& a, const KbEntity& b) {
      const auto la = text::lower(a.name), lb = text::lower(b.name);
      return la != lb ? la < lb : a.id < b.id;
    });

    auto items = nlohmann::json::array();
    const std::size_t from = std::min(all.size(), (page - 1) * page_size);
    const std::size_t to = std::min(all.size(), from + page_size);
    for (std::size_t i = from; i < to; ++i) items.push_back(all[i]);
    reply(res, 200, {{"items", items}, {"page", page}, {"page_size", page_size}, {"total", all.size()}});
  }

  KnowledgeBase& kb_;
  std::shared_ptr<const Resources> res_;
  ServiceOptions opt_;
  ReportStore reports_;
};

}  // namespace stixnet
