// stixnet command-line entry point.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stixnet/evaluator.hpp"
#include "stixnet/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stixnet;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string data_dir = STIXNET_DEFAULT_DATA_DIR;
  std::string kb_path = "stixnet-kb";
  std::string ttp_model;
};

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw DecodeError(path + " is not valid JSON");
  return j;
}

PosFilterTable pos_table(const Globals& g) {
  return PosFilterTable::load((fs::path(g.data_dir) / "pos_filter_table.json").string());
}

std::unique_ptr<KnowledgeBase> open_kb(const Globals& g) {
  return std::make_unique<KnowledgeBase>(pos_table(g), fs::path(g.kb_path));
}

std::shared_ptr<const Resources> load_resources(const Globals& g) {
  std::optional<fs::path> model;
  if (!g.ttp_model.empty()) model = g.ttp_model;
  return Resources::load(g.data_dir, model);
}

PipelineConfig load_config(const std::string& path) {
  return path.empty() ? PipelineConfig{} : PipelineConfig::from_json(read_json(path));
}

std::string fmt(double x, int prec = 3) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(prec) << x;
  return o.str();
}

// Left-aligned text table.
void print_table(std::ostream& out, const std::vector<std::string>& head,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) w[c] = head[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], r[c].size());
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      out << r[c];
      if (c + 1 < r.size()) out << std::string(w[c] - r[c].size() + 2, ' ');
    }
    out << '\n';
  };
  line(head);
  std::vector<std::string> rule;
  for (auto n : w) rule.emplace_back(n, '-');
  line(rule);
  for (const auto& r : rows) line(r);
}

std::string prf(const Scores& s) {
  return "P=" + fmt(s.precision) + " R=" + fmt(s.recall) + " F1=" + fmt(s.f1) + " (tp=" + std::to_string(s.tp) +
         " fp=" + std::to_string(s.fp) + " fn=" + std::to_string(s.fn) + ")";
}

// ---------------------------------------------------------------------------

struct ExtractArgs {
  std::string file;
  std::string format = "auto";
  std::string stix_out;
  std::string config;
  std::string report_id;
  std::optional<uint64_t> seed;
  bool json_out = false;
  bool no_persist = false;
};

int cmd_extract(const Globals& g, const ExtractArgs& a) {
  RawDocument doc;
  doc.content = read_file(a.file);
  doc.id = !a.report_id.empty() ? a.report_id : (a.file == "-" ? "stdin" : fs::path(a.file).stem().string());
  std::string format = a.format;
  if (format == "auto") {
    const auto ext = text::lower(fs::path(a.file).extension().string());
    format = ext == ".html" || ext == ".htm" ? "html" : "text";
  }
  doc.format = format == "html" ? DocFormat::Html : DocFormat::PlainText;
  const auto cfg = load_config(a.config);

  auto kb = open_kb(g);
  auto res = load_resources(g);
  auto result = run_pipeline(doc, *kb->snapshot(), *res, cfg);
  if (!a.no_persist) persist_candidates(*kb, result);

  if (!a.stix_out.empty()) {
    BundleOptions bo;
    bo.seed = a.seed;
    const auto bundle = to_stix_bundle(result, bo);
    std::ofstream out(a.stix_out, std::ios::binary);
    if (!out) throw IngestError("cannot write " + a.stix_out);
    out << bundle.dump(2) << '\n';
  }

  if (a.json_out) {
    std::cout << result_to_json(result).dump(2) << '\n';
    return kOk;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& m : result.mentions) {
    std::string span = "-";
    if (m.span) {
      const auto raw = result.normalized.raw_span(*m.span);
      span = std::to_string(raw.start) + ":" + std::to_string(raw.end);
    }
    rows.push_back({m.surface, m.stix_type, std::string(to_string(m.provenance)), fmt(m.confidence, 2), span});
  }
  std::cout << "Entities (" << rows.size() << ")\n";
  print_table(std::cout, {"surface", "type", "provenance", "confidence", "span"}, rows);
  rows.clear();
  for (const auto& r : result.relations)
    rows.push_back({r.source.name(), r.relationship_type, r.target.name(), fmt(r.confidence, 2),
                    std::string(to_string(r.method))});
  std::cout << "\nRelations (" << rows.size() << ")\n";
  print_table(std::cout, {"source", "relationship", "target", "confidence", "method"}, rows);
  if (!result.candidates.empty()) {
    rows.clear();
    for (const auto& c : result.candidates) rows.push_back({c.id.empty() ? "-" : c.id, c.surface, c.proposed_type, c.trigger});
    std::cout << "\nCandidates (" << rows.size() << ")\n";
    print_table(std::cout, {"id", "surface", "proposed_type", "trigger"}, rows);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

void print_ingest(const IngestReport& r, const std::string& what) {
  std::cout << "imported " << r.added << " " << what << '\n';
  for (const auto& c : r.conflicts) std::cerr << "warning: " << c << '\n';
}

int cmd_kb_list(const Globals& g, const std::string& type, bool json_out) {
  auto kb = open_kb(g);
  auto all = kb->entities();
  std::erase_if(all, [&](const KbEntity& e) { return !type.empty() && e.stix_type != type; });
  std::sort(all.begin(), all.end(), [](const KbEntity& a, const KbEntity& b) {
    const auto la = text::lower(a.name), lb = text::lower(b.name);
    return la != lb ? la < lb : a.id < b.id;
  });
  if (json_out) {
    std::cout << json(all).dump(2) << '\n';
    return kOk;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : all) {
    std::string aliases;
    for (const auto& a : e.aliases) aliases += (aliases.empty() ? "" : ", ") + a;
    rows.push_back({e.name, e.stix_type, std::string(to_string(e.source)), aliases, e.id});
  }
  print_table(std::cout, {"name", "type", "source", "aliases", "id"}, rows);
  return kOk;
}

int cmd_review(const Globals& g, const std::string& accept, const std::string& reject, const std::string& type,
               bool all, bool json_out) {
  auto kb = open_kb(g);
  if (!accept.empty() || !reject.empty()) {
    if (!type.empty() && !is_entity_type(type)) throw UsageError("unknown STIX type '" + type + "'");
    const bool acc = !accept.empty();
    const std::string id = acc ? accept : reject;
    std::optional<std::string> t;
    if (!type.empty()) t = type;
    auto e = kb->review_candidate(id, acc ? Decision::Accept : Decision::Reject, t);
    if (e)
      std::cout << "accepted " << id << " as " << e->stix_type << " \"" << e->name << "\" (" << e->id << ")\n";
    else
      std::cout << "rejected " << id << "; \"" << kb->candidate(id)->surface << "\" stoplisted\n";
    return kOk;
  }
  std::optional<CandidateStatus> status;
  if (!all) status = CandidateStatus::Pending;
  const auto cs = kb->candidates(status);
  if (json_out) {
    std::cout << json(cs).dump(2) << '\n';
    return kOk;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : cs)
    rows.push_back({c.id, c.surface, c.proposed_type, c.report_id, c.trigger, std::string(to_string(c.status))});
  print_table(std::cout, {"id", "surface", "proposed_type", "report", "trigger", "status"}, rows);
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string labels;
  std::string out;
  uint64_t seed = 42;
  double holdout = 0.0;
  uint64_t split_seed = 7;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  const auto docs = load_ttp_corpus(a.corpus);
  const auto space = LabelSpace::load(a.labels.empty() ? fs::path(g.data_dir) / "ttp_labels.json" : fs::path(a.labels));
  TrainOptions opt;
  opt.seed = a.seed;
  if (a.holdout > 0.0) {
    auto [train, test] = split_corpus(docs, a.holdout, a.split_seed);
    const auto m = train_ttp(train, space, opt);
    const auto s = evaluate_ttp(m, test);
    std::cout << "held-out (" << test.size() << " docs): micro P=" << fmt(s.precision) << " R=" << fmt(s.recall)
              << " F1=" << fmt(s.f1) << '\n';
  }
  const auto model = train_ttp(docs, space, opt);
  for (const auto& w : model.warnings()) std::cerr << "warning: " << w << '\n';
  model.save(a.out);
  std::cout << "trained on " << docs.size() << " documents, " << space.labels().size() << " labels -> " << a.out
            << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string gold;
  std::string mode = "standard";
  std::string seed_kb;
  std::string config;
  bool json_out = false;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  const auto mode = relation_mode_from_string(a.mode);
  const auto gold = load_gold_dir(a.gold);
  auto kb = a.seed_kb.empty() ? open_kb(g) : load_seed_kb(a.seed_kb, pos_table(g));
  auto res = load_resources(g);
  const auto ev = evaluate_corpus(gold, *kb->snapshot(), *res, load_config(a.config), mode);
  if (a.json_out) {
    json per = json::object();
    for (const auto& [t, s] : ev.per_type) per[t] = s.to_json();
    std::cout << json{{"mode", std::string(to_string(mode))},
                      {"reports", gold.size()},
                      {"entities", ev.entities.to_json()},
                      {"relations", ev.relations.to_json()},
                      {"per_type", per}}
                     .dump(2)
              << '\n';
    return kOk;
  }
  std::cout << "reports   " << gold.size() << "  mode " << to_string(mode) << '\n';
  std::cout << "entities  " << prf(ev.entities) << '\n';
  std::cout << "relations " << prf(ev.relations) << '\n';
  std::vector<std::vector<std::string>> rows;
  for (const auto& [t, s] : ev.per_type)
    rows.push_back({t, fmt(s.precision), fmt(s.recall), fmt(s.f1), std::to_string(s.tp + s.fn)});
  std::cout << '\n';
  print_table(std::cout, {"type", "P", "R", "F1", "gold"}, rows);
  return kOk;
}

struct TemporalArgs {
  std::string gold;
  std::string seed_kb;
  std::size_t batch_size = 5;
  bool augment = false;
  bool auto_accept = false;
  std::size_t shuffles = 0;
  uint64_t seed = 2024;
  bool json_out = false;
};

int cmd_temporal(const Globals& g, const TemporalArgs& a) {
  if (a.batch_size == 0) throw UsageError("--batch-size must be positive");
  const auto gold = load_gold_dir(a.gold.empty() ? fs::path(g.data_dir) / "eval" / "reports" : fs::path(a.gold));
  const auto kb = load_seed_kb(a.seed_kb.empty() ? fs::path(g.data_dir) / "eval" / "seed_kb.json" : fs::path(a.seed_kb),
                               pos_table(g));
  auto res = load_resources(g);
  TemporalOptions opt;
  opt.batch_size = a.batch_size;
  opt.augment = a.augment;
  opt.auto_accept = a.auto_accept;
  const auto batches = temporal_experiment(gold, *kb, *res, opt);
  std::vector<double> means;
  if (a.shuffles) means = shuffled_mean_f1(gold, *kb, *res, a.shuffles, a.seed, opt);

  if (a.json_out) {
    json bs = json::array();
    for (const auto& b : batches)
      bs.push_back({{"batch", b.batch + 1},
                    {"reports", b.reports},
                    {"entities", b.entities.to_json()},
                    {"relations", b.relations.to_json()},
                    {"accepted", b.accepted},
                    {"rejected", b.rejected},
                    {"kb_size", b.kb_size}});
    json out{{"augment", a.augment}, {"batch_size", a.batch_size}, {"batches", bs}};
    if (a.shuffles) out["shuffles"] = {{"mean_f1", means}, {"stddev", sample_stddev(means)}};
    std::cout << out.dump(2) << '\n';
    return kOk;
  }
  std::cout << (a.augment ? "augmented" : "frozen") << " KB, " << gold.size() << " reports, batch size "
            << a.batch_size << "\n\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& b : batches)
    rows.push_back({std::to_string(b.batch + 1), fmt(b.entities.precision), fmt(b.entities.recall),
                    fmt(b.entities.f1), fmt(b.relations.f1), std::to_string(b.accepted),
                    std::to_string(b.rejected), std::to_string(b.kb_size)});
  print_table(std::cout, {"batch", "P", "R", "F1", "rel F1", "accepted", "rejected", "kb size"}, rows);
  if (a.shuffles)
    std::cout << "\nmean-F1 stddev over " << a.shuffles << " shuffles: " << fmt(sample_stddev(means), 4) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

httplib::Server* g_server = nullptr;

int cmd_serve(const Globals& g, const std::string& bind, int port, const std::string& static_dir,
              std::size_t max_body, const std::string& config) {
  auto kb = open_kb(g);
  ServiceOptions opt;
  opt.config = load_config(config);
  opt.max_body_bytes = max_body;
  if (!static_dir.empty()) {
    if (!fs::is_directory(static_dir)) throw IngestError("static directory " + static_dir + " does not exist");
    opt.static_dir = static_dir;
  }
  Service svc(*kb, load_resources(g), opt);
  httplib::Server srv;
  svc.install(srv);
  g_server = &srv;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  if (!srv.bind_to_port(bind, port)) throw IngestError("cannot bind " + bind + ":" + std::to_string(port));
  std::cerr << "listening on http://" << bind << ":" << port << " (kb " << g.kb_path << ")\n";
  srv.listen_after_bind();
  g_server = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stixnet: extract STIX 2.1 objects and relationships from CTI reports"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--data-dir", g.data_dir, "Bundled resource directory")->envname("STIXNET_DATA");
  app.add_option("--kb-path", g.kb_path, "Knowledge-base directory")->envname("STIXNET_KB");
  app.add_option("--ttp-model", g.ttp_model, "TTP model JSON (default: bundled corpus)");

  std::function<int()> action;

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Run the pipeline on one report");
  extract->add_option("file", ex.file, "Report file ('-' for stdin)")->required();
  extract->add_option("--format", ex.format, "Input format")->check(CLI::IsMember({"auto", "text", "html"}));
  extract->add_option("--stix-out", ex.stix_out, "Write the STIX bundle here");
  extract->add_option("--config", ex.config, "Pipeline config JSON");
  extract->add_option("--report-id", ex.report_id, "Report id (default: file stem)");
  extract->add_option("--seed", ex.seed, "Seed for a reproducible bundle");
  extract->add_flag("--json", ex.json_out, "Print the extraction as JSON");
  extract->add_flag("--no-persist", ex.no_persist, "Do not queue novel candidates in the KB");
  extract->callback([&] { action = [&] { return cmd_extract(g, ex); }; });

  auto* kb = app.add_subcommand("kb", "Knowledge-base management");
  kb->require_subcommand(1);
  std::string kb_file, kb_type, kb_name;
  std::vector<std::string> kb_aliases;
  bool kb_json = false;
  auto* imp_attack = kb->add_subcommand("import-attack", "Import an ATT&CK STIX bundle");
  imp_attack->add_option("bundle", kb_file)->required();
  imp_attack->callback([&] {
    action = [&] {
      auto k = open_kb(g);
      print_ingest(k->ingest_attack_bundle(read_json(kb_file)), "ATT&CK entities");
      return kOk;
    };
  });
  auto* imp_loc = kb->add_subcommand("import-locations", "Import a name,nationality CSV");
  imp_loc->add_option("csv", kb_file)->required();
  imp_loc->callback([&] {
    action = [&] {
      auto k = open_kb(g);
      print_ingest(k->ingest_locations_csv_file(kb_file), "locations");
      return kOk;
    };
  });
  auto* add = kb->add_subcommand("add", "Add one entity");
  add->add_option("--type", kb_type, "STIX type")->required();
  add->add_option("--name", kb_name, "Canonical name")->required();
  add->add_option("--alias", kb_aliases, "Alias (repeatable)");
  add->callback([&] {
    action = [&] {
      if (!is_entity_type(kb_type)) throw UsageError("unknown STIX type '" + kb_type + "'");
      auto k = open_kb(g);
      const auto e = k->add_entity(kb_type, kb_name, kb_aliases, KbSource::Manual);
      std::cout << "added " << e.stix_type << " \"" << e.name << "\" (" << e.id << ")\n";
      return kOk;
    };
  });
  auto* list = kb->add_subcommand("list", "List entities");
  list->add_option("--type", kb_type, "Only this STIX type");
  list->add_flag("--json", kb_json);
  list->callback([&] { action = [&] { return cmd_kb_list(g, kb_type, kb_json); }; });

  std::string rv_accept, rv_reject, rv_type;
  bool rv_list = false, rv_all = false, rv_json = false;
  auto* review = app.add_subcommand("review", "Review novel-entity candidates");
  auto* o_acc = review->add_option("--accept", rv_accept, "Accept candidate id");
  auto* o_rej = review->add_option("--reject", rv_reject, "Reject candidate id");
  auto* o_list = review->add_flag("--list", rv_list, "List pending candidates (default)");
  o_acc->excludes(o_rej)->excludes(o_list);
  o_rej->excludes(o_list);
  review->add_option("--type", rv_type, "Type override on accept")->needs(o_acc);
  review->add_flag("--all", rv_all, "List candidates of every status");
  review->add_flag("--json", rv_json);
  review->callback([&] { action = [&] { return cmd_review(g, rv_accept, rv_reject, rv_type, rv_all, rv_json); }; });

  TrainArgs tr;
  auto* train = app.add_subcommand("train-ttp", "Train the TTP classifier");
  train->add_option("--corpus", tr.corpus, "JSONL corpus")->required();
  train->add_option("--out", tr.out, "Model output path")->required();
  train->add_option("--labels", tr.labels, "Label space JSON (default: bundled)");
  train->add_option("--seed", tr.seed, "Weight-initialization seed");
  train->add_option("--holdout", tr.holdout, "Also report micro-F1 on this held-out fraction")
      ->check(CLI::Range(0.0, 0.9));
  train->add_option("--split-seed", tr.split_seed, "Seed of the held-out split");
  train->callback([&] { action = [&] { return cmd_train(g, tr); }; });

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score extraction against annotated reports");
  eval->add_option("--gold", ev.gold, "Directory of annotation JSON files")->required();
  eval->add_option("--mode", ev.mode, "Relation scoring mode")->check(CLI::IsMember({"standard", "no-error-prop"}));
  eval->add_option("--seed-kb", ev.seed_kb, "Seed KB JSON (default: --kb-path)");
  eval->add_option("--config", ev.config, "Pipeline config JSON");
  eval->add_flag("--json", ev.json_out);
  eval->callback([&] { action = [&] { return cmd_eval(g, ev); }; });

  TemporalArgs tp;
  auto* temporal = app.add_subcommand("eval-temporal", "Batched KB-growth experiment");
  temporal->add_option("--gold", tp.gold, "Annotated reports in order (default: bundled corpus)");
  temporal->add_option("--seed-kb", tp.seed_kb, "Initial KB JSON (default: bundled)");
  temporal->add_option("--batch-size", tp.batch_size, "Reports per batch");
  temporal->add_flag("--augment", tp.augment, "Grow the KB with validated candidates between batches");
  temporal->add_flag("--auto-accept", tp.auto_accept, "Accept every candidate without validation");
  temporal->add_option("--shuffles", tp.shuffles, "Order-independence check: number of shuffles");
  temporal->add_option("--seed", tp.seed, "Shuffle seed");
  temporal->add_flag("--json", tp.json_out);
  temporal->callback([&] { action = [&] { return cmd_temporal(g, tp); }; });

  std::string bind = "127.0.0.1", static_dir, serve_config;
  int port = 8080;
  std::size_t max_body = 5 * 1024 * 1024;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--port", port)->check(CLI::Range(1, 65535));
  serve->add_option("--bind", bind, "Bind address");
  serve->add_option("--static-dir", static_dir, "Serve these files under /");
  serve->add_option("--max-body", max_body, "Request size limit in bytes");
  serve->add_option("--config", serve_config, "Default pipeline config JSON");
  serve->callback([&] { action = [&] { return cmd_serve(g, bind, port, static_dir, max_body, serve_config); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
