#include "dmguard/cli.hpp"

#include <csignal>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dmguard/annotation.hpp"
#include "dmguard/config.hpp"
#include "dmguard/corpus.hpp"
#include "dmguard/detector.hpp"
#include "dmguard/errors.hpp"
#include "dmguard/gateway.hpp"
#include "dmguard/io.hpp"
#include "dmguard/metrics.hpp"
#include "dmguard/pairs.hpp"
#include "dmguard/preference.hpp"
#include "dmguard/prompts.hpp"
#include "dmguard/responder.hpp"
#include "dmguard/stats.hpp"

namespace dmguard::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// Flags shared by the pipeline subcommands. Unset flags fall back to the config file.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<int> window;
  std::string out;
  std::string manifest;
  std::string mock;
  std::string corpus;

  void add_to(CLI::App* app, bool pipeline) {
    app->add_option("--config", config, "TOML-style config file")->check(CLI::ExistingFile);
    app->add_option("--out", out, "Output file (stdout when omitted)");
    if (!pipeline) return;
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--jobs", jobs, "Parallel gateway calls")->check(CLI::PositiveNumber);
    app->add_option("--window", window, "Context window size")->check(CLI::NonNegativeNumber);
    app->add_option("--manifest", manifest, "Write a run manifest here");
    app->add_option("--mock", mock, "Scripted mock gateway (JSONL)")->check(CLI::ExistingFile);
    app->add_option("--corpus", corpus, "Normalized corpus JSONL");
  }

  [[nodiscard]] KeyValueConfig file() const {
    return config.empty() ? KeyValueConfig{} : KeyValueConfig::load(config);
  }

  [[nodiscard]] RunConfig run_config() const {
    auto kv = file();
    auto c = RunConfig::from(kv);
    if (seed) c.seed = *seed;
    if (jobs) c.jobs = *jobs;
    if (window) c.window = *window;
    c.validate();
    return c;
  }

  [[nodiscard]] fs::path corpus_path() const {
    if (!corpus.empty()) return corpus;
    if (auto v = file().get_string("paths.corpus")) return *v;
    throw ConfigError("no corpus given (--corpus or paths.corpus)");
  }

  [[nodiscard]] std::optional<fs::path> mock_path() const {
    if (!mock.empty()) return fs::path(mock);
    if (auto v = file().get_string("paths.mock")) return fs::path(*v);
    return std::nullopt;
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
};

void emit(const Context& ctx, const std::string& path, std::string_view content) {
  if (path.empty() || path == "-") {
    ctx.out << content;
    ctx.out.flush();
  } else {
    io::write_file_atomic(path, content);
  }
}

std::vector<Conversation> load_corpus(const fs::path& path) {
  return corpus::parse_export(io::read_file(path), ExportFormat::normalized_jsonl);
}

PromptCatalog load_catalog(const RunConfig& cfg) {
  const auto& base = PromptCatalog::builtin();
  if (cfg.few_shot_file.empty()) return base;
  return base.with_few_shot(io::read_file(cfg.few_shot_file));
}

std::unique_ptr<Gateway> make_gateway(const Common& common, const RunConfig& cfg) {
  if (auto mock = common.mock_path()) {
    return std::make_unique<MockGateway>(MockGateway::parse_script(io::read_file(*mock)), cfg.seed);
  }
  if (cfg.endpoint_url.empty()) throw ConfigError("no gateway configured (--mock or endpoint in the config)");
  return std::make_unique<HttpGateway>(HttpGatewayConfig::from(cfg));
}

std::set<std::string> read_id_set(const std::string& path) {
  if (path.empty()) return {};
  auto ids = io::read_id_list(path);
  return {ids.begin(), ids.end()};
}

/// Target ids for respond/extract-originals: an explicit list, or the
/// detector's positives (optionally restricted to truth label 1).
struct TargetOptions {
  std::string targets;
  std::string verdicts;
  std::string truth;
  std::optional<std::size_t> sample;

  void add_to(CLI::App* app) {
    app->add_option("--targets", targets, "File with one message id per line")->check(CLI::ExistingFile);
    app->add_option("--verdicts", verdicts, "Detector output; final positives become targets")->check(CLI::ExistingFile);
    app->add_option("--truth", truth, "Keep only targets labeled 1 here")->check(CLI::ExistingFile);
    app->add_option("--sample", sample, "Seeded random subset of this many targets");
  }

  [[nodiscard]] std::vector<std::string> resolve(std::uint64_t seed) const {
    std::vector<std::string> ids;
    if (!targets.empty() && !verdicts.empty()) throw ConfigError("--targets and --verdicts are mutually exclusive");
    if (!targets.empty()) {
      ids = io::read_id_list(targets);
    } else if (!verdicts.empty()) {
      for (const auto& v : detector::read_verdicts(verdicts)) {
        if (v.final_label == 1) ids.push_back(v.message_id);
      }
    } else {
      throw ConfigError("no targets given (--targets or --verdicts)");
    }
    if (!truth.empty()) {
      const auto labels = io::read_label_csv(truth);
      std::erase_if(ids, [&](const std::string& id) {
        auto it = labels.find(id);
        return it == labels.end() || it->second != 1;
      });
    }
    if (sample) ids = responder::sample_ids(ids, *sample, seed);
    return ids;
  }
};

std::string jsonl(const std::vector<ordered_json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += io::dump_line(r);
    out.push_back('\n');
  }
  return out;
}

// ---- subcommand bodies ----

struct IngestArgs {
  std::string input;
  std::string format = "platform_json";
  std::string donor;
  bool two_party = false;
};

void do_ingest(const Context& ctx, const Common& common, const IngestArgs& a) {
  const auto kv = common.file();
  IngestOptions opts;
  opts.donor = a.donor.empty() ? kv.get_string("donor").value_or("") : a.donor;
  ExportFormat format;
  if (a.format == "platform_json") {
    format = ExportFormat::platform_json;
  } else if (a.format == "normalized_jsonl") {
    format = ExportFormat::normalized_jsonl;
  } else {
    throw ConfigError(fmt::format("unknown format '{}'", a.format));
  }
  auto convs = corpus::parse_export(io::read_file(a.input), format, opts);
  if (a.two_party) convs = corpus::filter_two_party(std::move(convs));
  emit(ctx, common.out, corpus::to_normalized_jsonl(convs));
}

struct DetectArgs {
  std::string checkpoint;
  std::string exclude;
  bool all_senders = false;
};

void do_detect(const Context& ctx, const Common& common, const DetectArgs& a) {
  const auto cfg = common.run_config();
  const auto convs = load_corpus(common.corpus_path());
  const auto catalog = load_catalog(cfg);
  auto gateway = make_gateway(common, cfg);

  detector::DetectionRunConfig dc;
  dc.window = static_cast<std::size_t>(cfg.window);
  dc.exclusions = read_id_set(a.exclude);
  dc.donor_filter = !a.all_senders;
  dc.seed = cfg.seed;
  dc.jobs = cfg.jobs;
  dc.sampling = cfg.sampling;

  std::optional<fs::path> checkpoint;
  if (!a.checkpoint.empty()) checkpoint = a.checkpoint;
  auto run = detector::run_detection(convs, *gateway, catalog, dc, checkpoint);
  emit(ctx, common.out, detector::to_jsonl(run.records));
  if (!common.manifest.empty()) io::write_file_atomic(common.manifest, io::dump_pretty(run.manifest) + "\n");
}

void do_respond(const Context& ctx, const Common& common, const TargetOptions& t) {
  const auto cfg = common.run_config();
  const auto convs = load_corpus(common.corpus_path());
  const auto catalog = load_catalog(cfg);
  auto gateway = make_gateway(common, cfg);
  const auto ids = t.resolve(cfg.seed);

  responder::ResponderConfig rc;
  rc.window = static_cast<std::size_t>(cfg.window);
  rc.sampling = cfg.sampling;
  rc.seed = cfg.seed;
  rc.jobs = cfg.jobs;
  const auto sets = responder::run_responder(convs, ids, *gateway, catalog, rc);

  std::vector<ordered_json> rows;
  std::size_t fixed = 0;
  for (const auto& s : sets) {
    rows.push_back(responder::to_json(s));
    fixed += s.violations.empty() ? 0 : 1;
  }
  emit(ctx, common.out, jsonl(rows));
  if (!common.manifest.empty()) {
    ordered_json m;
    m["command"] = "respond";
    m["model_id"] = gateway->model_id();
    m["template_hashes"] = {{"resp_agent1", catalog.template_hash(TemplateId::resp_agent1)},
                            {"resp_agent2", catalog.template_hash(TemplateId::resp_agent2)}};
    m["strategy_version"] = catalog.strategy_version();
    m["window"] = cfg.window;
    m["seed"] = cfg.seed;
    m["sample"] = t.sample ? json(*t.sample) : json(nullptr);
    m["targets"] = ids;
    m["records_with_fixes"] = fixed;
    m["finished_at"] = io::utc_timestamp_now();
    io::write_file_atomic(common.manifest, io::dump_pretty(m) + "\n");
  }
}

void do_extract(const Context& ctx, const Common& common, const TargetOptions& t) {
  const auto cfg = common.run_config();
  const auto convs = load_corpus(common.corpus_path());
  const corpus::CorpusIndex index(convs);
  std::vector<ordered_json> rows;
  for (const auto& id : t.resolve(cfg.seed)) {
    rows.push_back(responder::to_json(responder::extract_original_responses(index.conversation_of(id), id, cfg.originals)));
  }
  emit(ctx, common.out, jsonl(rows));
}

struct PairsArgs {
  std::string simulated;
  std::string originals;
  std::string blinding;
};

void do_pairs(const Context& ctx, const Common& common, const PairsArgs& a) {
  const auto cfg = common.run_config();
  const auto convs = load_corpus(common.corpus_path());
  const corpus::CorpusIndex index(convs);

  std::map<std::string, responder::OriginalResponseSet> originals;
  for (const auto& j : io::read_jsonl(a.originals)) {
    auto o = responder::original_from_json(j);
    originals.emplace(o.message_id, std::move(o));
  }
  std::vector<pairs::PairItem> items;
  for (const auto& j : io::read_jsonl(a.simulated)) {
    auto s = responder::simulated_from_json(j);
    auto orig = originals.find(s.message_id);
    if (orig == originals.end())
      throw ReferenceError(fmt::format("no original responses for message '{}'", s.message_id));
    pairs::PairItem item;
    item.message_id = s.message_id;
    item.context = corpus::render_transcript(
        corpus::build_context(index.conversation_of(s.message_id), s.message_id, static_cast<std::size_t>(cfg.window)),
        TranscriptMarker::respond_to_this);
    item.simulated = s.responses;
    item.original = orig->second;
    items.push_back(std::move(item));
  }
  if (a.blinding.empty()) throw ConfigError("--blinding is required; the side assignment would otherwise be lost");
  auto build = pairs::build_comparison_pairs(items, cfg.seed);
  emit(ctx, common.out, io::dump_pretty(pairs::labeler_export(build.pairs)) + "\n");
  io::write_file_atomic(a.blinding, io::dump_pretty(build.manifest.to_json()) + "\n");
}

struct EvaluateArgs {
  std::string pred;
  std::string truth;
  std::string exclude;
};

std::map<std::string, int> read_predictions(const fs::path& path) {
  if (path.extension() == ".jsonl") {
    std::map<std::string, int> out;
    for (const auto& v : detector::read_verdicts(path)) out[v.message_id] = v.final_label;
    return out;
  }
  return io::read_label_csv(path);
}

void do_evaluate(const Context& ctx, const Common& common, const EvaluateArgs& a) {
  const auto cm = eval::confusion(read_predictions(a.pred), io::read_label_csv(a.truth), read_id_set(a.exclude));
  const auto report = eval::classification_report(cm);
  ordered_json j;
  j["confusion"] = eval::to_json(cm);
  j["report"] = eval::to_json(report);
  if (common.out.empty()) {
    ctx.out << eval::format_confusion(cm) << '\n' << eval::format_report(report) << '\n' << io::dump_pretty(j) << '\n';
  } else {
    io::write_file_atomic(common.out, io::dump_pretty(j) + "\n");
    ctx.out << eval::format_confusion(cm) << '\n' << eval::format_report(report);
  }
}

struct SweepArgs {
  std::string scores;
  std::string truth;
  int steps = 100;
};

void do_sweep(const Context& ctx, const Common& common, const SweepArgs& a) {
  const auto r = eval::sweep_threshold(io::read_score_csv(a.scores), io::read_label_csv(a.truth), a.steps);
  ordered_json j;
  j["threshold"] = r.threshold;
  j["confusion"] = eval::to_json(r.matrix);
  j["report"] = eval::to_json(r.report);
  emit(ctx, common.out, io::dump_pretty(j) + "\n");
}

void do_vote(const Context& ctx, const Common& common, const std::string& votes_path) {
  const auto table = io::read_csv(votes_path);
  const auto id_col = table.column("message_id");
  std::map<std::string, std::vector<int>> votes;
  for (const auto& row : table.rows) {
    std::vector<int> v;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == id_col) continue;
      if (row[c] != "0" && row[c] != "1")
        throw ValidationError(fmt::format("vote for '{}' must be 0 or 1, got '{}'", row[id_col], row[c]));
      v.push_back(row[c] == "1" ? 1 : 0);
    }
    if (!votes.emplace(row[id_col], std::move(v)).second)
      throw ValidationError(fmt::format("duplicate message id '{}'", row[id_col]));
  }
  std::string out = io::csv_row({"message_id", "label"});
  for (const auto& [id, label] : eval::majority_vote(votes)) out += io::csv_row({id, std::to_string(label)});
  emit(ctx, common.out, out);
}

int parse_binary(const std::string& s, std::string_view what) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ValidationError(fmt::format("{} must be 0 or 1, got '{}'", what, s));
}

void do_adjudicate(const Context& ctx, const Common& common, const std::string& labels_path) {
  const auto table = io::read_csv(labels_path);
  const auto id_col = table.column("message_id");
  const auto r2_col = table.column("round2");
  const std::optional<std::size_t> tb_col =
      table.has_column("tiebreak") ? std::optional(table.column("tiebreak")) : std::nullopt;
  std::vector<std::size_t> r1_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].starts_with("round1")) r1_cols.push_back(c);
  }
  if (r1_cols.empty()) throw ValidationError("no round1* columns");

  std::string out = io::csv_row({"message_id", "label"});
  std::vector<std::string> pending;
  for (const auto& row : table.rows) {
    std::vector<int> r1;
    for (auto c : r1_cols) r1.push_back(parse_binary(row[c], "round1 label"));
    std::optional<int> tb;
    if (tb_col && !row[*tb_col].empty()) tb = parse_binary(row[*tb_col], "tiebreak label");
    try {
      out += io::csv_row({row[id_col], std::to_string(eval::adjudicate(r1, parse_binary(row[r2_col], "round2 label"), tb))});
    } catch (const AdjudicationPending&) {
      pending.push_back(row[id_col]);
    }
  }
  if (!pending.empty()) {
    std::string ids;
    for (const auto& p : pending) ids += (ids.empty() ? "" : ", ") + p;
    throw AdjudicationPending(fmt::format("{} message(s) need a tie-break label: {}", pending.size(), ids));
  }
  emit(ctx, common.out, out);
}

struct StatsArgs {
  std::string answers;
  std::string manifest;
  std::string questions = "1-4";
  std::string ci = "wilson";
  std::string test = "exact";
  double level = 0.95;
};

void do_stats(const Context& ctx, const Common& common, const StatsArgs& a) {
  eval::PreferenceOptions opts;
  opts.level = a.level;
  if (a.ci == "wilson") {
    opts.ci_method = eval::CiMethod::wilson;
  } else if (a.ci == "wald") {
    opts.ci_method = eval::CiMethod::wald;
  } else {
    throw ConfigError(fmt::format("unknown interval '{}'", a.ci));
  }
  if (a.test == "exact") {
    opts.test_method = eval::TestMethod::exact;
  } else if (a.test == "normal") {
    opts.test_method = eval::TestMethod::normal;
  } else {
    throw ConfigError(fmt::format("unknown test '{}'", a.test));
  }
  const auto manifest = pairs::BlindingManifest::from_json(io::parse_json(io::read_file(a.manifest)));
  const auto answers = eval::answers_from_csv(io::read_csv(a.answers));
  const auto s = eval::preference_summary(answers, eval::parse_question_set(a.questions), manifest, opts);
  emit(ctx, common.out, io::dump_pretty(eval::to_json(s)) + "\n");
}

struct ServeArgs {
  std::string db;
  std::optional<int> port;
  std::string host;
  std::string static_dir;
};

annotation::AnnotationServer* g_server = nullptr;

void do_serve(const Context& ctx, const Common& common, const ServeArgs& a) {
  auto cfg = annotation::ServerConfig::from(common.file());
  if (!a.db.empty()) cfg.db_path = a.db;
  if (a.port) cfg.port = *a.port;
  if (!a.host.empty()) cfg.host = a.host;
  if (!a.static_dir.empty()) cfg.static_dir = a.static_dir;
  if (!cfg.static_dir.empty() && !fs::is_directory(cfg.static_dir))
    throw ConfigError(fmt::format("static_dir is not a directory: {}", cfg.static_dir.string()));
  annotation::AnnotationStore store(cfg.db_path);
  const auto host = cfg.host;
  const auto port = cfg.port;
  annotation::AnnotationServer server(store, std::move(cfg));
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  ctx.err << fmt::format("serving on http://{}:{}\n", host, port);
  server.listen();
  g_server = nullptr;
}

struct MockRunArgs {
  std::string out_dir;
  std::string truth;
  std::size_t sample = 100;
};

/// Offline end-to-end run: detect, respond, extract-originals, pairs and
/// evaluate, written to one directory.
void do_mock_run(const Context& ctx, const Common& common, const MockRunArgs& a) {
  if (common.mock_path() == std::nullopt) throw ConfigError("mock-run needs --mock");
  fs::create_directories(a.out_dir);
  const auto dir = fs::path(a.out_dir);
  const auto cfg_path = [&](std::string_view name) { return (dir / name).string(); };
  Context quiet{ctx.out, ctx.err};

  Common c = common;
  c.out = cfg_path("verdicts.jsonl");
  c.manifest = cfg_path("detect_manifest.json");
  do_detect(quiet, c, DetectArgs{});

  TargetOptions t;
  t.verdicts = cfg_path("verdicts.jsonl");
  t.truth = a.truth;
  t.sample = a.sample;
  c.out = cfg_path("simulated.jsonl");
  c.manifest = cfg_path("respond_manifest.json");
  do_respond(quiet, c, t);

  c.out = cfg_path("originals.jsonl");
  c.manifest.clear();
  do_extract(quiet, c, t);

  c.out = cfg_path("pairs.json");
  do_pairs(quiet, c, PairsArgs{cfg_path("simulated.jsonl"), cfg_path("originals.jsonl"), cfg_path("blinding.json")});

  if (!a.truth.empty()) {
    std::ostringstream text;
    Context capture{text, ctx.err};
    c.out = cfg_path("report.json");
    do_evaluate(capture, c, EvaluateArgs{cfg_path("verdicts.jsonl"), a.truth, {}});
    ctx.out << text.str();
  }
  ctx.out << fmt::format("outputs written to {}\n", dir.string());
}

int exit_code_for(const Error& e) { return e.kind() == ErrorKind::validation ? 1 : 2; }

}  // namespace

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Harassment detection and counterspeech evaluation toolkit", "dmguard"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dmguard 0.1.0");
  const Context ctx{out, err};
  std::function<void()> action;

  Common c_ingest, c_detect, c_respond, c_extract, c_pairs, c_eval, c_sweep, c_vote, c_adj, c_stats, c_serve, c_mock;

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Normalize a platform export into corpus JSONL");
  c_ingest.add_to(ingest, false);
  ingest->add_option("--input", ingest_args.input, "Export file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--format", ingest_args.format, "platform_json or normalized_jsonl")
      ->check(CLI::IsMember({"platform_json", "normalized_jsonl"}));
  ingest->add_option("--donor", ingest_args.donor, "Display name of the donating participant");
  ingest->add_flag("--two-party-only", ingest_args.two_party, "Drop group conversations");
  ingest->callback([&] { action = [&] { do_ingest(ctx, c_ingest, ingest_args); }; });

  DetectArgs detect_args;
  auto* detect = app.add_subcommand("detect", "Classify messages with the two-agent cascade");
  c_detect.add_to(detect, true);
  detect->add_option("--checkpoint", detect_args.checkpoint, "Resumable journal file");
  detect->add_option("--exclude", detect_args.exclude, "Ids to skip (e.g. few-shot examples)")
      ->check(CLI::ExistingFile);
  detect->add_flag("--all-senders", detect_args.all_senders, "Also classify the donor's own messages");
  detect->callback([&] { action = [&] { do_detect(ctx, c_detect, detect_args); }; });

  TargetOptions respond_targets;
  auto* respond = app.add_subcommand("respond", "Simulate counterspeech responses");
  c_respond.add_to(respond, true);
  respond_targets.add_to(respond);
  respond->callback([&] { action = [&] { do_respond(ctx, c_respond, respond_targets); }; });

  TargetOptions extract_targets;
  auto* extract = app.add_subcommand("extract-originals", "Collect the donor's actual replies");
  c_extract.add_to(extract, true);
  extract_targets.add_to(extract);
  extract->callback([&] { action = [&] { do_extract(ctx, c_extract, extract_targets); }; });

  PairsArgs pairs_args;
  auto* pairs_cmd = app.add_subcommand("pairs", "Build blinded comparison pairs");
  c_pairs.add_to(pairs_cmd, true);
  pairs_cmd->add_option("--simulated", pairs_args.simulated, "Output of respond")->required()->check(CLI::ExistingFile);
  pairs_cmd->add_option("--originals", pairs_args.originals, "Output of extract-originals")
      ->required()
      ->check(CLI::ExistingFile);
  pairs_cmd->add_option("--blinding", pairs_args.blinding, "Blinding manifest output (admin only)")->required();
  pairs_cmd->callback([&] { action = [&] { do_pairs(ctx, c_pairs, pairs_args); }; });

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix and classification report");
  c_eval.add_to(evaluate, false);
  evaluate->add_option("--pred", eval_args.pred, "Verdict JSONL or message_id,label CSV")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--truth", eval_args.truth, "message_id,label CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--exclude", eval_args.exclude, "Ids to leave out")->check(CLI::ExistingFile);
  evaluate->callback([&] { action = [&] { do_evaluate(ctx, c_eval, eval_args); }; });

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Pick the F1-maximizing score threshold");
  c_sweep.add_to(sweep, false);
  sweep->add_option("--scores", sweep_args.scores, "message_id,score CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--truth", sweep_args.truth, "message_id,label CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--steps", sweep_args.steps, "Grid resolution")->check(CLI::PositiveNumber);
  sweep->callback([&] { action = [&] { do_sweep(ctx, c_sweep, sweep_args); }; });

  std::string votes_path;
  auto* vote = app.add_subcommand("vote", "Majority vote across model labels");
  c_vote.add_to(vote, false);
  vote->add_option("--votes", votes_path, "message_id plus one 0/1 column per model")
      ->required()
      ->check(CLI::ExistingFile);
  vote->callback([&] { action = [&] { do_vote(ctx, c_vote, votes_path); }; });

  std::string adj_path;
  auto* adjudicate = app.add_subcommand("adjudicate", "Resolve ground-truth labels from labeling rounds");
  c_adj.add_to(adjudicate, false);
  adjudicate->add_option("--labels", adj_path, "message_id, round1*, round2, tiebreak columns")
      ->required()
      ->check(CLI::ExistingFile);
  adjudicate->callback([&] { action = [&] { do_adjudicate(ctx, c_adj, adj_path); }; });

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Preference proportion, interval and binomial test");
  c_stats.add_to(stats, false);
  stats->add_option("--answers", stats_args.answers, "Comparison answers CSV")->required()->check(CLI::ExistingFile);
  stats->add_option("--manifest", stats_args.manifest, "Blinding manifest JSON")->required()->check(CLI::ExistingFile);
  stats->add_option("--questions", stats_args.questions, "Question set, e.g. 1-4 or 5");
  stats->add_option("--ci", stats_args.ci, "wilson or wald")->check(CLI::IsMember({"wilson", "wald"}));
  stats->add_option("--test", stats_args.test, "exact or normal")->check(CLI::IsMember({"exact", "normal"}));
  stats->add_option("--level", stats_args.level, "Confidence level")->check(CLI::Range(0.5, 0.9999));
  stats->callback([&] { action = [&] { do_stats(ctx, c_stats, stats_args); }; });

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the annotation API and console");
  c_serve.add_to(serve, false);
  serve->add_option("--db", serve_args.db, "SQLite database path");
  serve->add_option("--host", serve_args.host, "Bind address");
  serve->add_option("--port", serve_args.port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--static", serve_args.static_dir, "Console bundle directory");
  serve->callback([&] { action = [&] { do_serve(ctx, c_serve, serve_args); }; });

  MockRunArgs mock_args;
  auto* mock_run = app.add_subcommand("mock-run", "Offline end-to-end run against a scripted gateway");
  c_mock.add_to(mock_run, true);
  mock_run->add_option("--out-dir", mock_args.out_dir, "Output directory")->required();
  mock_run->add_option("--truth", mock_args.truth, "message_id,label CSV")->check(CLI::ExistingFile);
  mock_run->add_option("--sample", mock_args.sample, "Comparison pairs to build");
  mock_run->callback([&] { action = [&] { do_mock_run(ctx, c_mock, mock_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    action();
    return 0;
  } catch (const CoverageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace dmguard::cli
