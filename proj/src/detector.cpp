#include "dmguard/detector.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "dmguard/errors.hpp"
#include "dmguard/io.hpp"
#include "dmguard/parallel.hpp"
#include "dmguard/text.hpp"

namespace dmguard::detector {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

ParsedVerdict parse_verdict(std::string_view raw) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '0' && raw[i] != '1') continue;
    if (i > 0 && is_digit(raw[i - 1])) continue;
    if (i + 1 < raw.size() && is_digit(raw[i + 1])) continue;
    const auto rest = text::trim(text::strip_leading_punct(raw.substr(i + 1)));
    return ParsedVerdict{raw[i] - '0', std::string(rest), true};
  }
  return ParsedVerdict{0, {}, false};
}

int cascade(int agent1, std::optional<int> agent2) {
  if (agent1 != 0 && agent1 != 1) throw ContractError(fmt::format("agent 1 label must be 0 or 1, got {}", agent1));
  if (agent1 == 0) {
    if (agent2) throw ContractError("agent 2 label given although agent 1 said 0");
    return 0;
  }
  if (!agent2) throw ContractError("agent 1 said 1 but no agent 2 label was given");
  if (*agent2 != 0 && *agent2 != 1) throw ContractError(fmt::format("agent 2 label must be 0 or 1, got {}", *agent2));
  return *agent2;
}

std::string previous_result(const AgentVerdict& v) {
  return v.reasoning.empty() ? fmt::format("{}.", v.label) : fmt::format("{}. {}", v.label, v.reasoning);
}

Detector::Detector(Gateway& gateway, const PromptCatalog& catalog, DetectionRunConfig config)
    : gateway_(&gateway), catalog_(&catalog), config_(std::move(config)) {}

AgentVerdict Detector::ask(Agent agent, TemplateId id, const PromptVars& vars, const std::string& target_id) const {
  CompletionRequest request;
  request.prompt = catalog_->render(id, vars);
  request.params = SamplingParams::for_template(id, config_.sampling, static_cast<std::int64_t>(config_.seed));
  request.correlation_id = target_id;

  AgentVerdict v;
  v.agent = agent;
  for (int reprompt = 0; reprompt <= config_.max_reprompts; ++reprompt) {
    request.reprompt = reprompt;
    CompletionResult result;
    try {
      result = gateway_->complete(request);
    } catch (const AuthError& e) {
      throw AuthError(fmt::format("{}: {}", target_id, e.what()));
    } catch (const Error& e) {
      throw GatewayError(fmt::format("{}: {}", target_id, e.what()));
    }
    const auto parsed = parse_verdict(result.text);
    v.raw_text = std::move(result.text);
    if (parsed.parse_ok) {
      v.label = parsed.label;
      v.reasoning = parsed.reasoning;
      v.parse_ok = true;
      return v;
    }
  }
  v.label = 0;
  v.reasoning.clear();
  v.parse_ok = false;
  return v;
}

VerdictRecord Detector::classify_message(const ContextWindow& win) const {
  const auto transcript = corpus::render_transcript(win, TranscriptMarker::label_this);
  VerdictRecord rec;
  rec.message_id = win.target.message_id;
  rec.conversation_id = win.target.conversation_id;
  rec.timestamp_ms = win.target.timestamp_ms;
  rec.window_size = win.window_size();
  rec.agent1 = ask(Agent::agent1, TemplateId::clf_agent1, {{"csv_input", transcript.text}}, rec.message_id);
  if (rec.agent1.label == 1) {
    rec.agent2 = ask(Agent::agent2, TemplateId::clf_agent2,
                     {{"csv_input", transcript.text}, {"previous_result", previous_result(rec.agent1)}},
                     rec.message_id);
  }
  rec.final_label = cascade(rec.agent1.label, rec.agent2 ? std::optional<int>(rec.agent2->label) : std::nullopt);
  return rec;
}

nlohmann::ordered_json to_json(const VerdictRecord& r) {
  nlohmann::ordered_json j;
  j["message_id"] = r.message_id;
  j["conversation_id"] = r.conversation_id;
  j["timestamp_ms"] = r.timestamp_ms;
  j["window_size"] = r.window_size;
  j["agent1_label"] = r.agent1.label;
  j["agent1_reasoning"] = r.agent1.reasoning;
  j["agent1_raw"] = r.agent1.raw_text;
  j["agent1_parse_ok"] = r.agent1.parse_ok;
  if (r.agent2) {
    j["agent2_label"] = r.agent2->label;
    j["agent2_reasoning"] = r.agent2->reasoning;
    j["agent2_raw"] = r.agent2->raw_text;
    j["agent2_parse_ok"] = r.agent2->parse_ok;
  }
  j["final_label"] = r.final_label;
  return j;
}

VerdictRecord verdict_from_json(const nlohmann::json& j) {
  try {
    VerdictRecord r;
    r.message_id = j.at("message_id").get<std::string>();
    r.conversation_id = j.value("conversation_id", std::string{});
    r.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
    r.window_size = j.value("window_size", std::size_t{0});
    r.agent1 = AgentVerdict{Agent::agent1, j.at("agent1_label").get<int>(), j.value("agent1_reasoning", std::string{}),
                            j.value("agent1_raw", std::string{}), j.value("agent1_parse_ok", true)};
    if (j.contains("agent2_label")) {
      r.agent2 = AgentVerdict{Agent::agent2, j.at("agent2_label").get<int>(),
                              j.value("agent2_reasoning", std::string{}), j.value("agent2_raw", std::string{}),
                              j.value("agent2_parse_ok", true)};
    }
    r.final_label = j.at("final_label").get<int>();
    if (r.final_label != cascade(r.agent1.label, r.agent2 ? std::optional<int>(r.agent2->label) : std::nullopt)) {
      throw ContractError(fmt::format("{}: final_label disagrees with cascade rule", r.message_id));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("malformed verdict record: {}", e.what()), 0);
  }
}

std::string to_jsonl(const std::vector<VerdictRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += io::dump_line(to_json(r));
    out.push_back('\n');
  }
  return out;
}

std::vector<VerdictRecord> read_verdicts(const std::filesystem::path& path) {
  std::vector<VerdictRecord> out;
  for (const auto& j : io::read_jsonl(path)) out.push_back(verdict_from_json(j));
  return out;
}

std::vector<const MessageRecord*> eligible_messages(const std::vector<Conversation>& convs,
                                                    const DetectionRunConfig& cfg) {
  std::vector<const MessageRecord*> out;
  for (const auto& c : convs) {
    for (const auto& m : c.messages) {
      if (cfg.exclusions.contains(m.message_id)) continue;
      if (cfg.donor_filter && m.from_donor()) continue;
      out.push_back(&m);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const MessageRecord* a, const MessageRecord* b) {
    return std::tie(a->conversation_id, a->timestamp_ms, a->message_id) <
           std::tie(b->conversation_id, b->timestamp_ms, b->message_id);
  });
  return out;
}

std::string config_hash(const DetectionRunConfig& cfg, const PromptCatalog& catalog, std::string_view model_id) {
  nlohmann::ordered_json j;
  j["window"] = cfg.window;
  j["exclusions"] = cfg.exclusions;
  j["donor_filter"] = cfg.donor_filter;
  j["seed"] = cfg.seed;
  j["max_reprompts"] = cfg.max_reprompts;
  j["temperature"] = cfg.sampling.classification_temperature;
  j["top_p"] = cfg.sampling.top_p;
  j["max_tokens"] = cfg.sampling.max_tokens;
  j["model"] = model_id;
  j["clf_agent1"] = catalog.template_hash(TemplateId::clf_agent1);
  j["clf_agent2"] = catalog.template_hash(TemplateId::clf_agent2);
  return text::hex64(text::fnv1a64(io::dump_line(j)));
}

DetectionRun run_detection(const std::vector<Conversation>& corpus, Gateway& gateway, const PromptCatalog& catalog,
                           const DetectionRunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint) {
  const auto started_at = io::utc_timestamp_now();
  const auto hash = config_hash(cfg, catalog, gateway.model_id());
  const auto targets = eligible_messages(corpus, cfg);
  corpus::CorpusIndex index(corpus);

  std::map<std::string, VerdictRecord, std::less<>> done;
  std::optional<Checkpoint> journal;
  if (checkpoint) {
    journal.emplace(*checkpoint, hash);
    std::set<std::string_view> wanted;
    for (const auto* m : targets) wanted.insert(m->message_id);
    for (auto& r : journal->load()) {
      if (!wanted.contains(r.message_id)) {
        throw CheckpointError(fmt::format("checkpoint holds '{}', which is not part of this run", r.message_id));
      }
      auto id = r.message_id;
      done.emplace(std::move(id), std::move(r));
    }
    journal->open_for_append();
  }

  DetectionRun run;
  run.records.resize(targets.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (const auto it = done.find(targets[i]->message_id); it != done.end()) {
      run.records[i] = it->second;
      ++run.reused;
    } else {
      pending.push_back(i);
    }
  }

  const Detector detector(gateway, catalog, cfg);
  parallel_for(pending.size(), cfg.jobs, [&](std::size_t k) {
    const auto i = pending[k];
    const auto& conv = index.conversation_of(targets[i]->message_id);
    auto rec = detector.classify_message(corpus::build_context(conv, targets[i]->message_id, cfg.window));
    if (journal) journal->append(rec);
    run.records[i] = std::move(rec);
  });

  std::size_t positives = 0;
  for (const auto& r : run.records) positives += static_cast<std::size_t>(r.final_label);

  auto& m = run.manifest;
  m["command"] = "detect";
  m["config_hash"] = hash;
  m["model_id"] = gateway.model_id();
  m["template_hashes"] = {{"clf_agent1", catalog.template_hash(TemplateId::clf_agent1)},
                          {"clf_agent2", catalog.template_hash(TemplateId::clf_agent2)}};
  m["window"] = cfg.window;
  m["donor_filter"] = cfg.donor_filter;
  m["exclusions"] = cfg.exclusions;
  m["seed"] = cfg.seed;
  m["records"] = run.records.size();
  m["final_positive"] = positives;
  m["reused_from_checkpoint"] = run.reused;
  m["started_at"] = started_at;
  m["finished_at"] = io::utc_timestamp_now();
  return run;
}

}  // namespace dmguard::detector
