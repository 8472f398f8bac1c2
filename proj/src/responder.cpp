#include "dmguard/responder.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <random>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dmguard/errors.hpp"
#include "dmguard/parallel.hpp"
#include "dmguard/text.hpp"

namespace dmguard::responder {

std::size_t count_words(std::string_view s) { return text::split_words(s).size(); }

std::string truncate_words(std::string_view s, std::size_t max_words) {
  const auto words = text::split_words(s);
  std::string out;
  for (std::size_t i = 0; i < words.size() && i < max_words; ++i) {
    if (i > 0) out.push_back(' ');
    out += words[i];
  }
  return out;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::set<int> numbers_in(std::string_view s) {
  std::set<int> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    int v = 0;
    std::size_t start = i;
    while (i < s.size() && is_digit(s[i])) {
      if (i - start < 6) v = v * 10 + (s[i] - '0');
      ++i;
    }
    if (v >= 1 && v <= 9) out.insert(v);
  }
  return out;
}

}  // namespace

std::optional<StrategySelection> parse_strategy_choice(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size() && !is_digit(raw[i])) ++i;
  if (i == raw.size()) return std::nullopt;

  std::set<int> picked;
  while (true) {
    const std::size_t start = i;
    int v = 0;
    while (i < raw.size() && is_digit(raw[i])) {
      if (i - start < 6) v = v * 10 + (raw[i] - '0');
      ++i;
    }
    if (v >= 1 && v <= 9) picked.insert(v);
    std::size_t j = i;
    while (j < raw.size() && (raw[j] == ',' || raw[j] == ';' || raw[j] == '&' || text::is_space(raw[j]))) ++j;
    if (j + 3 < raw.size() && text::iequals_prefix(raw.substr(j), "and") && text::is_space(raw[j + 3])) {
      j += 3;
      while (j < raw.size() && text::is_space(raw[j])) ++j;
    }
    if (j < raw.size() && is_digit(raw[j]) && j > i) {
      i = j;
      continue;
    }
    break;
  }
  if (picked.empty()) return std::nullopt;
  StrategySelection sel;
  sel.strategies = std::move(picked);
  sel.reasoning = std::string(text::trim(text::strip_leading_punct(raw.substr(i))));
  sel.raw_text = std::string(raw);
  sel.parse_ok = true;
  return sel;
}

namespace {

enum class MarkerKind { response, strategies, reasoning };

struct Marker {
  MarkerKind kind;
  std::size_t start;
  std::size_t content;
};

/// Matches a marker at `i`; returns the index just past its colon.
std::optional<std::size_t> match_marker(std::string_view s, std::size_t i, MarkerKind& kind) {
  if (i > 0 && is_alnum(s[i - 1])) return std::nullopt;
  auto tail = s.substr(i);
  std::size_t j = 0;
  if (text::iequals_prefix(tail, "response")) {
    j = 8;
    while (j < tail.size() && (tail[j] == ' ' || tail[j] == '\t')) ++j;
    const auto digits = j;
    while (j < tail.size() && is_digit(tail[j])) ++j;
    if (j == digits) return std::nullopt;
    kind = MarkerKind::response;
  } else if (text::iequals_prefix(tail, "strategies")) {
    j = 10;
    kind = MarkerKind::strategies;
  } else if (text::iequals_prefix(tail, "strategy")) {
    j = 8;
    kind = MarkerKind::strategies;
  } else if (text::iequals_prefix(tail, "reasoning")) {
    j = 9;
    kind = MarkerKind::reasoning;
  } else {
    return std::nullopt;
  }
  while (j < tail.size() && (tail[j] == ' ' || tail[j] == '*')) ++j;
  if (j >= tail.size() || tail[j] != ':') return std::nullopt;
  return i + j + 1;
}

std::string clean_segment(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && s.front() == '*') s = text::trim(s.substr(1));
  while (!s.empty() && s.back() == '*') s = text::trim(s.substr(0, s.size() - 1));
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = text::trim(s.substr(1, s.size() - 2));
  return std::string(s);
}

}  // namespace

DraftParse parse_draft(std::string_view raw) {
  std::vector<Marker> markers;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    MarkerKind kind{};
    if (const auto content = match_marker(raw, i, kind)) {
      markers.push_back(Marker{kind, i, *content});
      i = *content - 1;
    }
  }
  DraftParse out;
  for (std::size_t m = 0; m < markers.size(); ++m) {
    const auto end = m + 1 < markers.size() ? markers[m + 1].start : raw.size();
    auto segment = clean_segment(raw.substr(markers[m].content, end - markers[m].content));
    switch (markers[m].kind) {
      case MarkerKind::response:
        out.responses.push_back(std::move(segment));
        break;
      case MarkerKind::strategies:
        if (!out.strategies) out.strategies = numbers_in(segment);
        break;
      case MarkerKind::reasoning:
        if (out.reasoning.empty()) out.reasoning = std::move(segment);
        break;
    }
  }
  return out;
}

std::vector<std::string> draft_problems(const DraftParse& draft) {
  std::vector<std::string> problems;
  if (draft.responses.empty()) problems.emplace_back("no \"Response\" markers");
  if (draft.responses.size() > kMaxMessages) {
    problems.push_back(fmt::format("{} responses, at most {} allowed", draft.responses.size(), kMaxMessages));
  }
  for (std::size_t i = 0; i < draft.responses.size() && i < kMaxMessages; ++i) {
    const auto words = count_words(draft.responses[i]);
    if (words < kMinWords || words > kMaxWords) {
      problems.push_back(fmt::format("response {} has {} words, allowed {}..{}", i + 1, words, kMinWords, kMaxWords));
    }
  }
  return problems;
}

Responder::Responder(Gateway& gateway, const PromptCatalog& catalog, ResponderConfig config)
    : gateway_(&gateway), catalog_(&catalog), config_(std::move(config)) {}

CompletionResult Responder::call(TemplateId id, const PromptVars& vars, const std::string& target,
                                 int reprompt) const {
  CompletionRequest request;
  request.prompt = catalog_->render(id, vars);
  request.params = SamplingParams::for_template(id, config_.sampling, static_cast<std::int64_t>(config_.seed));
  request.correlation_id = target;
  request.reprompt = reprompt;
  try {
    return gateway_->complete(request);
  } catch (const AuthError& e) {
    throw AuthError(fmt::format("{}: {}", target, e.what()));
  } catch (const Error& e) {
    throw GatewayError(fmt::format("{}: {}", target, e.what()));
  }
}

StrategySelection Responder::select_strategies(const ContextWindow& win) const {
  const auto transcript = corpus::render_transcript(win, TranscriptMarker::respond_to_this);
  std::string last_raw;
  for (int reprompt = 0; reprompt <= config_.max_reprompts; ++reprompt) {
    auto result = call(TemplateId::resp_agent1, {{"csv_input", transcript.text}}, win.target.message_id, reprompt);
    if (auto sel = parse_strategy_choice(result.text)) return *sel;
    last_raw = std::move(result.text);
  }
  StrategySelection fallback;
  fallback.strategies = {kDefaultStrategy};
  fallback.raw_text = std::move(last_raw);
  fallback.parse_ok = false;
  return fallback;
}

SimulatedResponseSet Responder::draft_responses(const ContextWindow& win, const StrategySelection& sel) const {
  const auto transcript = corpus::render_transcript(win, TranscriptMarker::respond_to_this);
  const auto decision = sel.parse_ok ? sel.raw_text : fmt::format("{}.", fmt::join(sel.strategies, ", "));
  const PromptVars vars{{"csv_input", transcript.text}, {"previous_result", decision}};

  SimulatedResponseSet out;
  out.message_id = win.target.message_id;
  out.selection = sel;
  DraftParse draft;
  for (int reprompt = 0; reprompt <= config_.max_reprompts; ++reprompt) {
    auto result = call(TemplateId::resp_agent2, vars, win.target.message_id, reprompt);
    draft = parse_draft(result.text);
    out.raw_text = std::move(result.text);
    out.reprompts = reprompt;
    if (draft_problems(draft).empty()) break;
  }
  if (draft.responses.empty()) {
    throw DraftError(fmt::format("{}: drafting agent produced no \"Response\" markers after {} re-prompts",
                                 out.message_id, config_.max_reprompts));
  }

  if (draft.responses.size() > kMaxMessages) {
    out.violations.push_back(fmt::format("kept first {} of {} responses", kMaxMessages, draft.responses.size()));
    draft.responses.resize(kMaxMessages);
  }
  for (std::size_t i = 0; i < draft.responses.size(); ++i) {
    const auto words = count_words(draft.responses[i]);
    if (words == 0) {
      out.violations.push_back(fmt::format("dropped empty response {}", i + 1));
    } else if (words > kMaxWords) {
      out.violations.push_back(fmt::format("truncated response {} from {} to {} words", i + 1, words, kMaxWords));
      out.responses.push_back(truncate_words(draft.responses[i], kMaxWords));
    } else {
      out.responses.push_back(std::move(draft.responses[i]));
    }
  }
  if (out.responses.empty()) {
    throw DraftError(fmt::format("{}: every drafted response was empty", out.message_id));
  }

  if (draft.strategies && !draft.strategies->empty()) {
    for (const int s : *draft.strategies) {
      if (!sel.parse_ok || sel.strategies.contains(s)) {
        out.strategies.insert(s);
      } else {
        out.violations.push_back(fmt::format("dropped strategy {} not in the selection", s));
      }
    }
  }
  if (out.strategies.empty()) out.strategies = sel.strategies;
  out.reasoning = std::move(draft.reasoning);
  return out;
}

SimulatedResponseSet Responder::simulate(const ContextWindow& win) const {
  return draft_responses(win, select_strategies(win));
}

OriginalResponseSet extract_original_responses(const Conversation& conv, std::string_view harassment_id,
                                               const OriginalResponseLimits& limits) {
  const auto it = std::find_if(conv.messages.begin(), conv.messages.end(),
                               [&](const MessageRecord& m) { return m.message_id == harassment_id; });
  if (it == conv.messages.end()) {
    throw NotFound(fmt::format("message '{}' not in conversation '{}'", harassment_id, conv.conversation_id));
  }
  if (it->from_donor()) {
    throw ContractError(fmt::format("'{}' was sent by the donor; only messages sent to the donor qualify", harassment_id));
  }
  const auto ignore_ms = limits.ignore_seconds * 1000;
  const auto gap_ms = limits.gap_seconds * 1000;

  OriginalResponseSet out;
  out.message_id = std::string(harassment_id);
  int skipped = 0;
  std::int64_t last_ts = it->timestamp_ms;
  for (auto m = std::next(it); m != conv.messages.end() && out.responses.size() < kMaxMessages; ++m) {
    if (out.responses.empty()) {
      if (!m->from_donor()) {
        if (++skipped > limits.skip_limit) break;
        continue;
      }
      if (m->timestamp_ms - it->timestamp_ms > ignore_ms) break;
    } else {
      if (!m->from_donor()) break;
      if (m->timestamp_ms - last_ts > gap_ms) break;
    }
    out.responses.push_back(m->text.empty() ? std::string(corpus::kMediaPlaceholder) : m->text);
    out.response_ids.push_back(m->message_id);
    last_ts = m->timestamp_ms;
  }
  out.ignoring = out.responses.empty();
  return out;
}

std::vector<SimulatedResponseSet> run_responder(const std::vector<Conversation>& corpus,
                                                const std::vector<std::string>& target_ids, Gateway& gateway,
                                                const PromptCatalog& catalog, const ResponderConfig& cfg) {
  const corpus::CorpusIndex index(corpus);
  for (const auto& id : target_ids) (void)index.message(id);
  const Responder responder(gateway, catalog, cfg);
  std::vector<SimulatedResponseSet> out(target_ids.size());
  parallel_for(target_ids.size(), cfg.jobs, [&](std::size_t i) {
    out[i] = responder.simulate(corpus::build_context(index.conversation_of(target_ids[i]), target_ids[i], cfg.window));
  });
  return out;
}

std::vector<std::string> sample_ids(const std::vector<std::string>& ids, std::size_t count, std::uint64_t seed) {
  if (count >= ids.size()) return ids;
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with rejection sampling keeps results identical across
  // standard libraries (std::uniform_int_distribution is not portable).
  auto bounded = [&](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = 0;
    do {
      r = rng();
    } while (r >= limit);
    return r % bound;
  };
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(bounded(order.size() - i));
    std::swap(order[i], order[j]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  std::vector<std::string> out;
  out.reserve(count);
  for (const auto i : order) out.push_back(ids[i]);
  return out;
}

nlohmann::ordered_json to_json(const SimulatedResponseSet& s) {
  nlohmann::ordered_json j;
  j["message_id"] = s.message_id;
  j["responses"] = s.responses;
  j["strategies"] = s.strategies;
  j["reasoning"] = s.reasoning;
  j["violations"] = s.violations;
  j["reprompts"] = s.reprompts;
  j["selection_strategies"] = s.selection.strategies;
  j["selection_reasoning"] = s.selection.reasoning;
  j["selection_parse_ok"] = s.selection.parse_ok;
  j["selection_raw"] = s.selection.raw_text;
  j["raw"] = s.raw_text;
  return j;
}

SimulatedResponseSet simulated_from_json(const nlohmann::json& j) {
  try {
    SimulatedResponseSet s;
    s.message_id = j.at("message_id").get<std::string>();
    s.responses = j.at("responses").get<std::vector<std::string>>();
    s.strategies = j.value("strategies", std::set<int>{});
    s.reasoning = j.value("reasoning", std::string{});
    s.violations = j.value("violations", std::vector<std::string>{});
    s.reprompts = j.value("reprompts", 0);
    s.selection.strategies = j.value("selection_strategies", std::set<int>{});
    s.selection.reasoning = j.value("selection_reasoning", std::string{});
    s.selection.parse_ok = j.value("selection_parse_ok", true);
    s.selection.raw_text = j.value("selection_raw", std::string{});
    s.raw_text = j.value("raw", std::string{});
    if (s.responses.empty() || s.responses.size() > kMaxMessages) {
      throw ParseError(fmt::format("{}: simulated set must hold 1..3 responses", s.message_id), 0);
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("malformed simulated response record: {}", e.what()), 0);
  }
}

nlohmann::ordered_json to_json(const OriginalResponseSet& o) {
  nlohmann::ordered_json j;
  j["message_id"] = o.message_id;
  j["responses"] = o.responses;
  j["response_ids"] = o.response_ids;
  j["ignoring"] = o.ignoring;
  return j;
}

OriginalResponseSet original_from_json(const nlohmann::json& j) {
  try {
    OriginalResponseSet o;
    o.message_id = j.at("message_id").get<std::string>();
    o.responses = j.at("responses").get<std::vector<std::string>>();
    o.response_ids = j.value("response_ids", std::vector<std::string>{});
    o.ignoring = j.at("ignoring").get<bool>();
    if (o.ignoring != o.responses.empty() || o.responses.size() > kMaxMessages) {
      throw ParseError(fmt::format("{}: inconsistent original response set", o.message_id), 0);
    }
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("malformed original response record: {}", e.what()), 0);
  }
}

}  // namespace dmguard::responder
