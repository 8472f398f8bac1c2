#include <fmt/format.h>

#include "dmguard/errors.hpp"
#include "dmguard/gateway.hpp"
#include "dmguard/io.hpp"

namespace dmguard {

MockGateway::MockGateway(const std::vector<Entry>& entries, std::uint64_t seed) : seed_(seed) {
  for (const auto& e : entries) add(e.template_id, e.target_message_id, e.completion_text);
}

std::vector<MockGateway::Entry> MockGateway::parse_script(std::string_view text) {
  std::vector<Entry> entries;
  for (const auto& j : io::parse_jsonl(text)) {
    if (!j.is_object() || !j.contains("template_id") || !j.contains("target_message_id") ||
        !j.contains("completion_text")) {
      throw ParseError("mock script line needs template_id, target_message_id, completion_text", 0);
    }
    entries.push_back(Entry{template_from_name(j.at("template_id").get<std::string>()),
                            j.at("target_message_id").get<std::string>(),
                            j.at("completion_text").get<std::string>()});
  }
  return entries;
}

MockGateway MockGateway::from_jsonl(std::string_view text, std::uint64_t seed) {
  return MockGateway(parse_script(text), seed);
}

MockGateway MockGateway::load(const std::filesystem::path& path, std::uint64_t seed) {
  return from_jsonl(io::read_file(path), seed);
}

void MockGateway::add(TemplateId id, std::string target_message_id, std::string completion_text) {
  script_[{id, std::move(target_message_id)}].push_back(std::move(completion_text));
}

std::string MockGateway::fallback(const CompletionRequest& request) const {
  switch (request.prompt.template_id) {
    case TemplateId::clf_agent1:
    case TemplateId::clf_agent2:
      return "0. No hostility present.";
    case TemplateId::resp_agent1:
      return "5. Empathy can remind them that words hurt.";
    case TemplateId::resp_agent2:
      return "Response 1: hey that kinda hurt tbh\nStrategies: 5\nReasoning: Empathy reminds them words hurt.";
  }
  return {};
}

CompletionResult MockGateway::complete(const CompletionRequest& request) {
  const auto id = request.prompt.template_id;
  counters_[static_cast<std::size_t>(id)].fetch_add(1);
  {
    std::lock_guard lock(per_target_mutex_);
    ++per_target_[{id, request.correlation_id}];
  }
  CompletionResult result;
  result.model_id = model_id();
  const auto it = script_.find(std::make_pair(id, request.correlation_id));
  if (it == script_.end()) {
    result.text = fallback(request);
  } else {
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(std::max(request.reprompt, 0)),
                                           it->second.size() - 1);
    result.text = it->second[idx];
  }
  return result;
}

std::size_t MockGateway::calls_for(TemplateId id, std::string_view target) const {
  std::lock_guard lock(per_target_mutex_);
  const auto it = per_target_.find({id, std::string(target)});
  return it == per_target_.end() ? 0 : it->second;
}

void MockGateway::reset_counters() noexcept {
  for (auto& c : counters_) c.store(0);
  std::lock_guard lock(per_target_mutex_);
  per_target_.clear();
}

}  // namespace dmguard
