#include "dmguard/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "dmguard/errors.hpp"
#include "dmguard/io.hpp"
#include "dmguard/text.hpp"

namespace dmguard::corpus {

using nlohmann::json;

std::string_view role_name(SenderRole role) noexcept { return role == SenderRole::donor ? "donor" : "other"; }

namespace {

void finalize(Conversation& conv) {
  std::stable_sort(conv.messages.begin(), conv.messages.end(),
                   [](const MessageRecord& a, const MessageRecord& b) { return a.timestamp_ms < b.timestamp_ms; });
  conv.participants.clear();
  for (const auto& m : conv.messages) {
    if (std::find(conv.participants.begin(), conv.participants.end(), m.sender) == conv.participants.end()) {
      conv.participants.push_back(m.sender);
    }
  }
}

void check_unique_ids(const std::vector<Conversation>& convs) {
  std::set<std::string_view> seen;
  for (const auto& c : convs) {
    for (const auto& m : c.messages) {
      if (!seen.insert(m.message_id).second) {
        throw ParseError(fmt::format("duplicate message_id '{}'", m.message_id), 0);
      }
    }
  }
}

std::string string_field(const json& obj, const char* key, std::string_view where) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(fmt::format("{}: field '{}' missing or not a string", where, key), 0);
  }
  return it->get<std::string>();
}

std::int64_t timestamp_field(const json& obj, const char* key, std::string_view where) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    throw ParseError(fmt::format("{}: field '{}' missing or not an integer", where, key), 0);
  }
  const auto ts = it->get<std::int64_t>();
  if (ts < 0) throw ParseError(fmt::format("{}: negative timestamp", where), 0);
  return ts;
}

Conversation parse_thread(const json& thread, std::size_t thread_index, const std::string& donor) {
  if (!thread.is_object()) throw ParseError(fmt::format("thread {} is not an object", thread_index), 0);
  Conversation conv;
  if (auto it = thread.find("conversation_id"); it != thread.end() && it->is_string()) {
    conv.conversation_id = it->get<std::string>();
  } else if (auto tp = thread.find("thread_path"); tp != thread.end() && tp->is_string()) {
    conv.conversation_id = tp->get<std::string>();
  } else {
    conv.conversation_id = fmt::format("thread-{:04}", thread_index + 1);
  }
  const auto msgs = thread.find("messages");
  if (msgs == thread.end() || !msgs->is_array()) {
    throw ParseError(fmt::format("thread {}: 'messages' array missing", conv.conversation_id), 0);
  }
  for (std::size_t i = 0; i < msgs->size(); ++i) {
    const auto& m = (*msgs)[i];
    const auto where = fmt::format("thread {} message {}", conv.conversation_id, i);
    if (!m.is_object()) throw ParseError(where + ": not an object", 0);
    MessageRecord rec;
    rec.conversation_id = conv.conversation_id;
    if (auto id = m.find("message_id"); id != m.end() && id->is_string()) {
      rec.message_id = id->get<std::string>();
    } else {
      rec.message_id = fmt::format("{}:{:05}", conv.conversation_id, i);
    }
    rec.sender = string_field(m, "sender_name", where);
    rec.timestamp_ms = timestamp_field(m, "timestamp_ms", where);
    if (auto content = m.find("content"); content != m.end() && content->is_string()) {
      rec.text = content->get<std::string>();
    }
    rec.sender_role = rec.sender == donor ? SenderRole::donor : SenderRole::other;
    conv.messages.push_back(std::move(rec));
  }
  finalize(conv);
  return conv;
}

std::vector<Conversation> parse_platform_json(std::string_view raw, const IngestOptions& options) {
  if (options.donor.empty()) throw ConfigError("platform export ingest requires a donor participant name");
  const auto doc = io::parse_json(raw);
  std::vector<const json*> threads;
  if (doc.is_array()) {
    for (const auto& t : doc) threads.push_back(&t);
  } else if (doc.is_object() && doc.contains("threads")) {
    const auto& arr = doc.at("threads");
    if (!arr.is_array()) throw ParseError("'threads' is not an array", 0);
    for (const auto& t : arr) threads.push_back(&t);
  } else if (doc.is_object()) {
    threads.push_back(&doc);
  } else {
    throw ParseError("export root must be an object or array", 0);
  }
  std::vector<Conversation> convs;
  convs.reserve(threads.size());
  for (std::size_t i = 0; i < threads.size(); ++i) convs.push_back(parse_thread(*threads[i], i, options.donor));
  return convs;
}

std::vector<Conversation> parse_normalized(std::string_view raw) {
  std::vector<Conversation> convs;
  std::map<std::string, std::size_t> by_id;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    auto end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    const auto line = raw.substr(pos, end - pos);
    const auto offset = pos;
    pos = end + 1;
    if (text::trim(line).empty()) continue;
    MessageRecord rec;
    try {
      rec = record_from_json(io::parse_json(line, offset));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), offset);
    }
    auto [it, inserted] = by_id.emplace(rec.conversation_id, convs.size());
    if (inserted) convs.push_back(Conversation{rec.conversation_id, {}, {}});
    convs[it->second].messages.push_back(std::move(rec));
  }
  for (auto& c : convs) finalize(c);
  return convs;
}

}  // namespace

std::vector<Conversation> parse_export(std::string_view raw, ExportFormat format, const IngestOptions& options) {
  auto convs = format == ExportFormat::platform_json ? parse_platform_json(raw, options) : parse_normalized(raw);
  check_unique_ids(convs);
  return convs;
}

std::vector<Conversation> filter_two_party(std::vector<Conversation> convs) {
  std::erase_if(convs, [](const Conversation& c) { return c.participants.size() > 2; });
  return convs;
}

ContextWindow build_context(const Conversation& conv, std::string_view target_id, std::size_t window) {
  const auto it = std::find_if(conv.messages.begin(), conv.messages.end(),
                               [&](const MessageRecord& m) { return m.message_id == target_id; });
  if (it == conv.messages.end()) {
    throw NotFound(fmt::format("message '{}' not in conversation '{}'", target_id, conv.conversation_id));
  }
  const auto index = static_cast<std::size_t>(it - conv.messages.begin());
  const auto first = index > window ? index - window : 0;
  ContextWindow win;
  win.target = *it;
  win.context.assign(conv.messages.begin() + static_cast<std::ptrdiff_t>(first), it);
  return win;
}

namespace {

void append_line(std::string& out, const MessageRecord& m, TranscriptMarker marker) {
  if (!out.empty()) out.push_back('\n');
  if (marker == TranscriptMarker::respond_to_this && m.from_donor()) {
    out += kResponderDonorPrefix;
  } else {
    out += text::single_line(m.sender);
  }
  out += ": ";
  out += m.text.empty() ? std::string(kMediaPlaceholder) : text::single_line(m.text);
}

}  // namespace

RenderedTranscript render_transcript(const ContextWindow& win, TranscriptMarker marker) {
  RenderedTranscript t;
  t.marker = marker;
  for (const auto& m : win.context) append_line(t.text, m, marker);
  append_line(t.text, win.target, marker);
  t.text += marker == TranscriptMarker::label_this ? kLabelMarker : kRespondMarker;
  return t;
}

nlohmann::ordered_json to_json(const MessageRecord& m) {
  nlohmann::ordered_json j;
  j["message_id"] = m.message_id;
  j["conversation_id"] = m.conversation_id;
  j["sender"] = m.sender;
  j["sender_role"] = role_name(m.sender_role);
  j["timestamp_ms"] = m.timestamp_ms;
  j["text"] = m.text;
  return j;
}

MessageRecord record_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("message record is not an object", 0);
  MessageRecord m;
  m.message_id = string_field(j, "message_id", "record");
  m.conversation_id = string_field(j, "conversation_id", m.message_id);
  m.sender = string_field(j, "sender", m.message_id);
  const auto role = string_field(j, "sender_role", m.message_id);
  if (role == "donor") {
    m.sender_role = SenderRole::donor;
  } else if (role == "other") {
    m.sender_role = SenderRole::other;
  } else {
    throw ParseError(fmt::format("{}: sender_role must be donor or other", m.message_id), 0);
  }
  m.timestamp_ms = timestamp_field(j, "timestamp_ms", m.message_id);
  m.text = string_field(j, "text", m.message_id);
  return m;
}

std::string to_normalized_jsonl(const std::vector<Conversation>& convs) {
  std::string out;
  for (const auto& c : convs) {
    for (const auto& m : c.messages) {
      out += io::dump_line(to_json(m));
      out.push_back('\n');
    }
  }
  return out;
}

CorpusIndex::CorpusIndex(const std::vector<Conversation>& convs) : convs_(&convs) {
  for (std::size_t c = 0; c < convs.size(); ++c) {
    for (std::size_t i = 0; i < convs[c].messages.size(); ++i) {
      positions_.emplace(convs[c].messages[i].message_id, std::make_pair(c, i));
    }
  }
}

bool CorpusIndex::contains(std::string_view message_id) const {
  return positions_.contains(std::string(message_id));
}

const Conversation& CorpusIndex::conversation_of(std::string_view message_id) const {
  const auto it = positions_.find(std::string(message_id));
  if (it == positions_.end()) throw NotFound(fmt::format("unknown message id '{}'", message_id));
  return (*convs_)[it->second.first];
}

const MessageRecord& CorpusIndex::message(std::string_view message_id) const {
  const auto it = positions_.find(std::string(message_id));
  if (it == positions_.end()) throw NotFound(fmt::format("unknown message id '{}'", message_id));
  return (*convs_)[it->second.first].messages[it->second.second];
}

}  // namespace dmguard::corpus
