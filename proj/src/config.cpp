#include "dmguard/config.hpp"

#include <charconv>

#include <fmt/format.h>

#include "dmguard/errors.hpp"
#include "dmguard/io.hpp"
#include "dmguard/text.hpp"

namespace dmguard {

namespace {

std::string parse_quoted(std::string_view v, std::size_t line_no) {
  const char quote = v.front();
  std::string out;
  std::size_t i = 1;
  for (; i < v.size() && v[i] != quote; ++i) {
    if (quote == '"' && v[i] == '\\' && i + 1 < v.size()) {
      ++i;
      switch (v[i]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: out.push_back(v[i]);
      }
    } else {
      out.push_back(v[i]);
    }
  }
  if (i >= v.size()) throw ConfigError(fmt::format("config line {}: unterminated string", line_no));
  const auto rest = text::trim(v.substr(i + 1));
  if (!rest.empty() && rest.front() != '#') {
    throw ConfigError(fmt::format("config line {}: trailing characters after string", line_no));
  }
  return out;
}

KeyValueConfig::Value parse_value(std::string_view v, std::size_t line_no) {
  if (v.empty()) throw ConfigError(fmt::format("config line {}: missing value", line_no));
  if (v.front() == '"' || v.front() == '\'') return parse_quoted(v, line_no);
  if (const auto hash = v.find('#'); hash != std::string_view::npos) v = text::trim(v.substr(0, hash));
  if (v == "true") return true;
  if (v == "false") return false;
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i); ec == std::errc() && p == v.data() + v.size()) {
    return i;
  }
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d); ec == std::errc() && p == v.data() + v.size()) {
    return d;
  }
  throw ConfigError(fmt::format("config line {}: cannot parse value '{}'", line_no, v));
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = text::trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("config line {}: malformed section header", line_no));
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
    const auto key = text::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(fmt::format("config line {}: empty key", line_no));
    const auto full = section.empty() ? std::string(key) : section + "." + std::string(key);
    cfg.values_[full] = parse_value(text::trim(line.substr(eq + 1)), line_no);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

std::optional<std::string> KeyValueConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw ConfigError(fmt::format("config key '{}' must be a string", key));
}

std::optional<std::int64_t> KeyValueConfig::get_int(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  throw ConfigError(fmt::format("config key '{}' must be an integer", key));
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw ConfigError(fmt::format("config key '{}' must be a number", key));
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (const auto* b = std::get_if<bool>(&it->second)) return *b;
  throw ConfigError(fmt::format("config key '{}' must be true or false", key));
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(std::string_view prefix) const {
  std::vector<std::string> keys;
  for (const auto& [k, v] : values_) {
    if (k.starts_with(prefix)) keys.push_back(k);
  }
  return keys;
}

RunConfig RunConfig::from(const KeyValueConfig& kv) {
  RunConfig c;
  if (auto v = kv.get_string("endpoint")) c.endpoint_url = *v;
  if (auto v = kv.get_string("model")) c.model_id = *v;
  if (auto v = kv.get_string("api_key_env")) c.api_key_env = *v;
  if (auto v = kv.get_int("window")) c.window = static_cast<int>(*v);
  if (auto v = kv.get_int("seed")) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = kv.get_int("jobs")) c.jobs = static_cast<int>(*v);
  if (auto v = kv.get_int("max_in_flight")) c.max_in_flight = static_cast<int>(*v);
  if (auto v = kv.get_int("max_attempts")) c.max_attempts = static_cast<int>(*v);
  if (auto v = kv.get_string("few_shot_file")) c.few_shot_file = *v;
  if (auto v = kv.get_string("donor")) c.donor = *v;
  if (auto v = kv.get_double("sampling.classification_temperature")) c.sampling.classification_temperature = *v;
  if (auto v = kv.get_double("sampling.responder_temperature")) c.sampling.responder_temperature = *v;
  if (auto v = kv.get_double("sampling.top_p")) c.sampling.top_p = *v;
  if (auto v = kv.get_int("sampling.max_tokens")) c.sampling.max_tokens = static_cast<int>(*v);
  if (auto v = kv.get_int("originals.ignore_seconds")) c.originals.ignore_seconds = *v;
  if (auto v = kv.get_int("originals.gap_seconds")) c.originals.gap_seconds = *v;
  if (auto v = kv.get_int("originals.skip_limit")) c.originals.skip_limit = static_cast<int>(*v);
  return c;
}

void RunConfig::validate() const {
  if (window < 0) throw ConfigError("window must be >= 0");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (sampling.classification_temperature < 0 || sampling.responder_temperature < 0) {
    throw ConfigError("temperature must be >= 0");
  }
  if (!(sampling.top_p > 0.0 && sampling.top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  if (sampling.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (originals.ignore_seconds < 0 || originals.gap_seconds < 0 || originals.skip_limit < 0) {
    throw ConfigError("original-response limits must be non-negative");
  }
  if (!few_shot_file.empty() && !std::filesystem::exists(few_shot_file)) {
    throw ConfigError(fmt::format("few_shot_file not found: {}", few_shot_file.string()));
  }
}

}  // namespace dmguard
