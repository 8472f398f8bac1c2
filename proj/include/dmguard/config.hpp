#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dmguard {

/// Flat view over a TOML-style key/value file. `[section]` headers prefix the
/// keys that follow, so `port = 8080` under `[serve]` becomes `serve.port`.
class KeyValueConfig {
 public:
  using Value = std::variant<std::string, std::int64_t, double, bool>;

  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  [[nodiscard]] bool contains(const std::string& key) const { return values_.contains(key); }
  [[nodiscard]] std::optional<std::string> get_string(const std::string& key) const;
  [[nodiscard]] std::optional<std::int64_t> get_int(const std::string& key) const;
  [[nodiscard]] std::optional<double> get_double(const std::string& key) const;
  [[nodiscard]] std::optional<bool> get_bool(const std::string& key) const;
  /// Keys that start with `prefix`, in sorted order.
  [[nodiscard]] std::vector<std::string> keys_with_prefix(std::string_view prefix) const;

  void set(const std::string& key, Value v) { values_[key] = std::move(v); }

 private:
  std::map<std::string, Value> values_;
};

struct SamplingDefaults {
  double classification_temperature = 0.0;
  double responder_temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 256;
};

struct OriginalResponseLimits {
  std::int64_t ignore_seconds = 86400;
  std::int64_t gap_seconds = 600;
  int skip_limit = 10;
};

/// Settings shared by every subcommand. Flags override file values.
struct RunConfig {
  std::string endpoint_url;
  std::string model_id = "meta-llama/Llama-4-Scout-17B-16E-Instruct";
  std::string api_key_env = "DMGUARD_API_KEY";
  int window = 50;
  SamplingDefaults sampling;
  std::uint64_t seed = 0;
  OriginalResponseLimits originals;
  int jobs = 1;
  int max_in_flight = 8;
  int max_attempts = 3;
  std::filesystem::path few_shot_file;
  std::string donor;

  static RunConfig from(const KeyValueConfig& kv);
  /// Checks value ranges and that configured paths exist.
  void validate() const;
};

}  // namespace dmguard
