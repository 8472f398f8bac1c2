#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dmguard/config.hpp"
#include "dmguard/prompts.hpp"

namespace dmguard {

struct SamplingParams {
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 256;
  std::optional<std::int64_t> seed;

  /// Classification templates decode greedily; responder templates use the
  /// responder temperature.
  static SamplingParams for_template(TemplateId id, const SamplingDefaults& defaults,
                                     std::optional<std::int64_t> seed = std::nullopt);
  void validate() const;
};

struct CompletionRequest {
  PromptBundle prompt;
  SamplingParams params;
  /// Ties the response to the message it is about; never inferred from arrival order.
  std::string correlation_id;
  /// 0 for the first ask, incremented on each re-prompt after a parse failure.
  int reprompt = 0;
};

struct CompletionResult {
  std::string text;
  std::int64_t latency_ms = 0;
  int attempt = 1;
  std::string model_id;
};

/// Chat-completion style text generation. Implementations are shareable
/// across worker threads.
class Gateway {
 public:
  virtual ~Gateway() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  [[nodiscard]] virtual std::string model_id() const = 0;
};

struct HttpGatewayConfig {
  std::string endpoint_url;  ///< e.g. http://localhost:8000/v1/chat/completions
  std::string model_id;
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  int max_in_flight = 8;
  std::chrono::seconds timeout{120};
  /// Replaceable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleeper;

  static HttpGatewayConfig from(const RunConfig& cfg);
};

/// Client for an OpenAI-compatible /chat/completions endpoint with
/// exponential-backoff retries on 429, 5xx and connection failures.
class HttpGateway final : public Gateway {
 public:
  explicit HttpGateway(HttpGatewayConfig config);
  ~HttpGateway() override;

  CompletionResult complete(const CompletionRequest& request) override;
  [[nodiscard]] std::string model_id() const override { return config_.model_id; }

  /// The exact JSON body sent for `request`: model, messages and sampling params only.
  [[nodiscard]] static std::string request_body(const CompletionRequest& request, std::string_view model);

 private:
  HttpGatewayConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

/// Offline gateway driven by a script of (template_id, target_message_id,
/// completion_text) entries. Output is a pure function of the request.
class MockGateway final : public Gateway {
 public:
  struct Entry {
    TemplateId template_id;
    std::string target_message_id;
    std::string completion_text;
  };

  MockGateway() = default;
  MockGateway(const MockGateway&) = delete;
  MockGateway& operator=(const MockGateway&) = delete;
  explicit MockGateway(const std::vector<Entry>& entries, std::uint64_t seed = 0);

  /// JSONL script; repeated keys supply successive re-prompt answers.
  static std::vector<Entry> parse_script(std::string_view text);
  static MockGateway from_jsonl(std::string_view text, std::uint64_t seed = 0);
  static MockGateway load(const std::filesystem::path& path, std::uint64_t seed = 0);

  void add(TemplateId id, std::string target_message_id, std::string completion_text);

  CompletionResult complete(const CompletionRequest& request) override;
  [[nodiscard]] std::string model_id() const override { return "mock"; }

  [[nodiscard]] std::size_t calls(TemplateId id) const noexcept {
    return counters_[static_cast<std::size_t>(id)].load();
  }
  [[nodiscard]] std::size_t calls_for(TemplateId id, std::string_view target) const;
  void reset_counters() noexcept;

  /// Text returned for unscripted requests.
  [[nodiscard]] std::string fallback(const CompletionRequest& request) const;

 private:
  std::map<std::pair<TemplateId, std::string>, std::vector<std::string>, std::less<>> script_;
  std::uint64_t seed_ = 0;
  mutable std::array<std::atomic<std::size_t>, 4> counters_{};
  mutable std::mutex per_target_mutex_;
  std::map<std::pair<TemplateId, std::string>, std::size_t> per_target_;
};

}  // namespace dmguard
