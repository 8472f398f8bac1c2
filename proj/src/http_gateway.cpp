#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "dmguard/errors.hpp"
#include "dmguard/gateway.hpp"
#include "dmguard/io.hpp"

namespace dmguard {

HttpGatewayConfig HttpGatewayConfig::from(const RunConfig& cfg) {
  HttpGatewayConfig c;
  c.endpoint_url = cfg.endpoint_url;
  c.model_id = cfg.model_id;
  if (const char* key = std::getenv(cfg.api_key_env.c_str())) c.api_key = key;
  c.max_attempts = cfg.max_attempts;
  c.max_in_flight = cfg.max_in_flight;
  return c;
}

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError(fmt::format("endpoint URL lacks a scheme: '{}'", url));
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError(fmt::format("unsupported scheme '{}'", scheme));
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/v1/chat/completions"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_transient(int status) { return status == 408 || status == 429 || (status >= 500 && status <= 599); }

}  // namespace

HttpGateway::HttpGateway(HttpGatewayConfig config) : config_(std::move(config)) {
  if (config_.endpoint_url.empty()) throw ConfigError("no endpoint configured");
  if (config_.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (config_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  std::tie(scheme_host_port_, path_) = split_url(config_.endpoint_url);
  if (!config_.sleeper) config_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  in_flight_ = std::make_unique<std::counting_semaphore<>>(config_.max_in_flight);
}

HttpGateway::~HttpGateway() = default;

std::string HttpGateway::request_body(const CompletionRequest& request, std::string_view model) {
  io::ordered_json body;
  body["model"] = model;
  body["messages"] = io::ordered_json::array({
      {{"role", "system"}, {"content", request.prompt.system}},
      {{"role", "user"}, {"content", request.prompt.user}},
  });
  body["temperature"] = request.params.temperature;
  body["top_p"] = request.params.top_p;
  body["max_tokens"] = request.params.max_tokens;
  if (request.params.seed) body["seed"] = *request.params.seed;
  return io::dump_line(body);
}

CompletionResult HttpGateway::complete(const CompletionRequest& request) {
  request.params.validate();
  const auto body = request_body(request, config_.model_id);
  httplib::Headers headers = {{"X-Request-Id", request.correlation_id}};
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_failure;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    httplib::Result res;
    {
      in_flight_->acquire();
      httplib::Client client(scheme_host_port_);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      res = client.Post(path_, headers, body, "application/json");
      in_flight_->release();
    }
    const auto latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    if (!res) {
      last_failure = fmt::format("connection failure: {}", httplib::to_string(res.error()));
    } else if (res->status == 200) {
      try {
        const auto doc = io::parse_json(res->body);
        CompletionResult out;
        out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        out.latency_ms = latency.count();
        out.attempt = attempt;
        out.model_id = doc.value("model", config_.model_id);
        return out;
      } catch (const std::exception& e) {
        throw GatewayError(fmt::format("malformed completion response for {}: {}", request.correlation_id, e.what()));
      }
    } else if (res->status == 401 || res->status == 403) {
      throw AuthError(fmt::format("endpoint rejected credentials (HTTP {})", res->status));
    } else if (!is_transient(res->status)) {
      throw GatewayError(fmt::format("endpoint returned HTTP {} for {}", res->status, request.correlation_id));
    } else {
      last_failure = fmt::format("HTTP {}", res->status);
    }

    if (attempt < config_.max_attempts) config_.sleeper(config_.initial_backoff * (1 << (attempt - 1)));
  }
  throw GatewayError(fmt::format("gave up on {} after {} attempts: {}", request.correlation_id, config_.max_attempts,
                                 last_failure));
}

}  // namespace dmguard
