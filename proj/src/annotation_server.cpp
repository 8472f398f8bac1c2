#include <cstdlib>
#include <set>

#include <fmt/format.h>
#include <httplib.h>

#include "dmguard/annotation.hpp"
#include "dmguard/errors.hpp"
#include "dmguard/io.hpp"

namespace dmguard::annotation {

using nlohmann::json;
using nlohmann::ordered_json;

ServerConfig ServerConfig::from(const KeyValueConfig& kv) {
  ServerConfig c;
  if (auto v = kv.get_string("serve.host")) c.host = *v;
  if (auto v = kv.get_int("serve.port")) c.port = static_cast<int>(*v);
  if (auto v = kv.get_string("serve.db")) c.db_path = *v;
  if (auto v = kv.get_string("serve.static_dir")) c.static_dir = *v;
  if (auto v = kv.get_string("serve.admin_token")) c.admin_token = *v;
  if (const char* env = std::getenv("DMGUARD_ADMIN_TOKEN"); env && *env) c.admin_token = env;
  if (const char* env = std::getenv("DMGUARD_PORT"); env && *env) {
    try {
      c.port = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("DMGUARD_PORT is not a port number: '{}'", env));
    }
  }
  if (c.port < 0 || c.port > 65535) throw ConfigError(fmt::format("port {} out of range", c.port));

  std::set<std::string> ids;
  const std::string prefix = "labelers.";
  for (const auto& key : kv.keys_with_prefix(prefix)) {
    const auto dot = key.find('.', prefix.size());
    if (dot == std::string::npos) continue;
    ids.insert(key.substr(prefix.size(), dot - prefix.size()));
  }
  for (const auto& id : ids) {
    const std::string base = prefix + id + ".";
    LabelerProfile p;
    p.labeler_id = id;
    p.display_name = kv.get_string(base + "name").value_or(id);
    if (auto r = kv.get_string(base + "role")) p.role = role_from_name(*r);
    std::string token = kv.get_string(base + "token").value_or("");
    if (auto env_name = kv.get_string(base + "token_env")) {
      if (const char* env = std::getenv(env_name->c_str()); env && *env) token = env;
    }
    if (token.empty()) throw ConfigError(fmt::format("labeler '{}' has no token", id));
    if (token == c.admin_token || c.labeler_tokens.contains(token))
      throw ConfigError(fmt::format("labeler '{}' token is not unique", id));
    c.labeler_tokens[token] = id;
    c.labelers.push_back(std::move(p));
  }
  if (c.admin_token.empty()) throw ConfigError("an admin token is required (serve.admin_token or DMGUARD_ADMIN_TOKEN)");
  return c;
}

namespace {

struct Caller {
  bool admin = false;
  std::string labeler_id;
};

int status_for(const std::exception& e) {
  if (dynamic_cast<const AuthError*>(&e)) return 403;
  if (dynamic_cast<const NotFound*>(&e)) return 404;
  if (dynamic_cast<const ConflictError*>(&e)) return 409;
  if (const auto* err = dynamic_cast<const Error*>(&e); err && err->kind() == ErrorKind::validation) return 400;
  return 500;
}

void send_json(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(io::dump_line(body), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view message) {
  send_json(res, status, ordered_json{{"error", message}});
}

ordered_json task_json(const Task& t) {
  return ordered_json{{"task_id", t.task_id}, {"batch_id", t.batch_id}, {"kind", kind_name(t.kind)},
                      {"item_id", t.item_id}, {"payload", t.payload},   {"q6_enabled", t.kind == TaskKind::compare_pair && q6_enabled(t.payload)}};
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationStore& store;
  ServerConfig config;
  httplib::Server server;
  std::thread thread;

  Impl(AnnotationStore& s, ServerConfig c) : store(s), config(std::move(c)) { routes(); }

  std::optional<Caller> authenticate(const httplib::Request& req) const {
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (header.size() <= kBearer.size() || header.compare(0, kBearer.size(), kBearer) != 0) return std::nullopt;
    const std::string token = header.substr(kBearer.size());
    if (token == config.admin_token) return Caller{true, {}};
    if (auto it = config.labeler_tokens.find(token); it != config.labeler_tokens.end()) return Caller{false, it->second};
    return std::nullopt;
  }

  template <typename Fn>
  httplib::Server::Handler guarded(bool admin_only, Fn fn) {
    return [this, admin_only, fn](const httplib::Request& req, httplib::Response& res) {
      const auto caller = authenticate(req);
      if (!caller) return send_error(res, 401, "missing or invalid bearer token");
      if (admin_only && !caller->admin) return send_error(res, 403, "admin role required");
      try {
        fn(*caller, req, res);
      } catch (const ParseError& e) {
        send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, status_for(e), e.what());
      }
    };
  }

  static void require_labeler(const Caller& c) {
    if (c.admin) throw ValidationError("this endpoint is for labelers");
  }

  void routes() {
    server.Get("/api/tasks/next", guarded(false, [this](const Caller& c, const httplib::Request&, httplib::Response& res) {
                 require_labeler(c);
                 auto task = store.next_task(c.labeler_id);
                 send_json(res, 200, ordered_json{{"task", task ? task_json(*task) : ordered_json(nullptr)}});
               }));

    server.Post("/api/answers", guarded(false, [this](const Caller& c, const httplib::Request& req, httplib::Response& res) {
                  require_labeler(c);
                  const json body = io::parse_json(req.body);
                  if (!body.is_object() || !body.contains("task_id") || !body["task_id"].is_string() ||
                      !body.contains("answer"))
                    throw ValidationError("expected {\"task_id\": ..., \"answer\": {...}}");
                  const auto r = store.submit_answer(c.labeler_id, body["task_id"].get<std::string>(), body["answer"]);
                  send_json(res, 201,
                            ordered_json{{"task_id", r.task_id}, {"seq", r.seq}, {"submitted_at_ms", r.submitted_at_ms}});
                }));

    server.Get("/api/progress", guarded(false, [this](const Caller& c, const httplib::Request&, httplib::Response& res) {
                 require_labeler(c);
                 const auto p = store.progress(c.labeler_id);
                 send_json(res, 200, ordered_json{{"labeler_id", c.labeler_id}, {"done", p.done}, {"total", p.total}});
               }));

    server.Get("/api/admin/export", guarded(true, [this](const Caller& c, const httplib::Request& req, httplib::Response& res) {
                 if (!req.has_param("batch")) throw ValidationError("batch parameter is required");
                 const std::string unblind = req.get_param_value("unblind");
                 const bool want_unblind = unblind == "1" || unblind == "true";
                 res.status = 200;
                 res.set_content(store.export_batch(req.get_param_value("batch"), want_unblind, c.admin), "text/csv");
               }));

    server.Post("/api/admin/batches", guarded(true, [this](const Caller&, const httplib::Request& req, httplib::Response& res) {
                  const auto batch = store.create_batch(BatchRequest::from_json(io::parse_json(req.body)));
                  send_json(res, 201, ordered_json{{"batch_id", batch.batch_id}, {"tasks", batch.tasks.size()}});
                }));

    if (!config.static_dir.empty()) server.set_mount_point("/", config.static_dir.string());
  }
};

AnnotationServer::AnnotationServer(AnnotationStore& store, ServerConfig config)
    : impl_(std::make_unique<Impl>(store, std::move(config))) {
  for (const auto& p : impl_->config.labelers) store.register_labeler(p);
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start() {
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
    port = -1;
  }
  if (port < 0) throw IoError(fmt::format("cannot bind {}:{}", impl_->config.host, impl_->config.port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void AnnotationServer::listen() {
  if (!impl_->server.listen(impl_->config.host, impl_->config.port))
    throw IoError(fmt::format("cannot listen on {}:{}", impl_->config.host, impl_->config.port));
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace dmguard::annotation
