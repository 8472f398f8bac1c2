#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dmguard/config.hpp"
#include "dmguard/pairs.hpp"
#include "dmguard/preference.hpp"

struct sqlite3;

namespace dmguard::annotation {

enum class TaskKind { label_message, compare_pair };
enum class TaskStatus { open, done };
enum class LabelerRole { first_round, second_round, tiebreak, comparison };

[[nodiscard]] std::string_view kind_name(TaskKind k) noexcept;
[[nodiscard]] TaskKind kind_from_name(std::string_view s);
[[nodiscard]] std::string_view role_name(LabelerRole r) noexcept;
[[nodiscard]] LabelerRole role_from_name(std::string_view s);

struct LabelerProfile {
  std::string labeler_id;
  std::string display_name;
  LabelerRole role = LabelerRole::first_round;
};

struct Task {
  std::string task_id;
  std::string batch_id;
  std::int64_t ordinal = 0;
  TaskKind kind = TaskKind::label_message;
  std::string item_id;
  nlohmann::json payload;  ///< transcript plus target, or a blinded pair
  std::string assigned_to;
  TaskStatus status = TaskStatus::open;
};

struct LabelBody {
  int label = 0;
};

struct ComparisonBody {
  std::array<eval::Choice, eval::kSideQuestions> questions{};
  eval::IgnoreChoice q6 = eval::IgnoreChoice::not_applicable;
};

using AnswerBody = std::variant<LabelBody, ComparisonBody>;

struct Receipt {
  std::string task_id;
  std::int64_t seq = 0;
  std::int64_t submitted_at_ms = 0;
};

struct BatchItem {
  std::string item_id;
  nlohmann::json payload;
};

struct BatchRequest {
  std::string batch_id;
  TaskKind kind = TaskKind::label_message;
  std::vector<BatchItem> items;
  std::vector<std::string> labelers;
  int redundancy = 1;
  std::optional<pairs::BlindingManifest> manifest;  ///< required for compare_pair

  static BatchRequest from_json(const nlohmann::json& j);
};

struct TaskBatch {
  std::string batch_id;
  std::vector<Task> tasks;
};

struct Progress {
  std::int64_t done = 0;
  std::int64_t total = 0;
};

/// Labeler index for replica `replica` of item `item`: consecutive labelers in
/// round-robin order, so each item gets k distinct labelers and per-labeler
/// load differs by at most one.
[[nodiscard]] std::size_t assigned_labeler(std::size_t item, int replica, int redundancy, std::size_t labelers);

/// Validates an answer body against the task kind. Question 6 must be
/// not_applicable when a side is "Ignoring" and answered otherwise.
[[nodiscard]] AnswerBody parse_answer_body(TaskKind kind, const nlohmann::json& body, bool q6_enabled);
[[nodiscard]] nlohmann::ordered_json to_json(const AnswerBody& body);
[[nodiscard]] bool q6_enabled(const nlohmann::json& pair_payload);

/// SQLite-backed task and answer store (WAL journal, one file). Answers are
/// append-only; blinding data sits in its own table and only reaches the
/// unblinded admin export.
class AnnotationStore {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit AnnotationStore(const std::filesystem::path& db_path, Clock clock = {});
  ~AnnotationStore();
  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  void register_labeler(const LabelerProfile& profile);
  [[nodiscard]] bool has_labeler(const std::string& labeler_id) const;

  /// Throws ConfigError when redundancy exceeds the labeler count.
  TaskBatch create_batch(const BatchRequest& request);

  /// Lowest-ordinal open task for the labeler, or nullopt when finished.
  /// Throws AuthError for unknown labelers.
  [[nodiscard]] std::optional<Task> next_task(const std::string& labeler_id) const;

  /// Throws ValidationError on a body/kind mismatch, ConflictError on resubmission.
  Receipt submit_answer(const std::string& labeler_id, const std::string& task_id, const nlohmann::json& body);

  /// CSV of the batch's answers in submission order. `unblind` adds the
  /// manifest attribution columns and requires an admin requester.
  [[nodiscard]] std::string export_batch(const std::string& batch_id, bool unblind, bool requester_is_admin) const;

  [[nodiscard]] Progress progress(const std::string& labeler_id) const;
  [[nodiscard]] std::vector<std::string> batch_ids() const;

 private:
  sqlite3* db_ = nullptr;
  Clock clock_;
  mutable std::mutex mutex_;
};

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path db_path = "annotation.db";
  std::filesystem::path static_dir;  ///< console bundle; not served when empty
  std::string admin_token;
  std::map<std::string, std::string> labeler_tokens;  ///< token -> labeler id
  std::vector<LabelerProfile> labelers;

  /// Reads `[serve]` and `[labelers.<id>]` sections; DMGUARD_ADMIN_TOKEN and
  /// DMGUARD_PORT override the file.
  static ServerConfig from(const KeyValueConfig& kv);
};

/// HTTP JSON API over an AnnotationStore.
///
///   GET  /api/tasks/next            labeler's next open task
///   POST /api/answers               {task_id, answer}
///   GET  /api/progress              {labeler_id, done, total}
///   GET  /api/admin/export?batch=&unblind=
///   POST /api/admin/batches         admin only
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, ServerConfig config);
  ~AnnotationServer();

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Blocks serving on the configured host and port.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dmguard::annotation
