#include <algorithm>
#include <chrono>
#include <set>

#include <fmt/format.h>
#include <sqlite3.h>

#include "dmguard/annotation.hpp"
#include "dmguard/errors.hpp"
#include "dmguard/io.hpp"

namespace dmguard::annotation {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view kind_name(TaskKind k) noexcept {
  return k == TaskKind::label_message ? "label_message" : "compare_pair";
}

TaskKind kind_from_name(std::string_view s) {
  if (s == "label_message") return TaskKind::label_message;
  if (s == "compare_pair") return TaskKind::compare_pair;
  throw ValidationError(fmt::format("unknown task kind '{}'", s));
}

std::string_view role_name(LabelerRole r) noexcept {
  switch (r) {
    case LabelerRole::first_round: return "first_round";
    case LabelerRole::second_round: return "second_round";
    case LabelerRole::tiebreak: return "tiebreak";
    case LabelerRole::comparison: return "comparison";
  }
  return "first_round";
}

LabelerRole role_from_name(std::string_view s) {
  if (s == "first_round") return LabelerRole::first_round;
  if (s == "second_round") return LabelerRole::second_round;
  if (s == "tiebreak") return LabelerRole::tiebreak;
  if (s == "comparison") return LabelerRole::comparison;
  throw ConfigError(fmt::format("unknown labeler role '{}'", s));
}

std::size_t assigned_labeler(std::size_t item, int replica, int redundancy, std::size_t labelers) {
  return (item * static_cast<std::size_t>(redundancy) + static_cast<std::size_t>(replica)) % labelers;
}

bool q6_enabled(const json& pair_payload) {
  return !(pair_payload.value("side_a_is_ignoring", false) || pair_payload.value("side_b_is_ignoring", false));
}

AnswerBody parse_answer_body(TaskKind kind, const json& body, bool q6_on) {
  if (!body.is_object()) throw ValidationError("answer body must be an object");
  if (kind == TaskKind::label_message) {
    if (body.size() != 1 || !body.contains("label"))
      throw ValidationError("label task answer must be exactly {\"label\": 0|1}");
    const auto& l = body["label"];
    if (!l.is_number_integer() || (l.get<int>() != 0 && l.get<int>() != 1))
      throw ValidationError("label must be 0 or 1");
    return LabelBody{l.get<int>()};
  }
  ComparisonBody out;
  std::set<std::string> allowed;
  for (int q = 1; q <= eval::kSideQuestions; ++q) {
    const std::string key = fmt::format("q{}", q);
    allowed.insert(key);
    if (!body.contains(key) || !body[key].is_string())
      throw ValidationError(fmt::format("comparison answer is missing {}", key));
    auto c = eval::parse_choice(body[key].get<std::string>());
    if (!c) throw ValidationError(fmt::format("invalid option for {}", key));
    out.questions[static_cast<std::size_t>(q - 1)] = *c;
  }
  allowed.insert("q6");
  for (const auto& [k, v] : body.items()) {
    if (!allowed.contains(k)) throw ValidationError(fmt::format("unexpected field '{}'", k));
  }
  if (!q6_on) {
    if (body.contains("q6") && !(body["q6"].is_string() && body["q6"] == "not_applicable"))
      throw ValidationError("q6 must be not_applicable when a side is Ignoring");
    out.q6 = eval::IgnoreChoice::not_applicable;
  } else {
    if (!body.contains("q6") || !body["q6"].is_string()) throw ValidationError("comparison answer is missing q6");
    auto c = eval::parse_ignore_choice(body["q6"].get<std::string>());
    if (!c || *c == eval::IgnoreChoice::not_applicable)
      throw ValidationError("q6 must be yes, no or no_pref when neither side is Ignoring");
    out.q6 = *c;
  }
  return out;
}

ordered_json to_json(const AnswerBody& body) {
  ordered_json j;
  if (const auto* l = std::get_if<LabelBody>(&body)) {
    j["label"] = l->label;
    return j;
  }
  const auto& c = std::get<ComparisonBody>(body);
  for (int q = 0; q < eval::kSideQuestions; ++q)
    j[fmt::format("q{}", q + 1)] = eval::choice_name(c.questions[static_cast<std::size_t>(q)]);
  j["q6"] = eval::ignore_choice_name(c.q6);
  return j;
}

BatchRequest BatchRequest::from_json(const json& j) {
  BatchRequest r;
  try {
    r.batch_id = j.at("batch_id").get<std::string>();
    r.kind = kind_from_name(j.at("kind").get<std::string>());
    r.redundancy = j.value("redundancy", 1);
    r.labelers = j.at("labelers").get<std::vector<std::string>>();
    for (const auto& it : j.at("items")) {
      BatchItem b;
      b.payload = it.at("payload");
      b.item_id = it.contains("item_id") ? it["item_id"].get<std::string>()
                                         : b.payload.value("pair_id", b.payload.value("message_id", ""));
      r.items.push_back(std::move(b));
    }
    if (j.contains("manifest") && !j["manifest"].is_null()) r.manifest = pairs::BlindingManifest::from_json(j["manifest"]);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed batch request: {}", e.what()));
  }
  return r;
}

namespace {

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
      throw IoError(fmt::format("sqlite prepare failed: {}", sqlite3_errmsg(db)));
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, std::string_view s) {
    sqlite3_bind_text(stmt_, i, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  /// True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw IoError(fmt::format("sqlite step failed: {}", sqlite3_errmsg(db_)));
  }
  void run() {
    while (step()) {
    }
  }
  [[nodiscard]] std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  [[nodiscard]] std::int64_t int64(int col) const { return sqlite3_column_int64(stmt_, col); }
  [[nodiscard]] bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown";
    sqlite3_free(err);
    throw IoError(fmt::format("sqlite: {}", msg));
  }
}

class Transaction {
 public:
  explicit Transaction(sqlite3* db) : db_(db) { exec(db_, "BEGIN IMMEDIATE"); }
  ~Transaction() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    exec(db_, "COMMIT");
    done_ = true;
  }

 private:
  sqlite3* db_;
  bool done_ = false;
};

constexpr const char* kSchema = R"SQL(
CREATE TABLE IF NOT EXISTS labelers (
  labeler_id TEXT PRIMARY KEY,
  display_name TEXT NOT NULL,
  role TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS batches (
  batch_id TEXT PRIMARY KEY,
  kind TEXT NOT NULL,
  redundancy INTEGER NOT NULL,
  created_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS tasks (
  ordinal INTEGER PRIMARY KEY AUTOINCREMENT,
  task_id TEXT NOT NULL UNIQUE,
  batch_id TEXT NOT NULL REFERENCES batches(batch_id),
  kind TEXT NOT NULL,
  item_id TEXT NOT NULL,
  payload TEXT NOT NULL,
  assigned_to TEXT NOT NULL REFERENCES labelers(labeler_id),
  status TEXT NOT NULL DEFAULT 'open'
);
CREATE INDEX IF NOT EXISTS tasks_by_labeler ON tasks(assigned_to, status, ordinal);
CREATE TABLE IF NOT EXISTS answers (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  task_id TEXT NOT NULL UNIQUE REFERENCES tasks(task_id),
  labeler_id TEXT NOT NULL,
  submitted_at INTEGER NOT NULL,
  body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS blinding (
  batch_id TEXT NOT NULL,
  pair_id TEXT NOT NULL,
  simulated_side TEXT NOT NULL,
  PRIMARY KEY (batch_id, pair_id)
);
CREATE TRIGGER IF NOT EXISTS answers_no_update BEFORE UPDATE ON answers
BEGIN SELECT RAISE(ABORT, 'answers are append-only'); END;
CREATE TRIGGER IF NOT EXISTS answers_no_delete BEFORE DELETE ON answers
BEGIN SELECT RAISE(ABORT, 'answers are append-only'); END;
)SQL";

std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Task task_from_row(const Stmt& s) {
  Task t;
  t.ordinal = s.int64(0);
  t.task_id = s.text(1);
  t.batch_id = s.text(2);
  t.kind = kind_from_name(s.text(3));
  t.item_id = s.text(4);
  t.payload = json::parse(s.text(5));
  t.assigned_to = s.text(6);
  t.status = s.text(7) == "done" ? TaskStatus::done : TaskStatus::open;
  return t;
}

constexpr const char* kTaskColumns = "ordinal, task_id, batch_id, kind, item_id, payload, assigned_to, status";

void check_labeler_payload(const json& payload) {
  if (!payload.is_object()) throw ValidationError("pair payload must be an object");
  const auto& allowed = pairs::labeler_fields();
  for (const auto& [k, v] : payload.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ValidationError(fmt::format("pair payload field '{}' is not labeler-visible", k));
  }
  for (const auto& k : allowed) {
    if (!payload.contains(k)) throw ValidationError(fmt::format("pair payload is missing '{}'", k));
  }
}

}  // namespace

AnnotationStore::AnnotationStore(const std::filesystem::path& db_path, Clock clock)
    : clock_(clock ? std::move(clock) : Clock(system_clock_ms)) {
  if (sqlite3_open_v2(db_path.string().c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw IoError(fmt::format("cannot open annotation store {}: {}", db_path.string(), msg));
  }
  sqlite3_busy_timeout(db_, 5000);
  exec(db_, "PRAGMA journal_mode=WAL; PRAGMA foreign_keys=ON; PRAGMA synchronous=NORMAL;");
  exec(db_, kSchema);
}

AnnotationStore::~AnnotationStore() { sqlite3_close(db_); }

void AnnotationStore::register_labeler(const LabelerProfile& p) {
  if (p.labeler_id.empty()) throw ConfigError("labeler id must not be empty");
  std::scoped_lock lock(mutex_);
  Stmt s(db_,
         "INSERT INTO labelers(labeler_id, display_name, role) VALUES(?1, ?2, ?3) "
         "ON CONFLICT(labeler_id) DO UPDATE SET display_name=excluded.display_name, role=excluded.role");
  s.bind(1, p.labeler_id).bind(2, p.display_name).bind(3, role_name(p.role)).run();
}

bool AnnotationStore::has_labeler(const std::string& labeler_id) const {
  std::scoped_lock lock(mutex_);
  Stmt s(db_, "SELECT 1 FROM labelers WHERE labeler_id = ?1");
  s.bind(1, labeler_id);
  return s.step();
}

TaskBatch AnnotationStore::create_batch(const BatchRequest& req) {
  if (req.batch_id.empty()) throw ValidationError("batch id must not be empty");
  if (req.labelers.empty()) throw ConfigError("batch needs at least one labeler");
  if (req.redundancy < 1) throw ConfigError("redundancy must be at least 1");
  if (static_cast<std::size_t>(req.redundancy) > req.labelers.size())
    throw ConfigError(fmt::format("redundancy {} exceeds the {} available labelers", req.redundancy, req.labelers.size()));
  if (std::set<std::string>(req.labelers.begin(), req.labelers.end()).size() != req.labelers.size())
    throw ConfigError("batch labelers must be distinct");
  std::set<std::string> seen;
  for (const auto& it : req.items) {
    if (it.item_id.empty()) throw ValidationError("batch item id must not be empty");
    if (!seen.insert(it.item_id).second) throw ValidationError(fmt::format("duplicate item '{}'", it.item_id));
  }
  if (req.kind == TaskKind::compare_pair) {
    if (!req.manifest) throw ValidationError("comparison batches need a blinding manifest");
    for (const auto& it : req.items) {
      check_labeler_payload(it.payload);
      if (!req.manifest->simulated_side.contains(it.item_id))
        throw ReferenceError(fmt::format("pair '{}' is missing from the blinding manifest", it.item_id));
    }
  }

  std::scoped_lock lock(mutex_);
  for (const auto& l : req.labelers) {
    Stmt s(db_, "SELECT 1 FROM labelers WHERE labeler_id = ?1");
    s.bind(1, l);
    if (!s.step()) throw ConfigError(fmt::format("unknown labeler '{}'", l));
  }
  Transaction tx(db_);
  {
    Stmt s(db_, "SELECT 1 FROM batches WHERE batch_id = ?1");
    s.bind(1, req.batch_id);
    if (s.step()) throw ConflictError(fmt::format("batch '{}' already exists", req.batch_id));
  }
  Stmt(db_, "INSERT INTO batches(batch_id, kind, redundancy, created_at) VALUES(?1, ?2, ?3, ?4)")
      .bind(1, req.batch_id)
      .bind(2, kind_name(req.kind))
      .bind(3, std::int64_t{req.redundancy})
      .bind(4, clock_())
      .run();

  TaskBatch out{req.batch_id, {}};
  std::size_t n = 0;
  for (std::size_t i = 0; i < req.items.size(); ++i) {
    for (int r = 0; r < req.redundancy; ++r) {
      Task t;
      t.task_id = fmt::format("{}:{:05}", req.batch_id, ++n);
      t.batch_id = req.batch_id;
      t.kind = req.kind;
      t.item_id = req.items[i].item_id;
      t.payload = req.items[i].payload;
      t.assigned_to = req.labelers[assigned_labeler(i, r, req.redundancy, req.labelers.size())];
      Stmt s(db_,
             "INSERT INTO tasks(task_id, batch_id, kind, item_id, payload, assigned_to) VALUES(?1, ?2, ?3, ?4, ?5, ?6)");
      s.bind(1, t.task_id)
          .bind(2, t.batch_id)
          .bind(3, kind_name(t.kind))
          .bind(4, t.item_id)
          .bind(5, t.payload.dump())
          .bind(6, t.assigned_to)
          .run();
      t.ordinal = sqlite3_last_insert_rowid(db_);
      out.tasks.push_back(std::move(t));
    }
  }
  if (req.manifest) {
    for (const auto& it : req.items) {
      auto side = req.manifest->simulated_side.find(it.item_id);
      if (side == req.manifest->simulated_side.end()) continue;
      Stmt(db_, "INSERT INTO blinding(batch_id, pair_id, simulated_side) VALUES(?1, ?2, ?3)")
          .bind(1, req.batch_id)
          .bind(2, it.item_id)
          .bind(3, pairs::side_name(side->second))
          .run();
    }
  }
  tx.commit();
  return out;
}

std::optional<Task> AnnotationStore::next_task(const std::string& labeler_id) const {
  std::scoped_lock lock(mutex_);
  {
    Stmt s(db_, "SELECT 1 FROM labelers WHERE labeler_id = ?1");
    s.bind(1, labeler_id);
    if (!s.step()) throw AuthError(fmt::format("unknown labeler '{}'", labeler_id));
  }
  Stmt s(db_, fmt::format("SELECT {} FROM tasks WHERE assigned_to = ?1 AND status = 'open' ORDER BY ordinal LIMIT 1",
                          kTaskColumns)
                  .c_str());
  s.bind(1, labeler_id);
  if (!s.step()) return std::nullopt;
  return task_from_row(s);
}

Receipt AnnotationStore::submit_answer(const std::string& labeler_id, const std::string& task_id, const json& body) {
  std::scoped_lock lock(mutex_);
  Transaction tx(db_);
  Task task;
  {
    Stmt s(db_, fmt::format("SELECT {} FROM tasks WHERE task_id = ?1", kTaskColumns).c_str());
    s.bind(1, task_id);
    if (!s.step()) throw NotFound(fmt::format("task '{}' not found", task_id));
    task = task_from_row(s);
  }
  if (task.assigned_to != labeler_id)
    throw AuthError(fmt::format("task '{}' is not assigned to '{}'", task_id, labeler_id));
  if (task.status == TaskStatus::done) throw ConflictError(fmt::format("task '{}' was already answered", task_id));
  const bool q6_on = task.kind == TaskKind::compare_pair ? q6_enabled(task.payload) : false;
  const AnswerBody parsed = parse_answer_body(task.kind, body, q6_on);

  // Compare-and-set on status guards against a concurrent submit.
  Stmt upd(db_, "UPDATE tasks SET status = 'done' WHERE task_id = ?1 AND status = 'open'");
  upd.bind(1, task_id).run();
  if (sqlite3_changes(db_) != 1) throw ConflictError(fmt::format("task '{}' was already answered", task_id));

  Receipt r;
  r.task_id = task_id;
  r.submitted_at_ms = clock_();
  Stmt(db_, "INSERT INTO answers(task_id, labeler_id, submitted_at, body) VALUES(?1, ?2, ?3, ?4)")
      .bind(1, task_id)
      .bind(2, labeler_id)
      .bind(3, r.submitted_at_ms)
      .bind(4, to_json(parsed).dump())
      .run();
  r.seq = sqlite3_last_insert_rowid(db_);
  tx.commit();
  return r;
}

std::string AnnotationStore::export_batch(const std::string& batch_id, bool unblind, bool requester_is_admin) const {
  if (unblind && !requester_is_admin) throw AuthError("unblinded export requires the admin role");
  std::scoped_lock lock(mutex_);
  {
    Stmt s(db_, "SELECT 1 FROM batches WHERE batch_id = ?1");
    s.bind(1, batch_id);
    if (!s.step()) throw NotFound(fmt::format("batch '{}' not found", batch_id));
  }
  std::vector<std::string> header{"seq",        "task_id", "batch_id", "kind", "item_id", "labeler_id",
                                  "submitted_at", "label",  "q1",       "q2",   "q3",      "q4",
                                  "q5",         "q6"};
  if (unblind) {
    header.insert(header.end(), {"simulated_side", "side_a_source", "side_b_source"});
  }
  std::string out = io::csv_row(header);

  // Single statement, so the rows come from one read snapshot.
  Stmt s(db_,
         "SELECT a.seq, a.task_id, t.batch_id, t.kind, t.item_id, a.labeler_id, a.submitted_at, a.body, b.simulated_side "
         "FROM answers a JOIN tasks t ON t.task_id = a.task_id "
         "LEFT JOIN blinding b ON b.batch_id = t.batch_id AND b.pair_id = t.item_id "
         "WHERE t.batch_id = ?1 ORDER BY a.seq");
  s.bind(1, batch_id);
  while (s.step()) {
    const json body = json::parse(s.text(7));
    std::vector<std::string> row{std::to_string(s.int64(0)), s.text(1), s.text(2), s.text(3), s.text(4), s.text(5),
                                 std::to_string(s.int64(6))};
    row.push_back(body.contains("label") ? std::to_string(body["label"].get<int>()) : "");
    for (int q = 1; q <= 6; ++q) {
      const std::string key = fmt::format("q{}", q);
      row.push_back(body.contains(key) ? body[key].get<std::string>() : "");
    }
    if (unblind) {
      if (s.is_null(8)) {
        row.insert(row.end(), {"", "", ""});
      } else {
        const std::string side = s.text(8);
        row.push_back(side);
        row.push_back(side == "A" ? "simulated" : "original");
        row.push_back(side == "B" ? "simulated" : "original");
      }
    }
    out += io::csv_row(row);
  }
  return out;
}

Progress AnnotationStore::progress(const std::string& labeler_id) const {
  std::scoped_lock lock(mutex_);
  {
    Stmt s(db_, "SELECT 1 FROM labelers WHERE labeler_id = ?1");
    s.bind(1, labeler_id);
    if (!s.step()) throw AuthError(fmt::format("unknown labeler '{}'", labeler_id));
  }
  Stmt s(db_, "SELECT COUNT(*), COALESCE(SUM(status = 'done'), 0) FROM tasks WHERE assigned_to = ?1");
  s.bind(1, labeler_id);
  s.step();
  return Progress{s.int64(1), s.int64(0)};
}

std::vector<std::string> AnnotationStore::batch_ids() const {
  std::scoped_lock lock(mutex_);
  Stmt s(db_, "SELECT batch_id FROM batches ORDER BY created_at, batch_id");
  std::vector<std::string> out;
  while (s.step()) out.push_back(s.text(0));
  return out;
}

}  // namespace dmguard::annotation
