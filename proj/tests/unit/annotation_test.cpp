#include <doctest.h>

#include <httplib.h>

#include <map>
#include <sqlite3.h>

#include "dmguard/annotation.hpp"
#include "dmguard/errors.hpp"
#include "dmguard/io.hpp"
#include "test_support.hpp"

using namespace dmguard;
using namespace dmguard::annotation;
using dmguard::testing::TempDir;
using nlohmann::json;

namespace {

AnnotationStore::Clock fixed_clock() {
  auto t = std::make_shared<std::int64_t>(1'700'000'000'000);
  return [t] { return (*t)++; };
}

void add_labelers(AnnotationStore& s, int n) {
  for (int i = 0; i < n; ++i) s.register_labeler({"L" + std::to_string(i), "Labeler " + std::to_string(i), LabelerRole::comparison});
}

std::vector<std::string> labeler_ids(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("L" + std::to_string(i));
  return out;
}

BatchRequest label_batch(std::string id, int items, int labelers, int k) {
  BatchRequest r;
  r.batch_id = std::move(id);
  r.kind = TaskKind::label_message;
  r.labelers = labeler_ids(labelers);
  r.redundancy = k;
  for (int i = 0; i < items; ++i) {
    r.items.push_back({"m" + std::to_string(i), json{{"transcript", "Alex: hi (label this message)"}, {"message_id", "m" + std::to_string(i)}}});
  }
  return r;
}

json pair_payload(const std::string& id, bool ignoring) {
  return json{{"pair_id", id},
              {"context_text", "Alex: go away (Respond to this message)"},
              {"side_a", ignoring ? json::array({"Ignoring"}) : json::array({"please stop"})},
              {"side_b", json::array({"that hurt"})},
              {"side_a_is_ignoring", ignoring},
              {"side_b_is_ignoring", false}};
}

BatchRequest compare_batch(std::string id, int items, int labelers, int k) {
  BatchRequest r;
  r.batch_id = std::move(id);
  r.kind = TaskKind::compare_pair;
  r.labelers = labeler_ids(labelers);
  r.redundancy = k;
  pairs::BlindingManifest m;
  m.seed = 9;
  for (int i = 0; i < items; ++i) {
    const auto pid = "pair-" + std::to_string(i);
    r.items.push_back({pid, pair_payload(pid, i % 2 == 1)});
    m.simulated_side[pid] = i % 3 == 0 ? pairs::Side::a : pairs::Side::b;
    m.message_id[pid] = "msg" + std::to_string(i);
  }
  r.manifest = m;
  return r;
}

json full_answer(bool with_q6) {
  json a{{"q1", "set1"}, {"q2", "set2"}, {"q3", "no_pref"}, {"q4", "both_worse"}, {"q5", "set1"}};
  a["q6"] = with_q6 ? "yes" : "not_applicable";
  return a;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("round robin assignment") {
  for (std::size_t labelers = 1; labelers <= 7; ++labelers) {
    for (int k = 1; k <= static_cast<int>(labelers); ++k) {
      std::vector<int> load(labelers, 0);
      for (std::size_t item = 0; item < 37; ++item) {
        std::set<std::size_t> distinct;
        for (int r = 0; r < k; ++r) {
          const auto l = assigned_labeler(item, r, k, labelers);
          REQUIRE(l < labelers);
          distinct.insert(l);
          ++load[l];
        }
        CHECK(distinct.size() == static_cast<std::size_t>(k));
      }
      const auto [lo, hi] = std::minmax_element(load.begin(), load.end());
      CHECK(*hi - *lo <= 1);
    }
  }
}

TEST_CASE("batch sizes and balance") {
  TempDir dir;
  AnnotationStore store(dir / "a.db", fixed_clock());
  add_labelers(store, 3);

  const auto b1 = store.create_batch(label_batch("b1", 4, 2, 2));
  CHECK(b1.tasks.size() == 8);
  std::map<std::string, int> per;
  for (const auto& t : b1.tasks) ++per[t.assigned_to];
  CHECK(per["L0"] == 4);
  CHECK(per["L1"] == 4);

  const auto b2 = store.create_batch(label_batch("b2", 100, 3, 3));
  CHECK(b2.tasks.size() == 300);

  const auto b3 = store.create_batch(label_batch("b3", 5, 3, 1));
  per.clear();
  for (const auto& t : b3.tasks) ++per[t.assigned_to];
  CHECK(per.size() == 3);
  for (const auto& [l, n] : per) CHECK((n == 1 || n == 2));

  CHECK_THROWS_AS(store.create_batch(label_batch("b4", 5, 2, 3)), ConfigError);
  CHECK_THROWS_AS(store.create_batch(label_batch("b1", 1, 2, 1)), ConflictError);
  CHECK(store.batch_ids() == std::vector<std::string>{"b1", "b2", "b3"});
  CHECK(b1.tasks.front().task_id == "b1:00001");
}

TEST_CASE("batch validation") {
  TempDir dir;
  AnnotationStore store(dir / "a.db", fixed_clock());
  add_labelers(store, 2);
  auto req = compare_batch("c", 2, 2, 1);
  req.manifest.reset();
  CHECK_THROWS_AS(store.create_batch(req), ValidationError);

  req = compare_batch("c", 2, 2, 1);
  req.items[0].payload["simulated_side"] = "A";
  CHECK_THROWS(store.create_batch(req));

  req = compare_batch("c", 2, 2, 1);
  req.manifest->simulated_side.erase("pair-1");
  CHECK_THROWS_AS(store.create_batch(req), ReferenceError);

  req = label_batch("x", 2, 2, 1);
  req.labelers = {"L0", "nobody"};
  CHECK_THROWS_AS(store.create_batch(req), ConfigError);
}

TEST_CASE("task flow and answer rules") {
  TempDir dir;
  AnnotationStore store(dir / "a.db", fixed_clock());
  add_labelers(store, 2);
  store.create_batch(compare_batch("c", 2, 2, 2));

  CHECK_THROWS_AS((void)store.next_task("ghost"), AuthError);
  auto t = store.next_task("L0");
  REQUIRE(t);
  CHECK(t->item_id == "pair-0");
  CHECK(q6_enabled(t->payload));
  CHECK(store.progress("L0").total == 2);

  CHECK_THROWS_AS(store.submit_answer("L0", "missing", full_answer(true)), NotFound);
  CHECK_THROWS_AS(store.submit_answer("L0", t->task_id, json{{"label", 1}}), ValidationError);
  auto no_q6 = full_answer(true);
  no_q6.erase("q6");
  CHECK_THROWS_AS(store.submit_answer("L0", t->task_id, no_q6), ValidationError);
  CHECK_THROWS_AS(store.submit_answer("L0", t->task_id, full_answer(false)), ValidationError);

  const auto r = store.submit_answer("L0", t->task_id, full_answer(true));
  CHECK(r.seq == 1);
  CHECK_THROWS_AS(store.submit_answer("L0", t->task_id, full_answer(true)), ConflictError);
  CHECK_THROWS_AS(store.submit_answer("L1", t->task_id, full_answer(true)), AuthError);

  auto t2 = store.next_task("L0");
  REQUIRE(t2);
  CHECK(t2->item_id == "pair-1");
  CHECK_FALSE(q6_enabled(t2->payload));
  CHECK_THROWS_AS(store.submit_answer("L0", t2->task_id, full_answer(true)), ValidationError);
  auto omitted = full_answer(false);
  omitted.erase("q6");
  store.submit_answer("L0", t2->task_id, omitted);
  CHECK_FALSE(store.next_task("L0").has_value());
  CHECK(store.progress("L0").done == 2);
}

TEST_CASE("label answers") {
  CHECK(std::get<LabelBody>(parse_answer_body(TaskKind::label_message, json{{"label", 1}}, false)).label == 1);
  CHECK_THROWS_AS(parse_answer_body(TaskKind::label_message, json{{"label", 2}}, false), ValidationError);
  CHECK_THROWS_AS(parse_answer_body(TaskKind::label_message, json{{"label", 1}, {"x", 1}}, false), ValidationError);
  CHECK_THROWS_AS(parse_answer_body(TaskKind::compare_pair, json{{"q1", "set1"}}, true), ValidationError);
  auto extra = full_answer(true);
  extra["simulated_side"] = "A";
  CHECK_THROWS_AS(parse_answer_body(TaskKind::compare_pair, extra, true), ValidationError);
}

TEST_CASE("exports and unblinding") {
  TempDir dir;
  AnnotationStore store(dir / "a.db", fixed_clock());
  add_labelers(store, 2);
  store.create_batch(compare_batch("c", 6, 2, 2));

  const auto empty = store.export_batch("c", false, false);
  CHECK(count_lines(empty) == 1);
  CHECK(empty.rfind("seq,task_id,batch_id,kind,item_id,labeler_id,submitted_at,label,q1,q2,q3,q4,q5,q6\n", 0) == 0);

  for (const auto* l : {"L0", "L1"}) {
    while (auto t = store.next_task(l)) store.submit_answer(l, t->task_id, full_answer(q6_enabled(t->payload)));
  }
  const auto blind = store.export_batch("c", false, false);
  const auto open = store.export_batch("c", true, true);
  CHECK(count_lines(blind) == 13);
  CHECK(count_lines(open) == count_lines(blind));
  CHECK(blind.find("simulated") == std::string::npos);
  CHECK(open.find("simulated_side,side_a_source,side_b_source") != std::string::npos);
  CHECK_THROWS_AS((void)store.export_batch("c", true, false), AuthError);
  CHECK_THROWS_AS((void)store.export_batch("nope", false, true), NotFound);

  const auto table = io::parse_csv(open);
  REQUIRE(table.rows.size() == 12);
  for (const auto& row : table.rows) {
    const int n = std::stoi(row[table.column("item_id")].substr(5));
    const std::string side = n % 3 == 0 ? "A" : "B";
    CHECK(row[table.column("simulated_side")] == side);
    CHECK(row[table.column("side_a_source")] == (side == "A" ? "simulated" : "original"));
  }
}

TEST_CASE("answers are append only") {
  TempDir dir;
  {
    AnnotationStore store(dir / "a.db", fixed_clock());
    add_labelers(store, 1);
    store.create_batch(label_batch("b", 1, 1, 1));
    const auto t = store.next_task("L0");
    store.submit_answer("L0", t->task_id, json{{"label", 1}});
  }
  sqlite3* db = nullptr;
  REQUIRE(sqlite3_open((dir / "a.db").c_str(), &db) == SQLITE_OK);
  CHECK(sqlite3_exec(db, "UPDATE answers SET body = '{}'", nullptr, nullptr, nullptr) != SQLITE_OK);
  CHECK(sqlite3_exec(db, "DELETE FROM answers", nullptr, nullptr, nullptr) != SQLITE_OK);
  sqlite3_close(db);

  AnnotationStore reopened(dir / "a.db", fixed_clock());
  CHECK(reopened.progress("L0").done == 1);
}

TEST_CASE("batch request json") {
  const auto j = json::parse(R"({"batch_id":"b","kind":"compare_pair","redundancy":2,"labelers":["L0","L1"],
    "items":[{"payload":{"pair_id":"p1"}}],"manifest":{"seed":1,"pairs":[]}})");
  const auto r = BatchRequest::from_json(j);
  CHECK(r.items.at(0).item_id == "p1");
  CHECK(r.redundancy == 2);
  CHECK_THROWS_AS(BatchRequest::from_json(json{{"kind", "label_message"}}), ValidationError);
}

namespace {

struct ServerFixture {
  TempDir dir;
  AnnotationStore store{dir / "s.db", fixed_clock()};
  std::unique_ptr<AnnotationServer> server;
  int port = 0;

  ServerFixture() {
    ServerConfig cfg;
    cfg.port = 0;
    cfg.admin_token = "admin-secret";
    cfg.labeler_tokens = {{"tok0", "L0"}, {"tok1", "L1"}};
    cfg.labelers = {{"L0", "Zero", LabelerRole::comparison}, {"L1", "One", LabelerRole::comparison}};
    for (const auto& l : cfg.labelers) store.register_labeler(l);
    server = std::make_unique<AnnotationServer>(store, cfg);
    port = server->start();
  }
  ~ServerFixture() { server->stop(); }

  httplib::Client client(const std::string& token) const {
    httplib::Client c("127.0.0.1", port);
    if (!token.empty()) c.set_bearer_token_auth(token);
    return c;
  }
};

json batch_json(const BatchRequest& r) {
  json items = json::array();
  for (const auto& it : r.items) items.push_back({{"item_id", it.item_id}, {"payload", it.payload}});
  json j{{"batch_id", r.batch_id}, {"kind", kind_name(r.kind)}, {"redundancy", r.redundancy},
         {"labelers", r.labelers}, {"items", items}};
  if (r.manifest) j["manifest"] = json::parse(r.manifest->to_json().dump());
  return j;
}

}  // namespace

TEST_CASE("http api") {
  ServerFixture f;
  REQUIRE(f.port > 0);
  auto admin = f.client("admin-secret");
  auto l0 = f.client("tok0");
  auto anon = f.client("");
  auto bad = f.client("wrong");

  CHECK(anon.Get("/api/tasks/next")->status == 401);
  CHECK(bad.Get("/api/tasks/next")->status == 401);

  const auto body = batch_json(compare_batch("c", 3, 2, 2)).dump();
  CHECK(l0.Post("/api/admin/batches", body, "application/json")->status == 403);
  auto created = admin.Post("/api/admin/batches", body, "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(json::parse(created->body)["tasks"] == 6);
  CHECK(admin.Post("/api/admin/batches", body, "application/json")->status == 409);
  CHECK(admin.Post("/api/admin/batches", "{not json", "application/json")->status == 400);

  std::vector<std::string> labeler_bodies;
  auto next = l0.Get("/api/tasks/next");
  REQUIRE(next);
  CHECK(next->status == 200);
  labeler_bodies.push_back(next->body);
  const auto task = json::parse(next->body)["task"];
  REQUIRE(task.is_object());
  CHECK(task["q6_enabled"] == true);
  std::vector<std::string> keys;
  for (const auto& [k, v] : task["payload"].items()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  auto allowed = pairs::labeler_fields();
  std::sort(allowed.begin(), allowed.end());
  CHECK(keys == allowed);

  const json wrong{{"task_id", task["task_id"]}, {"answer", {{"label", 1}}}};
  CHECK(l0.Post("/api/answers", wrong.dump(), "application/json")->status == 400);
  const json good{{"task_id", task["task_id"]}, {"answer", full_answer(true)}};
  auto posted = l0.Post("/api/answers", good.dump(), "application/json");
  REQUIRE(posted);
  CHECK(posted->status == 201);
  labeler_bodies.push_back(posted->body);
  CHECK(l0.Post("/api/answers", good.dump(), "application/json")->status == 409);
  auto l1 = f.client("tok1");
  CHECK(l1.Post("/api/answers", good.dump(), "application/json")->status == 403);
  const json ghost{{"task_id", "c:99999"}, {"answer", full_answer(true)}};
  CHECK(l0.Post("/api/answers", ghost.dump(), "application/json")->status == 404);

  auto progress = l0.Get("/api/progress");
  REQUIRE(progress);
  labeler_bodies.push_back(progress->body);
  const auto p = json::parse(progress->body);
  CHECK(p["labeler_id"] == "L0");
  CHECK(p["done"] == 1);
  CHECK(p["total"] == 3);

  CHECK(l0.Get("/api/admin/export?batch=c")->status == 403);
  auto blind = admin.Get("/api/admin/export?batch=c");
  REQUIRE(blind);
  CHECK(blind->status == 200);
  CHECK(blind->get_header_value("Content-Type").find("text/csv") != std::string::npos);
  auto unblind = admin.Get("/api/admin/export?batch=c&unblind=true");
  REQUIRE(unblind);
  CHECK(count_lines(unblind->body) == count_lines(blind->body));
  CHECK(unblind->body.find("side_a_source") != std::string::npos);
  CHECK(admin.Get("/api/admin/export?batch=zzz")->status == 404);

  while (true) {
    auto r = l0.Get("/api/tasks/next");
    labeler_bodies.push_back(r->body);
    const auto t = json::parse(r->body)["task"];
    if (t.is_null()) break;
    const json a{{"task_id", t["task_id"]}, {"answer", full_answer(t["q6_enabled"].get<bool>())}};
    labeler_bodies.push_back(l0.Post("/api/answers", a.dump(), "application/json")->body);
  }
  for (const auto& b : labeler_bodies) {
    CHECK(b.find("simulated") == std::string::npos);
    CHECK(b.find("original") == std::string::npos);
    CHECK(b.find("msg") == std::string::npos);
  }
}

TEST_CASE("server config") {
  const auto kv = KeyValueConfig::parse(R"(
[serve]
port = 9001
admin_token = "adm"

[labelers.ann]
name = "Ann"
role = "comparison"
token = "t-ann"
)");
  const auto cfg = ServerConfig::from(kv);
  CHECK(cfg.admin_token == "adm");
  CHECK(cfg.labeler_tokens.at("t-ann") == "ann");
  REQUIRE(cfg.labelers.size() == 1);
  CHECK(cfg.labelers[0].role == LabelerRole::comparison);

  const auto dup = KeyValueConfig::parse("[serve]\nadmin_token = \"x\"\n[labelers.a]\ntoken = \"x\"\n");
  CHECK_THROWS_AS(ServerConfig::from(dup), ConfigError);
}

TEST_CASE("bundled example config parses") {
  const auto kv = KeyValueConfig::load(std::string(DMGUARD_TEST_DATA) + "/../../config/example.toml");
  const auto serve = ServerConfig::from(kv);
  CHECK(serve.labelers.size() == 2);
  CHECK(serve.port == 8080);
  const auto run = RunConfig::from(kv);
  CHECK(run.window == 50);
  CHECK(run.originals.gap_seconds == 600);
}
