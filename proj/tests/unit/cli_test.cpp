#include <doctest.h>

#include <sstream>

#include "dmguard/cli.hpp"
#include "dmguard/io.hpp"
#include "test_support.hpp"

using namespace dmguard;
using dmguard::testing::TempDir;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dmguard");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string write(const TempDir& d, const std::string& name, const std::string& content) {
  const auto p = d / name;
  io::write_file_atomic(p, content);
  return p.string();
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"frobnicate"}).code == 1);
  CHECK(run_cli({"evaluate", "--bogus"}).code == 1);
  CHECK(run_cli({"evaluate"}).code == 1);
  const auto help = run_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("evaluate") != std::string::npos);
}

TEST_CASE("evaluate prints a report and writes json") {
  TempDir d;
  const auto truth = write(d, "truth.csv", "message_id,label\na,1\nb,0\nc,1\nd,0\n");
  const auto pred = write(d, "pred.csv", "message_id,label\na,1\nb,1\nc,0\nd,0\n");
  const auto r = run_cli({"evaluate", "--pred", pred, "--truth", truth, "--out", (d / "r.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("precision") != std::string::npos);
  const auto j = io::parse_json(io::read_file(d / "r.json"));
  CHECK(j.dump().find("\"tp\":1") != std::string::npos);

  const auto partial = write(d, "partial.csv", "message_id,label\na,1\n");
  CHECK(run_cli({"evaluate", "--pred", partial, "--truth", truth}).code == 1);
  CHECK(run_cli({"evaluate", "--pred", (d / "missing.csv").string(), "--truth", truth}).code == 1);
}

TEST_CASE("vote and adjudicate") {
  TempDir d;
  const auto votes = write(d, "v.csv", "message_id,gpt,claude,llama\nx,1,1,0\ny,0,1,0\n");
  const auto v = run_cli({"vote", "--votes", votes});
  REQUIRE(v.code == 0);
  CHECK(v.out == "message_id,label\nx,1\ny,0\n");

  const auto labels = write(d, "l.csv", "message_id,round1a,round1b,round2,tiebreak\nx,1,1,1,\ny,0,0,1,1\n");
  const auto a = run_cli({"adjudicate", "--labels", labels});
  REQUIRE(a.code == 0);
  CHECK(a.out == "message_id,label\nx,1\ny,1\n");

  const auto pending = write(d, "p.csv", "message_id,round1a,round2,tiebreak\nx,1,0,\n");
  const auto p = run_cli({"adjudicate", "--labels", pending});
  CHECK(p.code != 0);
  CHECK(p.err.find("x") != std::string::npos);
}

TEST_CASE("sweep picks a threshold") {
  TempDir d;
  const auto scores = write(d, "s.csv", "message_id,score\na,0.9\nb,0.2\nc,0.7\nd,0.1\n");
  const auto truth = write(d, "t.csv", "message_id,label\na,1\nb,0\nc,1\nd,0\n");
  const auto r = run_cli({"sweep", "--scores", scores, "--truth", truth});
  REQUIRE(r.code == 0);
  const auto j = io::parse_json(r.out);
  CHECK(j["threshold"].get<double>() >= 0.2);
  CHECK(j["threshold"].get<double>() < 0.7);
}

TEST_CASE("stats from an unblinded export") {
  TempDir d;
  std::string csv = "item_id,labeler_id,q1,q2,q3,q4,q5,q6\n";
  std::string manifest = R"({"seed":1,"pairs":[)";
  for (int i = 0; i < 10; ++i) {
    const auto id = "p" + std::to_string(i);
    csv += id + ",L0,set1,set1,set1,no_pref,set2,not_applicable\n";
    manifest += std::string(i ? "," : "") + R"({"pair_id":")" + id + R"(","simulated_side":"A"})";
  }
  manifest += "]}";
  const auto answers = write(d, "a.csv", csv);
  const auto m = write(d, "m.json", manifest);
  const auto r = run_cli({"stats", "--answers", answers, "--manifest", m});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"k_preferred\": 30") != std::string::npos);
  CHECK(r.out.find("\"n_decided\": 30") != std::string::npos);
  CHECK(run_cli({"stats", "--answers", answers, "--manifest", m, "--ci", "bogus"}).code == 1);
  const auto orphan = write(d, "o.json", R"({"seed":1,"pairs":[]})");
  CHECK(run_cli({"stats", "--answers", answers, "--manifest", orphan}).code != 0);
}

TEST_CASE("mock run is reproducible across job counts") {
  const std::string data = DMGUARD_TEST_DATA;
  const auto corpus = data + "/../../data/synthetic/corpus.jsonl";
  const auto mock = data + "/../../data/synthetic/mock.jsonl";
  const auto truth = data + "/../../data/synthetic/truth.csv";
  TempDir d;
  const auto a = run_cli({"mock-run", "--corpus", corpus, "--mock", mock, "--truth", truth, "--seed", "3", "--jobs", "1",
                          "--out-dir", (d / "a").string()});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  const auto b = run_cli({"mock-run", "--corpus", corpus, "--mock", mock, "--truth", truth, "--seed", "3", "--jobs", "8",
                          "--out-dir", (d / "b").string()});
  REQUIRE_MESSAGE(b.code == 0, b.err);
  for (const auto* f : {"verdicts.jsonl", "simulated.jsonl", "originals.jsonl", "pairs.json", "blinding.json", "report.json"}) {
    CHECK_MESSAGE(io::read_file(d / "a" / f) == io::read_file(d / "b" / f), f);
  }
  CHECK(io::read_file(d / "a" / "pairs.json").find("simulated") == std::string::npos);
}
