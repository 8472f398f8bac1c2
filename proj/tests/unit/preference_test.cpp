#include <doctest.h>

#include "dmguard/errors.hpp"
#include "dmguard/io.hpp"
#include "dmguard/preference.hpp"

using namespace dmguard;
using namespace dmguard::eval;

namespace {

pairs::BlindingManifest manifest_with(int n, pairs::Side side) {
  pairs::BlindingManifest m;
  for (int i = 0; i < n; ++i) m.simulated_side["p" + std::to_string(i)] = side;
  return m;
}

ComparisonAnswer answer(std::string pair, Choice q1) {
  ComparisonAnswer a;
  a.pair_id = std::move(pair);
  a.choices[1] = q1;
  return a;
}

}  // namespace

TEST_CASE("null case: half the decided answers prefer the simulated set") {
  const auto m = manifest_with(10, pairs::Side::a);
  std::vector<ComparisonAnswer> answers;
  for (int i = 0; i < 10; ++i) answers.push_back(answer("p" + std::to_string(i), i < 5 ? Choice::set1 : Choice::set2));
  const auto s = preference_summary(answers, {1}, m);
  REQUIRE(s);
  CHECK(s->n_decided == 10);
  CHECK(s->k_preferred == 5);
  CHECK(s->proportion == 0.5);
  CHECK(s->p_value == 1.0);
}

TEST_CASE("undecided answers are left out") {
  const auto m = manifest_with(3, pairs::Side::b);
  std::vector<ComparisonAnswer> answers{answer("p0", Choice::no_pref), answer("p1", Choice::both_worse),
                                        answer("p2", Choice::no_pref)};
  CHECK_FALSE(preference_summary(answers, {1}, m).has_value());
  CHECK(to_json(preference_summary(answers, {1}, m))["empty"] == true);
}

TEST_CASE("sixteen of twenty decided") {
  // Simulated set sits on side B for the first ten pairs and side A for the rest.
  pairs::BlindingManifest m;
  std::vector<ComparisonAnswer> answers;
  for (int i = 0; i < 20; ++i) {
    const auto id = "p" + std::to_string(i);
    const bool sim_on_a = i >= 10;
    m.simulated_side[id] = sim_on_a ? pairs::Side::a : pairs::Side::b;
    const bool prefers_sim = i < 16;
    const Choice sim = sim_on_a ? Choice::set1 : Choice::set2;
    const Choice orig = sim_on_a ? Choice::set2 : Choice::set1;
    answers.push_back(answer(id, prefers_sim ? sim : orig));
  }
  answers.push_back(answer("p0", Choice::both_worse));
  const auto s = preference_summary(answers, {1}, m);
  REQUIRE(s);
  CHECK(s->n_decided == 20);
  CHECK(s->k_preferred == 16);
  CHECK(s->p_value == 0.01181793212890625);
  CHECK(s->ci_low <= s->proportion);
  CHECK(s->proportion <= s->ci_high);
}

TEST_CASE("each question in the set is a separate trial") {
  const auto m = manifest_with(1, pairs::Side::a);
  ComparisonAnswer a;
  a.pair_id = "p0";
  for (int q = 1; q <= 5; ++q) a.choices[q] = q <= 3 ? Choice::set1 : Choice::set2;
  const auto helpful = preference_summary({a}, parse_question_set("1-4"), m);
  REQUIRE(helpful);
  CHECK(helpful->n_decided == 4);
  CHECK(helpful->k_preferred == 3);
  const auto natural = preference_summary({a}, {5}, m);
  REQUIRE(natural);
  CHECK(natural->k_preferred == 0);
}

TEST_CASE("unknown pairs and question six are rejected") {
  const auto m = manifest_with(1, pairs::Side::a);
  CHECK_THROWS_AS(preference_summary({answer("zzz", Choice::set1)}, {1}, m), ReferenceError);
  CHECK_THROWS_AS(preference_summary({answer("p0", Choice::set1)}, {6}, m), ConfigError);
}

TEST_CASE("question sets") {
  CHECK(parse_question_set("1-4") == std::set<int>{1, 2, 3, 4});
  CHECK(parse_question_set("5") == std::set<int>{5});
  CHECK(parse_question_set("1, 3,5") == std::set<int>{1, 3, 5});
  CHECK_THROWS_AS(parse_question_set("4-1"), ConfigError);
  CHECK_THROWS_AS(parse_question_set("x"), ConfigError);
}

TEST_CASE("answers load from an export table") {
  const auto table = io::parse_csv(
      "seq,task_id,item_id,labeler_id,q1,q2,q3,q4,q5,q6\n"
      "1,t1,pair-0001,l1,set1,set2,no_pref,both_worse,set1,not_applicable\n"
      "2,t2,pair-0002,l1,Response set 2,,,,,\n");
  const auto answers = answers_from_csv(table);
  REQUIRE(answers.size() == 2);
  CHECK(answers[0].choices.at(4) == Choice::both_worse);
  CHECK(answers[1].choices.size() == 1);
  CHECK(answers[1].choices.at(1) == Choice::set2);
}
