#include <doctest.h>

#include <random>

#include "dmguard/errors.hpp"
#include "dmguard/metrics.hpp"

using namespace dmguard;
using namespace dmguard::eval;

namespace {

constexpr double kTableTol = 1e-4;

ConfusionMatrix cm(std::int64_t tn, std::int64_t fp, std::int64_t fn, std::int64_t tp) { return {tn, fp, fn, tp}; }

}  // namespace

TEST_CASE("confusion counts a perfect predictor") {
  const std::map<std::string, int> truth{{"a", 0}, {"b", 0}, {"c", 1}, {"d", 0}, {"e", 0}};
  CHECK(confusion(truth, truth) == cm(4, 0, 0, 1));
}

TEST_CASE("confusion honours exclusions and reports missing ids") {
  const std::map<std::string, int> truth{{"a", 1}, {"b", 0}, {"c", 1}};
  const std::map<std::string, int> pred{{"a", 1}, {"b", 1}};
  CHECK(confusion(pred, truth, {"c"}) == cm(0, 1, 0, 1));
  try {
    (void)confusion(pred, truth);
    FAIL("expected CoverageError");
  } catch (const CoverageError& e) {
    CHECK(e.missing() == std::vector<std::string>{"c"});
  }
}

TEST_CASE("classification report reproduces the pipeline table") {
  const auto r = classification_report(cm(7330, 158, 14, 26));
  CHECK(std::abs(r.positive.precision - 0.1413) <= kTableTol);
  CHECK(std::abs(r.positive.recall - 0.6500) <= kTableTol);
  CHECK(std::abs(r.positive.f1 - 0.2321) <= kTableTol);
  CHECK(std::abs(r.negative.precision - 0.9981) <= kTableTol);
  CHECK(std::abs(r.negative.recall - 0.9789) <= kTableTol);
  CHECK(std::abs(r.negative.f1 - 0.9884) <= kTableTol);
  CHECK(std::abs(r.accuracy - 0.9772) <= kTableTol);
  CHECK(std::abs(r.macro_avg.precision - 0.5697) <= kTableTol);
  CHECK(std::abs(r.macro_avg.recall - 0.8144) <= kTableTol);
  CHECK(std::abs(r.macro_avg.f1 - 0.6103) <= kTableTol);
  CHECK(std::abs(r.weighted_avg.precision - 0.9935) <= kTableTol);
  CHECK(std::abs(r.weighted_avg.recall - 0.9772) <= kTableTol);
  CHECK(std::abs(r.weighted_avg.f1 - 0.9844) <= kTableTol);
  CHECK(r.negative.support == 7488);
  CHECK(r.positive.support == 40);
}

TEST_CASE("classification report reproduces the baseline numbers") {
  const auto r = classification_report(cm(7355, 133, 31, 9));
  CHECK(std::abs(r.positive.precision - 0.0634) <= kTableTol);
  CHECK(std::abs(r.positive.recall - 0.2250) <= kTableTol);
  CHECK(std::abs(r.positive.f1 - 0.0989) <= kTableTol);
}

TEST_CASE("classification report reproduces the ensemble table from the derived matrix") {
  // Matrix solved from the published class-1 precision and recall (tests/oracles/derive.py).
  const auto r = classification_report(cm(7406, 82, 24, 16));
  CHECK(std::abs(r.positive.precision - 0.1633) <= kTableTol);
  CHECK(std::abs(r.positive.recall - 0.4000) <= kTableTol);
  CHECK(std::abs(r.positive.f1 - 0.2319) <= kTableTol);
  CHECK(std::abs(r.negative.precision - 0.9968) <= kTableTol);
  CHECK(std::abs(r.negative.recall - 0.9890) <= kTableTol);
  CHECK(std::abs(r.negative.f1 - 0.9929) <= kTableTol);
  CHECK(std::abs(r.accuracy - 0.9859) <= kTableTol);
  CHECK(std::abs(r.macro_avg.f1 - 0.6124) <= kTableTol);
  CHECK(std::abs(r.weighted_avg.f1 - 0.9889) <= kTableTol);
}

TEST_CASE("perfect classifier scores 1 everywhere") {
  const auto r = classification_report(cm(4, 0, 0, 1));
  for (const auto* m : {&r.negative, &r.positive, &r.macro_avg, &r.weighted_avg}) {
    CHECK(m->precision == 1.0);
    CHECK(m->recall == 1.0);
    CHECK(m->f1 == 1.0);
  }
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("zero denominators report 0") {
  const auto r = classification_report(cm(10, 0, 3, 0));
  CHECK(r.positive.precision == 0.0);
  CHECK(r.positive.recall == 0.0);
  CHECK(r.positive.f1 == 0.0);
}

TEST_CASE("report invariants hold on random matrices") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> d(0, 50);
  for (int i = 0; i < 500; ++i) {
    auto m = cm(d(rng), d(rng), d(rng), d(rng));
    if (m.total() == 0) continue;
    const auto r = classification_report(m);
    CHECK(r.negative.support + r.positive.support == m.total());
    for (const auto* c : {&r.negative, &r.positive, &r.macro_avg, &r.weighted_avg}) {
      CHECK(c->precision >= 0.0);
      CHECK(c->precision <= 1.0);
      CHECK(c->recall >= 0.0);
      CHECK(c->recall <= 1.0);
      CHECK(c->f1 >= 0.0);
      CHECK(c->f1 <= 1.0);
    }
    const double n = static_cast<double>(m.total());
    const double expect = (r.negative.f1 * r.negative.support + r.positive.f1 * r.positive.support) / n;
    CHECK(r.weighted_avg.f1 == doctest::Approx(expect));
  }
}

TEST_CASE("sweep returns the smallest F1-maximizing grid point") {
  const std::map<std::string, double> scores{{"a", 0.1}, {"b", 0.4}, {"c", 0.8}};
  const std::map<std::string, int> truth{{"a", 0}, {"b", 0}, {"c", 1}};
  const auto r = sweep_threshold(scores, truth);
  CHECK(r.threshold == doctest::Approx(0.41));
  CHECK(r.report.positive.f1 == 1.0);
}

TEST_CASE("sweep with no positives returns 0") {
  const std::map<std::string, double> scores{{"a", 0.3}, {"b", 0.9}};
  const std::map<std::string, int> truth{{"a", 0}, {"b", 0}};
  CHECK(sweep_threshold(scores, truth).threshold == 0.0);
}

TEST_CASE("sweep with identical scores picks the better extreme") {
  const std::map<std::string, double> scores{{"a", 0.5}, {"b", 0.5}, {"c", 0.5}};
  const std::map<std::string, int> truth{{"a", 1}, {"b", 0}, {"c", 0}};
  // All-positive F1 = 0.5 beats all-negative F1 = 0, reached first at t = 0.
  const auto r = sweep_threshold(scores, truth);
  CHECK(r.threshold == 0.0);
  CHECK(r.matrix == cm(0, 2, 0, 1));
}

TEST_CASE("sweep rejects scores that miss truth ids") {
  CHECK_THROWS_AS(sweep_threshold({{"a", 0.1}}, {{"a", 0}, {"b", 1}}), CoverageError);
}

TEST_CASE("majority vote") {
  CHECK(majority_vote(std::vector<int>{1, 1, 0}) == 1);
  CHECK(majority_vote(std::vector<int>{1, 0}) == 0);
  std::vector<int> thirty(30, 0);
  std::fill(thirty.begin(), thirty.begin() + 16, 1);
  CHECK(majority_vote(thirty) == 1);
  std::fill(thirty.begin(), thirty.end(), 0);
  std::fill(thirty.begin(), thirty.begin() + 15, 1);
  CHECK(majority_vote(thirty) == 0);
}

TEST_CASE("majority vote matrix rejects ragged rows") {
  CHECK_THROWS_AS(majority_vote(std::map<std::string, std::vector<int>>{{"a", {1, 0, 1}}, {"b", {1, 0}}}),
                  ShapeError);
  CHECK_THROWS_AS(majority_vote(std::map<std::string, std::vector<int>>{{"a", {}}}), ShapeError);
  const auto out = majority_vote(std::map<std::string, std::vector<int>>{{"a", {1, 0, 1}}, {"b", {0, 0, 1}}});
  CHECK(out.at("a") == 1);
  CHECK(out.at("b") == 0);
}

TEST_CASE("odd-width votes never tie") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<int> v(2 * (i % 7) + 1);
    for (auto& x : v) x = static_cast<int>(rng() & 1);
    const auto ones = std::count(v.begin(), v.end(), 1);
    CHECK(majority_vote(v) == (2 * ones > static_cast<long>(v.size()) ? 1 : 0));
  }
}

TEST_CASE("adjudication") {
  CHECK(adjudicate(std::vector<int>{0, 0}, 0) == 0);
  CHECK(adjudicate(std::vector<int>{1}, 0, 0) == 0);
  CHECK_THROWS_AS(adjudicate(std::vector<int>{1, 0}, 1), AdjudicationPending);
  CHECK(adjudicate(std::vector<int>{1, 0}, 1, 1) == 1);
  CHECK_THROWS_AS(adjudicate(std::vector<int>{}, 1), ContractError);
}

TEST_CASE("adjudication ignores round-one order") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    std::vector<int> r1(1 + i % 5);
    for (auto& x : r1) x = static_cast<int>(rng() & 1);
    const int r2 = static_cast<int>(rng() & 1);
    const int tb = static_cast<int>(rng() & 1);
    const int a = adjudicate(r1, r2, tb);
    std::shuffle(r1.begin(), r1.end(), rng);
    CHECK(adjudicate(r1, r2, tb) == a);
  }
}

TEST_CASE("report json mirrors the table layout") {
  const auto j = to_json(classification_report(cm(7330, 158, 14, 26)));
  CHECK(j.contains("0"));
  CHECK(j.contains("1"));
  CHECK(j.contains("accuracy"));
  CHECK(j.contains("macro avg"));
  CHECK(j.contains("weighted avg"));
}
