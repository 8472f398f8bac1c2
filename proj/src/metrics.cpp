#include "dmguard/metrics.hpp"

#include <fmt/format.h>

#include "dmguard/errors.hpp"

namespace dmguard::eval {

void ConfusionMatrix::add(int truth, int predicted) {
  if ((truth != 0 && truth != 1) || (predicted != 0 && predicted != 1)) {
    throw ContractError(fmt::format("labels must be 0 or 1 (truth {}, predicted {})", truth, predicted));
  }
  if (truth == 1) {
    predicted == 1 ? ++tp : ++fn;
  } else {
    predicted == 1 ? ++fp : ++tn;
  }
}

ConfusionMatrix confusion(const std::map<std::string, int>& predictions, const std::map<std::string, int>& truth,
                          const std::set<std::string>& exclude) {
  ConfusionMatrix cm;
  std::vector<std::string> missing;
  for (const auto& [id, label] : truth) {
    if (exclude.contains(id)) continue;
    const auto it = predictions.find(id);
    if (it == predictions.end()) {
      missing.push_back(id);
      continue;
    }
    cm.add(label, it->second);
  }
  if (!missing.empty()) throw CoverageError(std::move(missing));
  return cm;
}

namespace {

double ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

ClassMetrics metrics(std::int64_t correct, std::int64_t predicted, std::int64_t support) {
  ClassMetrics m;
  m.precision = ratio(correct, predicted);
  m.recall = ratio(correct, support);
  m.f1 = harmonic(m.precision, m.recall);
  m.support = support;
  return m;
}

}  // namespace

ClassReport classification_report(const ConfusionMatrix& cm) {
  if (cm.tn < 0 || cm.fp < 0 || cm.fn < 0 || cm.tp < 0) throw ContractError("confusion counts must be >= 0");
  if (cm.total() <= 0) throw ContractError("classification report needs at least one item");
  ClassReport r;
  r.negative = metrics(cm.tn, cm.tn + cm.fn, cm.tn + cm.fp);
  r.positive = metrics(cm.tp, cm.tp + cm.fp, cm.tp + cm.fn);
  r.accuracy = ratio(cm.tn + cm.tp, cm.total());

  const auto total = static_cast<double>(cm.total());
  const auto w0 = static_cast<double>(r.negative.support) / total;
  const auto w1 = static_cast<double>(r.positive.support) / total;
  r.macro_avg = ClassMetrics{(r.negative.precision + r.positive.precision) / 2.0,
                             (r.negative.recall + r.positive.recall) / 2.0, (r.negative.f1 + r.positive.f1) / 2.0,
                             cm.total()};
  r.weighted_avg = ClassMetrics{w0 * r.negative.precision + w1 * r.positive.precision,
                                w0 * r.negative.recall + w1 * r.positive.recall,
                                w0 * r.negative.f1 + w1 * r.positive.f1, cm.total()};
  return r;
}

SweepResult sweep_threshold(const std::map<std::string, double>& scores, const std::map<std::string, int>& truth,
                            int steps) {
  if (steps < 1) throw ContractError("threshold grid needs at least one step");
  std::vector<std::string> missing;
  std::vector<std::pair<double, int>> items;
  items.reserve(truth.size());
  for (const auto& [id, label] : truth) {
    const auto it = scores.find(id);
    if (it == scores.end()) {
      missing.push_back(id);
    } else {
      items.emplace_back(it->second, label);
    }
  }
  if (!missing.empty()) throw CoverageError(std::move(missing));
  if (items.empty()) throw ContractError("threshold sweep needs at least one item");

  SweepResult best;
  double best_f1 = -1.0;
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    ConfusionMatrix cm;
    for (const auto& [score, label] : items) cm.add(label, score >= t ? 1 : 0);
    const auto report = classification_report(cm);
    if (report.positive.f1 > best_f1) {
      best_f1 = report.positive.f1;
      best = SweepResult{t, cm, report};
    }
  }
  return best;
}

int majority_vote(std::span<const int> votes) {
  if (votes.empty()) throw ShapeError("majority vote needs at least one model");
  std::size_t ones = 0;
  for (const int v : votes) {
    if (v != 0 && v != 1) throw ContractError(fmt::format("vote must be 0 or 1, got {}", v));
    ones += static_cast<std::size_t>(v);
  }
  return 2 * ones > votes.size() ? 1 : 0;
}

std::map<std::string, int> majority_vote(const std::map<std::string, std::vector<int>>& votes) {
  std::map<std::string, int> out;
  std::optional<std::size_t> width;
  for (const auto& [id, row] : votes) {
    if (!width) width = row.size();
    if (row.size() != *width) {
      throw ShapeError(fmt::format("row '{}' has {} votes, expected {}", id, row.size(), *width));
    }
    out[id] = majority_vote(row);
  }
  return out;
}

int adjudicate(std::span<const int> round1, int round2, std::optional<int> tiebreak) {
  if (round1.empty()) throw ContractError("first round needs at least one label");
  if (round2 != 0 && round2 != 1) throw ContractError("second-round label must be 0 or 1");
  std::size_t ones = 0;
  for (const int v : round1) {
    if (v != 0 && v != 1) throw ContractError("first-round labels must be 0 or 1");
    ones += static_cast<std::size_t>(v);
  }
  const auto zeros = round1.size() - ones;
  std::optional<int> consensus;
  if (ones > zeros) consensus = 1;
  if (zeros > ones) consensus = 0;
  if (consensus && *consensus == round2) return round2;
  if (!tiebreak) throw AdjudicationPending("first and second round disagree; a tie-break label is required");
  if (*tiebreak != 0 && *tiebreak != 1) throw ContractError("tie-break label must be 0 or 1");
  return *tiebreak;
}

nlohmann::ordered_json to_json(const ConfusionMatrix& cm) {
  nlohmann::ordered_json j;
  j["tn"] = cm.tn;
  j["fp"] = cm.fp;
  j["fn"] = cm.fn;
  j["tp"] = cm.tp;
  return j;
}

namespace {

nlohmann::ordered_json row(const ClassMetrics& m) {
  nlohmann::ordered_json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1-score"] = m.f1;
  j["support"] = m.support;
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const ClassReport& r) {
  nlohmann::ordered_json j;
  j["0"] = row(r.negative);
  j["1"] = row(r.positive);
  j["accuracy"] = {{"value", r.accuracy}, {"support", r.macro_avg.support}};
  j["macro avg"] = row(r.macro_avg);
  j["weighted avg"] = row(r.weighted_avg);
  return j;
}

std::string format_report(const ClassReport& r) {
  std::string out = fmt::format("{:>14}{:>11}{:>11}{:>11}{:>10}\n", "", "precision", "recall", "f1-score", "support");
  auto line = [&](std::string_view name, const ClassMetrics& m) {
    out += fmt::format("{:>14}{:>11.4f}{:>11.4f}{:>11.4f}{:>10}\n", name, m.precision, m.recall, m.f1, m.support);
  };
  line("0", r.negative);
  line("1", r.positive);
  out += fmt::format("{:>14}{:>11}{:>11}{:>11.4f}{:>10}\n", "accuracy", "", "", r.accuracy, r.macro_avg.support);
  line("macro avg", r.macro_avg);
  line("weighted avg", r.weighted_avg);
  return out;
}

std::string format_confusion(const ConfusionMatrix& cm) {
  return fmt::format("{:>10}{:>10}{:>10}\n{:>10}{:>10}{:>10}\n{:>10}{:>10}{:>10}\n", "", "Pred: 0", "Pred: 1", "True: 0",
                     cm.tn, cm.fp, "True: 1", cm.fn, cm.tp);
}

}  // namespace dmguard::eval
