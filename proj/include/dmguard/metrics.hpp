#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace dmguard::eval {

/// Binary confusion counts; class 1 is "harassment".
struct ConfusionMatrix {
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tp = 0;

  [[nodiscard]] std::int64_t total() const noexcept { return tn + fp + fn + tp; }
  void add(int truth, int predicted);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct ClassReport {
  ClassMetrics negative;  ///< class 0
  ClassMetrics positive;  ///< class 1
  double accuracy = 0.0;
  ClassMetrics macro_avg;
  ClassMetrics weighted_avg;
};

/// Counts over ids in `truth` minus `exclude`. Throws CoverageError listing any
/// of those ids without a prediction.
[[nodiscard]] ConfusionMatrix confusion(const std::map<std::string, int>& predictions,
                                        const std::map<std::string, int>& truth,
                                        const std::set<std::string>& exclude = {});

/// Per-class precision/recall/F1, accuracy, macro and support-weighted averages.
/// A ratio with a zero denominator is reported as 0. Requires total() > 0.
[[nodiscard]] ClassReport classification_report(const ConfusionMatrix& cm);

struct SweepResult {
  double threshold = 0.0;
  ConfusionMatrix matrix;
  ClassReport report;
};

/// Labels an id 1 when score >= t and returns the smallest t on the grid
/// {0, 1/steps, ..., 1} that maximizes class-1 F1.
[[nodiscard]] SweepResult sweep_threshold(const std::map<std::string, double>& scores,
                                          const std::map<std::string, int>& truth, int steps = 100);

/// Label with strictly more votes; ties go to 0.
[[nodiscard]] int majority_vote(std::span<const int> votes);

/// Row-wise majority vote over an ids x models matrix. Throws ShapeError on
/// ragged rows or an empty model set.
[[nodiscard]] std::map<std::string, int> majority_vote(const std::map<std::string, std::vector<int>>& votes);

/// Resolves a ground-truth label from a first round, a blind second round and
/// an optional tie-break. The first round counts as agreeing only if its
/// strict majority equals the second-round label. Throws AdjudicationPending
/// when they disagree and no tie-break is given.
[[nodiscard]] int adjudicate(std::span<const int> round1, int round2, std::optional<int> tiebreak = std::nullopt);

struct GroundTruthLabel {
  std::string message_id;
  std::vector<int> round1_labels;
  int round2_label = 0;
  std::optional<int> tiebreak_label;
  int final_label = 0;
};

[[nodiscard]] nlohmann::ordered_json to_json(const ConfusionMatrix& cm);
/// Layout mirrors a classification report table: rows 0, 1, accuracy, macro avg, weighted avg.
[[nodiscard]] nlohmann::ordered_json to_json(const ClassReport& r);
[[nodiscard]] std::string format_report(const ClassReport& r);
[[nodiscard]] std::string format_confusion(const ConfusionMatrix& cm);

}  // namespace dmguard::eval
