#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dmguard/io.hpp"
#include "dmguard/pairs.hpp"

namespace dmguard::eval {

/// Options for comparison questions 1-5.
enum class Choice { set1, set2, no_pref, both_worse };
/// Options for question 6; not_applicable when one side is "Ignoring".
enum class IgnoreChoice { yes, no, no_pref, not_applicable };

[[nodiscard]] std::string_view choice_name(Choice c) noexcept;
[[nodiscard]] std::optional<Choice> parse_choice(std::string_view s) noexcept;
[[nodiscard]] std::string_view ignore_choice_name(IgnoreChoice c) noexcept;
[[nodiscard]] std::optional<IgnoreChoice> parse_ignore_choice(std::string_view s) noexcept;

inline constexpr int kSideQuestions = 5;

struct ComparisonAnswer {
  std::string pair_id;
  std::string labeler_id;
  std::map<int, Choice> choices;  ///< question number 1..5
  IgnoreChoice q6 = IgnoreChoice::not_applicable;
};

enum class CiMethod { wilson, wald };
enum class TestMethod { exact, normal };

struct PreferenceStats {
  std::int64_t n_decided = 0;
  std::int64_t k_preferred = 0;  ///< decided answers favouring the simulated set
  double proportion = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  double level = 0.95;
  CiMethod ci_method = CiMethod::wilson;
  TestMethod test_method = TestMethod::exact;
};

struct PreferenceOptions {
  double level = 0.95;
  CiMethod ci_method = CiMethod::wilson;
  TestMethod test_method = TestMethod::exact;
};

/// Counts each (answer, question) naming a side as one trial; "No preference"
/// and "Both response sets make things worse" are undecided. Returns nullopt
/// when nothing was decided. Throws ReferenceError for pairs missing from the
/// manifest and ConfigError for questions outside 1..5.
[[nodiscard]] std::optional<PreferenceStats> preference_summary(const std::vector<ComparisonAnswer>& answers,
                                                                const std::set<int>& questions,
                                                                const pairs::BlindingManifest& manifest,
                                                                const PreferenceOptions& options = {});

/// Reads answer rows from an annotation export (item_id or pair_id column plus q1..q5).
[[nodiscard]] std::vector<ComparisonAnswer> answers_from_csv(const io::CsvTable& table);

/// Parses "1-4", "5", "1,3,5".
[[nodiscard]] std::set<int> parse_question_set(std::string_view list);

[[nodiscard]] nlohmann::ordered_json to_json(const std::optional<PreferenceStats>& s);

}  // namespace dmguard::eval
