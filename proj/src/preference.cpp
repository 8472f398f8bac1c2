#include "dmguard/preference.hpp"

#include <charconv>

#include <fmt/format.h>

#include "dmguard/errors.hpp"
#include "dmguard/stats.hpp"
#include "dmguard/text.hpp"

namespace dmguard::eval {

std::string_view choice_name(Choice c) noexcept {
  switch (c) {
    case Choice::set1: return "set1";
    case Choice::set2: return "set2";
    case Choice::no_pref: return "no_pref";
    case Choice::both_worse: return "both_worse";
  }
  return "";
}

std::optional<Choice> parse_choice(std::string_view s) noexcept {
  s = text::trim(s);
  if (s == "set1" || s == "Response set 1") return Choice::set1;
  if (s == "set2" || s == "Response set 2") return Choice::set2;
  if (s == "no_pref" || s == "No preference") return Choice::no_pref;
  if (s == "both_worse" || s == "Both response sets make things worse") return Choice::both_worse;
  return std::nullopt;
}

std::string_view ignore_choice_name(IgnoreChoice c) noexcept {
  switch (c) {
    case IgnoreChoice::yes: return "yes";
    case IgnoreChoice::no: return "no";
    case IgnoreChoice::no_pref: return "no_pref";
    case IgnoreChoice::not_applicable: return "not_applicable";
  }
  return "";
}

std::optional<IgnoreChoice> parse_ignore_choice(std::string_view s) noexcept {
  s = text::trim(s);
  if (s == "yes") return IgnoreChoice::yes;
  if (s == "no") return IgnoreChoice::no;
  if (s == "no_pref" || s == "no preference") return IgnoreChoice::no_pref;
  if (s == "not_applicable" || s.empty()) return IgnoreChoice::not_applicable;
  return std::nullopt;
}

std::optional<PreferenceStats> preference_summary(const std::vector<ComparisonAnswer>& answers,
                                                  const std::set<int>& questions,
                                                  const pairs::BlindingManifest& manifest,
                                                  const PreferenceOptions& options) {
  if (questions.empty()) throw ConfigError("no questions selected");
  for (const int q : questions) {
    if (q < 1 || q > kSideQuestions) {
      throw ConfigError(fmt::format("question {} does not compare the two sets (use 1..{})", q, kSideQuestions));
    }
  }
  PreferenceStats s;
  s.level = options.level;
  s.ci_method = options.ci_method;
  s.test_method = options.test_method;
  for (const auto& a : answers) {
    const auto it = manifest.simulated_side.find(a.pair_id);
    if (it == manifest.simulated_side.end()) {
      throw ReferenceError(fmt::format("answer references unknown pair '{}'", a.pair_id));
    }
    const auto simulated = it->second == pairs::Side::a ? Choice::set1 : Choice::set2;
    for (const int q : questions) {
      const auto c = a.choices.find(q);
      if (c == a.choices.end()) continue;
      if (c->second != Choice::set1 && c->second != Choice::set2) continue;
      ++s.n_decided;
      if (c->second == simulated) ++s.k_preferred;
    }
  }
  if (s.n_decided == 0) return std::nullopt;
  s.proportion = static_cast<double>(s.k_preferred) / static_cast<double>(s.n_decided);
  const auto ci = options.ci_method == CiMethod::wilson ? wilson_ci(s.k_preferred, s.n_decided, options.level)
                                                        : wald_ci(s.k_preferred, s.n_decided, options.level);
  s.ci_low = ci.low;
  s.ci_high = ci.high;
  s.p_value = options.test_method == TestMethod::exact ? binomial_test(s.k_preferred, s.n_decided)
                                                       : normal_approx_test(s.k_preferred, s.n_decided);
  return s;
}

std::vector<ComparisonAnswer> answers_from_csv(const io::CsvTable& table) {
  const auto id_col = table.has_column("item_id") ? table.column("item_id") : table.column("pair_id");
  const auto labeler_col = table.has_column("labeler_id") ? std::optional(table.column("labeler_id")) : std::nullopt;
  std::vector<std::pair<int, std::size_t>> question_cols;
  for (int q = 1; q <= kSideQuestions; ++q) {
    const auto name = fmt::format("q{}", q);
    if (table.has_column(name)) question_cols.emplace_back(q, table.column(name));
  }
  if (question_cols.empty()) throw ParseError("answer table has no q1..q5 columns", 0);
  const auto q6_col = table.has_column("q6") ? std::optional(table.column("q6")) : std::nullopt;

  std::vector<ComparisonAnswer> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ComparisonAnswer a;
    a.pair_id = row[id_col];
    if (labeler_col) a.labeler_id = row[*labeler_col];
    bool any = false;
    for (const auto& [q, col] : question_cols) {
      if (text::trim(row[col]).empty()) continue;
      const auto c = parse_choice(row[col]);
      if (!c) throw ParseError(fmt::format("row {}: unknown answer '{}' for q{}", r + 2, row[col], q), 0);
      a.choices[q] = *c;
      any = true;
    }
    if (q6_col) {
      const auto c = parse_ignore_choice(row[*q6_col]);
      if (!c) throw ParseError(fmt::format("row {}: unknown q6 answer '{}'", r + 2, row[*q6_col]), 0);
      a.q6 = *c;
    }
    if (any) out.push_back(std::move(a));
  }
  return out;
}

std::set<int> parse_question_set(std::string_view list) {
  std::set<int> out;
  auto parse_int = [&](std::string_view s) {
    s = text::trim(s);
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(fmt::format("bad question list '{}'", list));
    return v;
  };
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto end = list.find(',', pos);
    if (end == std::string_view::npos) end = list.size();
    const auto part = list.substr(pos, end - pos);
    pos = end + 1;
    if (text::trim(part).empty()) continue;
    if (const auto dash = part.find('-'); dash != std::string_view::npos) {
      const int lo = parse_int(part.substr(0, dash));
      const int hi = parse_int(part.substr(dash + 1));
      if (lo > hi) throw ConfigError(fmt::format("bad question range '{}'", part));
      for (int q = lo; q <= hi; ++q) out.insert(q);
    } else {
      out.insert(parse_int(part));
    }
  }
  if (out.empty()) throw ConfigError("empty question list");
  return out;
}

nlohmann::ordered_json to_json(const std::optional<PreferenceStats>& s) {
  nlohmann::ordered_json j;
  if (!s) {
    j["empty"] = true;
    j["n_decided"] = 0;
    return j;
  }
  j["empty"] = false;
  j["n_decided"] = s->n_decided;
  j["k_preferred"] = s->k_preferred;
  j["proportion"] = s->proportion;
  j["ci_level"] = s->level;
  j["ci_method"] = s->ci_method == CiMethod::wilson ? "wilson" : "wald";
  j["ci_low"] = s->ci_low;
  j["ci_high"] = s->ci_high;
  j["test"] = s->test_method == TestMethod::exact ? "exact_binomial" : "normal_approx";
  j["p_value"] = s->p_value;
  return j;
}

}  // namespace dmguard::eval
