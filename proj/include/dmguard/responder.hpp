#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dmguard/config.hpp"
#include "dmguard/corpus.hpp"
#include "dmguard/gateway.hpp"
#include "dmguard/prompts.hpp"

namespace dmguard::responder {

inline constexpr std::size_t kMaxMessages = 3;
inline constexpr std::size_t kMinWords = 1;
inline constexpr std::size_t kMaxWords = 13;
inline constexpr int kDefaultStrategy = 5;  // empathy
inline constexpr std::string_view kIgnoring = "Ignoring";

struct StrategySelection {
  std::set<int> strategies;  ///< non-empty, members in 1..9
  std::string reasoning;
  std::string raw_text;
  bool parse_ok = false;

  friend bool operator==(const StrategySelection&, const StrategySelection&) = default;
};

struct SimulatedResponseSet {
  std::string message_id;
  std::vector<std::string> responses;  ///< 1..3 messages of 1..13 words each
  std::set<int> strategies;
  std::string reasoning;
  std::vector<std::string> violations;  ///< constraint fixes applied after re-prompts ran out
  StrategySelection selection;
  std::string raw_text;
  int reprompts = 0;

  friend bool operator==(const SimulatedResponseSet&, const SimulatedResponseSet&) = default;
};

struct OriginalResponseSet {
  std::string message_id;                     ///< the harassment message
  std::vector<std::string> responses;         ///< empty iff ignoring
  std::vector<std::string> response_ids;
  bool ignoring = false;

  friend bool operator==(const OriginalResponseSet&, const OriginalResponseSet&) = default;
};

/// Sections of a drafting-agent reply.
struct DraftParse {
  std::vector<std::string> responses;  ///< every "Response N:" segment, in order of appearance
  std::optional<std::set<int>> strategies;
  std::string reasoning;
};

/// Number of maximal non-whitespace runs.
[[nodiscard]] std::size_t count_words(std::string_view s);

/// Keeps the first `max_words` words, joined by single spaces.
[[nodiscard]] std::string truncate_words(std::string_view s, std::size_t max_words);

/// Reads the leading number list (comma/space separated) and the sentence after
/// it. Numbers outside 1..9 are dropped; nullopt when nothing valid remains.
[[nodiscard]] std::optional<StrategySelection> parse_strategy_choice(std::string_view raw);

/// Splits on "Response N:", "Strategies:" and "Reasoning:" markers, which may
/// share a line or sit on separate lines.
[[nodiscard]] DraftParse parse_draft(std::string_view raw);

/// Human-readable reasons the draft breaks the 1..3 message / 1..13 word rules.
[[nodiscard]] std::vector<std::string> draft_problems(const DraftParse& draft);

struct ResponderConfig {
  std::size_t window = corpus::kDefaultWindow;
  int max_reprompts = 2;
  SamplingDefaults sampling;
  std::uint64_t seed = 0;
  int jobs = 1;
};

class Responder {
 public:
  Responder(Gateway& gateway, const PromptCatalog& catalog, ResponderConfig config);

  /// Falls back to {5} with parse_ok=false after the re-prompts are used up.
  [[nodiscard]] StrategySelection select_strategies(const ContextWindow& win) const;

  /// Re-prompts on constraint violations, then caps to three messages and
  /// truncates long ones. Throws DraftError if no "Response" marker ever appears.
  [[nodiscard]] SimulatedResponseSet draft_responses(const ContextWindow& win, const StrategySelection& sel) const;

  [[nodiscard]] SimulatedResponseSet simulate(const ContextWindow& win) const;

 private:
  CompletionResult call(TemplateId id, const PromptVars& vars, const std::string& target, int reprompt) const;

  Gateway* gateway_;
  const PromptCatalog* catalog_;
  ResponderConfig config_;
};

/// The donor's actual reply to `harassment_id`: up to three consecutive donor
/// messages, or ignoring=true when no timely reply exists. Throws ContractError
/// if the donor wrote the harassment message.
[[nodiscard]] OriginalResponseSet extract_original_responses(const Conversation& conv, std::string_view harassment_id,
                                                             const OriginalResponseLimits& limits = {});

/// Simulates responses for `target_ids` in order, `cfg.jobs` at a time.
[[nodiscard]] std::vector<SimulatedResponseSet> run_responder(const std::vector<Conversation>& corpus,
                                                              const std::vector<std::string>& target_ids,
                                                              Gateway& gateway, const PromptCatalog& catalog,
                                                              const ResponderConfig& cfg);

/// Deterministic sample of `count` ids (all of them when count >= size),
/// returned in their original order.
[[nodiscard]] std::vector<std::string> sample_ids(const std::vector<std::string>& ids, std::size_t count,
                                                  std::uint64_t seed);

[[nodiscard]] nlohmann::ordered_json to_json(const SimulatedResponseSet& s);
[[nodiscard]] SimulatedResponseSet simulated_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::ordered_json to_json(const OriginalResponseSet& o);
[[nodiscard]] OriginalResponseSet original_from_json(const nlohmann::json& j);

}  // namespace dmguard::responder
