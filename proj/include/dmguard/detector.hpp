#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
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

namespace dmguard::detector {

enum class Agent { agent1, agent2 };

struct ParsedVerdict {
  int label = 0;
  std::string reasoning;
  bool parse_ok = false;

  friend bool operator==(const ParsedVerdict&, const ParsedVerdict&) = default;
};

struct AgentVerdict {
  Agent agent = Agent::agent1;
  int label = 0;  ///< 0 whenever parse_ok is false
  std::string reasoning;
  std::string raw_text;
  bool parse_ok = false;

  friend bool operator==(const AgentVerdict&, const AgentVerdict&) = default;
};

struct VerdictRecord {
  std::string message_id;
  std::string conversation_id;
  std::int64_t timestamp_ms = 0;
  AgentVerdict agent1;
  std::optional<AgentVerdict> agent2;  ///< present iff agent1.label == 1
  int final_label = 0;
  std::size_t window_size = 0;

  friend bool operator==(const VerdictRecord&, const VerdictRecord&) = default;
};

struct DetectionRunConfig {
  std::size_t window = corpus::kDefaultWindow;
  std::set<std::string> exclusions;  ///< e.g. ids used as prompt examples
  bool donor_filter = true;          ///< skip messages sent by the donor
  std::uint64_t seed = 0;
  int jobs = 1;
  int max_reprompts = 2;
  SamplingDefaults sampling;
};

/// Finds the first '0' or '1' that has no digit on either side. The reasoning
/// is the text after it with leading whitespace and ASCII punctuation removed.
/// Never throws; an input without such a digit yields {0, "", false}.
[[nodiscard]] ParsedVerdict parse_verdict(std::string_view raw);

/// Agent 1 negative is final; an Agent 1 positive defers to Agent 2.
/// Throws ContractError if `agent2` presence does not match `agent1 == 1`.
[[nodiscard]] int cascade(int agent1, std::optional<int> agent2);

/// `"<label>. <reasoning>"`, the form Agent 2 receives as previous_result.
[[nodiscard]] std::string previous_result(const AgentVerdict& v);

class Detector {
 public:
  Detector(Gateway& gateway, const PromptCatalog& catalog, DetectionRunConfig config);

  /// Runs Agent 1, then Agent 2 only if Agent 1 says 1. Gateway failures are
  /// rethrown with the target message id in the message.
  [[nodiscard]] VerdictRecord classify_message(const ContextWindow& win) const;

  [[nodiscard]] const DetectionRunConfig& config() const noexcept { return config_; }

 private:
  AgentVerdict ask(Agent agent, TemplateId id, const PromptVars& vars, const std::string& target_id) const;

  Gateway* gateway_;
  const PromptCatalog* catalog_;
  DetectionRunConfig config_;
};

[[nodiscard]] nlohmann::ordered_json to_json(const VerdictRecord& r);
[[nodiscard]] VerdictRecord verdict_from_json(const nlohmann::json& j);
[[nodiscard]] std::string to_jsonl(const std::vector<VerdictRecord>& records);
[[nodiscard]] std::vector<VerdictRecord> read_verdicts(const std::filesystem::path& path);

/// Ids classified by a run, in output order (conversation_id, timestamp, message_id).
[[nodiscard]] std::vector<const MessageRecord*> eligible_messages(const std::vector<Conversation>& convs,
                                                                  const DetectionRunConfig& cfg);

/// Hash over everything that changes verdicts (not parallelism).
[[nodiscard]] std::string config_hash(const DetectionRunConfig& cfg, const PromptCatalog& catalog,
                                      std::string_view model_id);

struct DetectionRun {
  std::vector<VerdictRecord> records;
  nlohmann::ordered_json manifest;
  std::size_t reused = 0;  ///< records taken from the checkpoint
};

/// Classifies every eligible message. With a checkpoint path, completed records
/// are journaled as they finish and reused verbatim on the next run.
DetectionRun run_detection(const std::vector<Conversation>& corpus, Gateway& gateway, const PromptCatalog& catalog,
                           const DetectionRunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint = {});

/// Append-only journal of finished verdicts. Each line carries a checksum;
/// any damaged line makes the whole checkpoint unusable.
class Checkpoint {
 public:
  Checkpoint(std::filesystem::path path, std::string config_hash);

  /// Throws CheckpointError on a header mismatch or a damaged line.
  [[nodiscard]] std::vector<VerdictRecord> load() const;
  /// Starts a fresh journal when none exists.
  void open_for_append();
  void append(const VerdictRecord& record);

 private:
  std::filesystem::path path_;
  std::string config_hash_;
  std::mutex mutex_;
};

}  // namespace dmguard::detector
