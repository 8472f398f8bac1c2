#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dmguard {

enum class SenderRole { donor, other };

struct MessageRecord {
  std::string message_id;
  std::string conversation_id;
  std::string sender;
  SenderRole sender_role = SenderRole::other;
  std::int64_t timestamp_ms = 0;
  std::string text;  ///< empty for media-only messages

  [[nodiscard]] bool from_donor() const noexcept { return sender_role == SenderRole::donor; }
  friend bool operator==(const MessageRecord&, const MessageRecord&) = default;
};

/// Messages are sorted by timestamp, ties kept in export order.
struct Conversation {
  std::string conversation_id;
  std::vector<std::string> participants;  ///< distinct senders, first-appearance order
  std::vector<MessageRecord> messages;
};

/// A target message plus up to `window` messages immediately before it.
struct ContextWindow {
  MessageRecord target;
  std::vector<MessageRecord> context;

  [[nodiscard]] std::size_t window_size() const noexcept { return context.size(); }
};

enum class TranscriptMarker { label_this, respond_to_this };

struct RenderedTranscript {
  std::string text;  ///< LF-separated, no trailing newline
  TranscriptMarker marker = TranscriptMarker::label_this;
};

enum class ExportFormat { platform_json, normalized_jsonl };

struct IngestOptions {
  /// Display name of the participant who donated the export. Required for
  /// platform exports.
  std::string donor;
};

namespace corpus {

inline constexpr std::size_t kDefaultWindow = 50;
inline constexpr std::string_view kLabelMarker = " (label this message)";
inline constexpr std::string_view kRespondMarker = " (Respond to this message)";
inline constexpr std::string_view kMediaPlaceholder = "[media]";
inline constexpr std::string_view kResponderDonorPrefix = "User";

[[nodiscard]] std::vector<Conversation> parse_export(std::string_view raw, ExportFormat format,
                                                     const IngestOptions& options = {});

/// Keeps conversations with at most two distinct participants, preserving order.
[[nodiscard]] std::vector<Conversation> filter_two_party(std::vector<Conversation> convs);

[[nodiscard]] ContextWindow build_context(const Conversation& conv, std::string_view target_id,
                                          std::size_t window = kDefaultWindow);

[[nodiscard]] RenderedTranscript render_transcript(const ContextWindow& win, TranscriptMarker marker);

[[nodiscard]] nlohmann::ordered_json to_json(const MessageRecord& m);
[[nodiscard]] MessageRecord record_from_json(const nlohmann::json& j);

/// One MessageRecord per line in conversation order.
[[nodiscard]] std::string to_normalized_jsonl(const std::vector<Conversation>& convs);

[[nodiscard]] std::string_view role_name(SenderRole role) noexcept;

/// Locates messages by id across a corpus.
class CorpusIndex {
 public:
  explicit CorpusIndex(const std::vector<Conversation>& convs);

  [[nodiscard]] bool contains(std::string_view message_id) const;
  /// Throws NotFound for unknown ids.
  [[nodiscard]] const Conversation& conversation_of(std::string_view message_id) const;
  [[nodiscard]] const MessageRecord& message(std::string_view message_id) const;

 private:
  const std::vector<Conversation>* convs_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> positions_;
};

}  // namespace corpus
}  // namespace dmguard
