#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dmguard/corpus.hpp"

namespace dmguard::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dmguard-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline MessageRecord msg(std::string id, std::string conv, std::string sender, bool donor, std::int64_t ts,
                         std::string text) {
  MessageRecord m;
  m.message_id = std::move(id);
  m.conversation_id = std::move(conv);
  m.sender = std::move(sender);
  m.sender_role = donor ? SenderRole::donor : SenderRole::other;
  m.timestamp_ms = ts;
  m.text = std::move(text);
  return m;
}

/// Conversation "c" whose messages alternate between Other and Sam (donor)
/// according to `donor_mask`, one minute apart.
inline Conversation make_conversation(const std::string& conv_id, const std::vector<bool>& donor_mask,
                                      std::int64_t start_ms = 1'000'000) {
  Conversation c;
  c.conversation_id = conv_id;
  for (std::size_t i = 0; i < donor_mask.size(); ++i) {
    const bool donor = donor_mask[i];
    c.messages.push_back(msg(conv_id + ":" + std::to_string(i), conv_id, donor ? "Sam" : "Other", donor,
                             start_ms + static_cast<std::int64_t>(i) * 60'000, "message " + std::to_string(i)));
  }
  for (const auto& m : c.messages) {
    if (std::find(c.participants.begin(), c.participants.end(), m.sender) == c.participants.end())
      c.participants.push_back(m.sender);
  }
  return c;
}

}  // namespace dmguard::testing
