#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmguard/corpus.hpp"
#include "dmguard/responder.hpp"

namespace dmguard::pairs {

enum class Side { a, b };

[[nodiscard]] std::string_view side_name(Side s) noexcept;  // "A" / "B"
[[nodiscard]] Side side_from_name(std::string_view s);

struct PairSide {
  std::vector<std::string> responses;  ///< ["Ignoring"] when is_ignoring
  bool is_ignoring = false;

  friend bool operator==(const PairSide&, const PairSide&) = default;
};

struct PairItem {
  std::string message_id;
  RenderedTranscript context;
  std::vector<std::string> simulated;
  responder::OriginalResponseSet original;
};

/// A simulated and an original response set placed on randomized sides.
/// `simulated_side` is server-side knowledge and never appears in labeler output.
struct ComparisonPair {
  std::string pair_id;
  std::string message_id;
  RenderedTranscript context;
  PairSide side_a;
  PairSide side_b;
  Side simulated_side = Side::a;
};

/// Maps pair ids to the side holding the simulated set.
struct BlindingManifest {
  std::uint64_t seed = 0;
  std::map<std::string, Side> simulated_side;
  std::map<std::string, std::string> message_id;
  nlohmann::ordered_json extra;  ///< provenance recorded alongside, e.g. thresholds

  [[nodiscard]] nlohmann::ordered_json to_json() const;
  static BlindingManifest from_json(const nlohmann::json& j);
};

struct PairBuild {
  std::vector<ComparisonPair> pairs;
  BlindingManifest manifest;
};

/// One seeded coin flip per item decides which side gets the simulated set.
[[nodiscard]] PairBuild build_comparison_pairs(const std::vector<PairItem>& items, std::uint64_t seed);

/// Fields a labeler may see: pair_id, context_text, side_a, side_b and the
/// two is_ignoring flags.
[[nodiscard]] nlohmann::ordered_json labeler_json(const ComparisonPair& p);
[[nodiscard]] nlohmann::ordered_json labeler_export(const std::vector<ComparisonPair>& pairs);

/// Exact key set of a labeler-facing pair object.
[[nodiscard]] const std::vector<std::string>& labeler_fields();

}  // namespace dmguard::pairs
