#include "dmguard/pairs.hpp"

#include <random>

#include <fmt/format.h>

#include "dmguard/errors.hpp"

namespace dmguard::pairs {

std::string_view side_name(Side s) noexcept { return s == Side::a ? "A" : "B"; }

Side side_from_name(std::string_view s) {
  if (s == "A" || s == "a") return Side::a;
  if (s == "B" || s == "b") return Side::b;
  throw ParseError(fmt::format("side must be A or B, got '{}'", s), 0);
}

nlohmann::ordered_json BlindingManifest::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  auto& arr = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& [pair_id, side] : simulated_side) {
    nlohmann::ordered_json p;
    p["pair_id"] = pair_id;
    const auto mid = message_id.find(pair_id);
    p["message_id"] = mid == message_id.end() ? std::string{} : mid->second;
    p["simulated_side"] = side_name(side);
    arr.push_back(std::move(p));
  }
  return j;
}

BlindingManifest BlindingManifest::from_json(const nlohmann::json& j) {
  try {
    BlindingManifest m;
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& p : j.at("pairs")) {
      const auto id = p.at("pair_id").get<std::string>();
      if (!m.simulated_side.emplace(id, side_from_name(p.at("simulated_side").get<std::string>())).second) {
        throw ParseError(fmt::format("duplicate pair '{}' in manifest", id), 0);
      }
      m.message_id[id] = p.value("message_id", std::string{});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("malformed blinding manifest: {}", e.what()), 0);
  }
}

namespace {

PairSide original_side(const responder::OriginalResponseSet& o) {
  if (o.ignoring) return PairSide{{std::string(responder::kIgnoring)}, true};
  return PairSide{o.responses, false};
}

}  // namespace

PairBuild build_comparison_pairs(const std::vector<PairItem>& items, std::uint64_t seed) {
  PairBuild out;
  out.manifest.seed = seed;
  std::mt19937_64 rng(seed);
  const auto width = std::max<std::size_t>(4, fmt::format("{}", items.size()).size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    ComparisonPair p;
    p.pair_id = fmt::format("pair-{:0{}}", i + 1, width);
    p.message_id = item.message_id;
    p.context = item.context;
    p.simulated_side = (rng() >> 63) == 0 ? Side::a : Side::b;
    const PairSide simulated{item.simulated, false};
    const auto original = original_side(item.original);
    p.side_a = p.simulated_side == Side::a ? simulated : original;
    p.side_b = p.simulated_side == Side::a ? original : simulated;
    out.manifest.simulated_side[p.pair_id] = p.simulated_side;
    out.manifest.message_id[p.pair_id] = p.message_id;
    out.pairs.push_back(std::move(p));
  }
  return out;
}

const std::vector<std::string>& labeler_fields() {
  static const std::vector<std::string> fields = {"pair_id", "context_text", "side_a", "side_b",
                                                  "side_a_is_ignoring", "side_b_is_ignoring"};
  return fields;
}

nlohmann::ordered_json labeler_json(const ComparisonPair& p) {
  nlohmann::ordered_json j;
  j["pair_id"] = p.pair_id;
  j["context_text"] = p.context.text;
  j["side_a"] = p.side_a.responses;
  j["side_b"] = p.side_b.responses;
  j["side_a_is_ignoring"] = p.side_a.is_ignoring;
  j["side_b_is_ignoring"] = p.side_b.is_ignoring;
  return j;
}

nlohmann::ordered_json labeler_export(const std::vector<ComparisonPair>& pairs) {
  nlohmann::ordered_json j;
  auto& arr = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : pairs) arr.push_back(labeler_json(p));
  return j;
}

}  // namespace dmguard::pairs
