#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dmguard::text {

[[nodiscard]] bool is_space(char c) noexcept;
[[nodiscard]] std::string_view trim(std::string_view s) noexcept;

/// Strips leading ASCII whitespace and ASCII punctuation. Non-ASCII bytes stop the scan.
[[nodiscard]] std::string_view strip_leading_punct(std::string_view s) noexcept;

/// Maximal runs of non-whitespace characters.
[[nodiscard]] std::vector<std::string_view> split_words(std::string_view s);

/// Replaces CR and LF with single spaces so a message occupies one transcript line.
[[nodiscard]] std::string single_line(std::string_view s);

/// 64-bit FNV-1a; stable across platforms, used for content hashes in manifests.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view s) noexcept;
[[nodiscard]] std::string hex64(std::uint64_t v);

[[nodiscard]] bool iequals_prefix(std::string_view s, std::string_view prefix) noexcept;

}  // namespace dmguard::text
