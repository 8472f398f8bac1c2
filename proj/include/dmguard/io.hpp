#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dmguard::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Compact single-line JSON, UTF-8 preserved, invalid sequences replaced.
[[nodiscard]] std::string dump_line(const ordered_json& j);
[[nodiscard]] std::string dump_pretty(const ordered_json& j);

/// Parses one JSON document; errors report the absolute byte offset.
[[nodiscard]] json parse_json(std::string_view text, std::size_t base_offset = 0);

/// Parses JSONL; blank lines are skipped.
[[nodiscard]] std::vector<json> parse_jsonl(std::string_view text);
[[nodiscard]] std::vector<json> read_jsonl(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws ParseError when absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
  [[nodiscard]] bool has_column(std::string_view name) const;
};

/// RFC 4180 CSV with a header row.
[[nodiscard]] CsvTable parse_csv(std::string_view text);
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

[[nodiscard]] std::string csv_field(std::string_view field);
[[nodiscard]] std::string csv_row(const std::vector<std::string>& fields);

/// `message_id,label` with labels 0/1.
[[nodiscard]] std::map<std::string, int> read_label_csv(const std::filesystem::path& path);
/// `message_id,score`.
[[nodiscard]] std::map<std::string, double> read_score_csv(const std::filesystem::path& path);
/// One id per line; blank lines and `#` comments ignored.
[[nodiscard]] std::vector<std::string> read_id_list(const std::filesystem::path& path);

}  // namespace dmguard::io

namespace dmguard::io {

/// ISO-8601 UTC time for manifests. Honors SOURCE_DATE_EPOCH so manifests can
/// be made reproducible.
[[nodiscard]] std::string utc_timestamp_now();

}  // namespace dmguard::io
