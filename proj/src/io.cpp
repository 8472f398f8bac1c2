#include "dmguard/io.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dmguard/errors.hpp"
#include "dmguard/text.hpp"

namespace dmguard::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError(fmt::format("write failed for {}", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot rename {} to {}: {}", tmp.string(), path.string(), ec.message()));
}

std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string dump_pretty(const ordered_json& j) {
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

json parse_json(std::string_view text, std::size_t base_offset) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), base_offset + (e.byte > 0 ? e.byte - 1 : 0));
  }
}

std::vector<json> parse_jsonl(std::string_view text) {
  std::vector<json> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    if (!text::trim(line).empty()) out.push_back(parse_json(line, pos));
    pos = end + 1;
  }
  return out;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_file(path)); }

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError(fmt::format("CSV column '{}' not found", name), 0);
}

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header) {
    if (h == name) return true;
  }
  return false;
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t quote_start = 0;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw ParseError("stray quote in unquoted CSV field", i);
        in_quotes = true;
        field_started = true;
        quote_start = i;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted CSV field", quote_start);
  if (field_started || !field.empty() || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  if (!table.header.empty() && table.header.front().starts_with("\xEF\xBB\xBF")) {
    table.header.front().erase(0, 3);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw ParseError(fmt::format("CSV row {} has {} fields, header has {}", r + 1, records[r].size(),
                                   table.header.size()),
                       0);
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += csv_field(fields[i]);
  }
  out.push_back('\n');
  return out;
}

namespace {

int parse_binary_label(const std::string& s, const std::string& id) {
  const auto t = text::trim(s);
  if (t == "0") return 0;
  if (t == "1") return 1;
  throw ParseError(fmt::format("label for '{}' must be 0 or 1, got '{}'", id, s), 0);
}

}  // namespace

std::map<std::string, int> read_label_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto id_col = table.column("message_id");
  const auto label_col = table.column("label");
  std::map<std::string, int> out;
  for (const auto& row : table.rows) {
    if (!out.emplace(row[id_col], parse_binary_label(row[label_col], row[id_col])).second) {
      throw ParseError(fmt::format("duplicate message_id '{}' in {}", row[id_col], path.string()), 0);
    }
  }
  return out;
}

std::map<std::string, double> read_score_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto id_col = table.column("message_id");
  const auto score_col = table.column("score");
  std::map<std::string, double> out;
  for (const auto& row : table.rows) {
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(row[score_col], &used);
      if (used != row[score_col].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError(fmt::format("score for '{}' is not a number: '{}'", row[id_col], row[score_col]), 0);
    }
    out[row[id_col]] = score;
  }
  return out;
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  std::vector<std::string> ids;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    ids.emplace_back(t);
  }
  return ids;
}

}  // namespace dmguard::io

namespace dmguard::io {

std::string utc_timestamp_now() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dmguard::io
