#include <fstream>

#include <fmt/format.h>

#include "dmguard/detector.hpp"
#include "dmguard/errors.hpp"
#include "dmguard/io.hpp"
#include "dmguard/text.hpp"

namespace dmguard::detector {

namespace {

constexpr std::string_view kKind = "dmguard-detect-checkpoint";

std::string header_line(const std::string& hash) {
  nlohmann::ordered_json h;
  h["kind"] = kKind;
  h["version"] = 1;
  h["config_hash"] = hash;
  return io::dump_line(h) + "\n";
}

}  // namespace

Checkpoint::Checkpoint(std::filesystem::path path, std::string config_hash)
    : path_(std::move(path)), config_hash_(std::move(config_hash)) {}

std::vector<VerdictRecord> Checkpoint::load() const {
  std::vector<VerdictRecord> out;
  if (!std::filesystem::exists(path_)) return out;
  const auto content = io::read_file(path_);
  if (content.empty()) throw CheckpointError(fmt::format("{}: empty checkpoint", path_.string()));
  if (content.back() != '\n') throw CheckpointError(fmt::format("{}: truncated final line", path_.string()));

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const auto end = content.find('\n', pos);
    const std::string_view line(content.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw CheckpointError(fmt::format("{}: line {} is not valid JSON", path_.string(), line_no));
    }
    if (line_no == 1) {
      if (!j.is_object() || j.value("kind", std::string{}) != kKind) {
        throw CheckpointError(fmt::format("{}: not a detection checkpoint", path_.string()));
      }
      if (j.value("config_hash", std::string{}) != config_hash_) {
        throw CheckpointError(fmt::format("{}: written under a different configuration ({} != {})", path_.string(),
                                          j.value("config_hash", std::string{}), config_hash_));
      }
      continue;
    }
    if (!j.is_object() || !j.contains("record") || !j.contains("sum")) {
      throw CheckpointError(fmt::format("{}: line {} lacks record/sum", path_.string(), line_no));
    }
    const nlohmann::ordered_json record = j.at("record");
    if (text::hex64(text::fnv1a64(io::dump_line(record))) != j.at("sum").get<std::string>()) {
      throw CheckpointError(fmt::format("{}: checksum mismatch on line {}", path_.string(), line_no));
    }
    try {
      out.push_back(verdict_from_json(nlohmann::json::parse(io::dump_line(record))));
    } catch (const Error& e) {
      throw CheckpointError(fmt::format("{}: line {}: {}", path_.string(), line_no, e.what()));
    }
  }
  return out;
}

void Checkpoint::open_for_append() {
  std::lock_guard lock(mutex_);
  if (!std::filesystem::exists(path_)) io::write_file_atomic(path_, header_line(config_hash_));
}

void Checkpoint::append(const VerdictRecord& record) {
  const auto body = to_json(record);
  nlohmann::ordered_json line;
  line["record"] = body;
  line["sum"] = text::hex64(text::fnv1a64(io::dump_line(body)));
  const auto text = io::dump_line(line) + "\n";

  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError(fmt::format("cannot append to checkpoint {}", path_.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError(fmt::format("checkpoint write failed for {}", path_.string()));
}

}  // namespace dmguard::detector
