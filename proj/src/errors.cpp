#include "dmguard/errors.hpp"

#include <fmt/format.h>

namespace dmguard {

ParseError::ParseError(const std::string& what, std::size_t byte_offset)
    : Error(ErrorKind::validation, fmt::format("{} (at byte {})", what, byte_offset)), offset_(byte_offset) {}

namespace {

std::string coverage_message(const std::vector<std::string>& missing) {
  std::string ids;
  for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
    if (i > 0) ids += ", ";
    ids += missing[i];
  }
  if (missing.size() > 20) ids += ", ...";
  return fmt::format("missing predictions for {} id(s): {}", missing.size(), ids);
}

}  // namespace

CoverageError::CoverageError(std::vector<std::string> missing)
    : Error(ErrorKind::validation, coverage_message(missing)), missing_(std::move(missing)) {}

}  // namespace dmguard
