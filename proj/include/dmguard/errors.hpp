#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmguard {

/// Validation errors map to CLI exit code 1, runtime errors to exit code 2.
enum class ErrorKind { validation, runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define DMGUARD_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  }

DMGUARD_DEFINE_ERROR(ConfigError, validation);
DMGUARD_DEFINE_ERROR(NotFound, validation);
DMGUARD_DEFINE_ERROR(TemplateError, validation);
DMGUARD_DEFINE_ERROR(ContractError, validation);
DMGUARD_DEFINE_ERROR(ShapeError, validation);
DMGUARD_DEFINE_ERROR(AdjudicationPending, validation);
DMGUARD_DEFINE_ERROR(ValidationError, validation);
DMGUARD_DEFINE_ERROR(ConflictError, validation);
DMGUARD_DEFINE_ERROR(ReferenceError, validation);
DMGUARD_DEFINE_ERROR(AuthError, runtime);
DMGUARD_DEFINE_ERROR(GatewayError, runtime);
DMGUARD_DEFINE_ERROR(CheckpointError, runtime);
DMGUARD_DEFINE_ERROR(DraftError, runtime);
DMGUARD_DEFINE_ERROR(IoError, runtime);

#undef DMGUARD_DEFINE_ERROR

/// Malformed input document; carries the byte offset where decoding failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset);
  [[nodiscard]] std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Predictions missing for some ground-truth ids.
class CoverageError : public Error {
 public:
  explicit CoverageError(std::vector<std::string> missing);
  [[nodiscard]] const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

}  // namespace dmguard
