#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pcsketch {

enum class ErrorCode {
  EmptyCloud,
  TooFewPoints,
  ParseError,
  UnsupportedFormat,
  IoError,
  EmptyMesh,
  NonMonotonicTime,
  InvalidRotation,
  UnknownTool,
  InvalidParams,
  NonPositiveDepth,
  EmptyTrajectory,
  NoPlaneFound,
  NotAxisAligned,
  EmptyStroke,
  NoPendingEdit,
  NothingToUndo,
  DegenerateCorrespondences,
  UnknownPointId,
  NoCorrespondences,
  MismatchedReport,
  InvalidArgument,
};

/// Stable upper-case name used in service error responses (e.g. "NO_PENDING").
std::string_view error_code_name(ErrorCode code);

/// All library failures are reported through this exception type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by parsers that know which input line was at fault (1-based).
class LineError : public Error {
 public:
  LineError(ErrorCode code, std::size_t line, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace pcsketch
