#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfg {

enum class ErrorCode {
  BadInterval,
  DimensionMismatch,
  NotAdmissible,
  BadTimes,
  InvalidTerminalState,
  EmptyResult,
  DegenerateCost,
  NotAPath,
  NonConvergence,
  GridTooCoarse,
  BoundaryQuery,
  OutOfRange,
  BadCoefficients,
  PathExplosion,
  BadSlope,
  ParseError,
  ValidationError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mfg
