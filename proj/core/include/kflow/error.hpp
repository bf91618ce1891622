#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kflow {

enum class ErrorCode {
  InvalidArgument,
  NotConvex,
  ConvexityLost,
  StabilityViolation,
  BracketFailure,
  ConfigError,
  ParseError,
  IoError,
};

std::string_view error_name(ErrorCode code);

/// Single exception type for the library; `code()` selects the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace kflow
