#include "kflow/error.hpp"

namespace kflow {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotConvex: return "NotConvex";
    case ErrorCode::ConvexityLost: return "ConvexityLost";
    case ErrorCode::StabilityViolation: return "StabilityViolation";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace kflow
