#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stinv {

enum class ErrorCode {
  InvalidGeometry,
  DomainViolation,
  OutOfDomain,
  SingularSystem,
  MaxIterExceeded,
  NonpositiveInput,
  UnknownCase,
  ParseError,
  ValidationError,
  Incomplete,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidGeometry: return "INVALID_GEOMETRY";
    case ErrorCode::DomainViolation: return "DOMAIN_VIOLATION";
    case ErrorCode::OutOfDomain: return "OUT_OF_DOMAIN";
    case ErrorCode::SingularSystem: return "SINGULAR_SYSTEM";
    case ErrorCode::MaxIterExceeded: return "MAX_ITER_EXCEEDED";
    case ErrorCode::NonpositiveInput: return "NONPOSITIVE_INPUT";
    case ErrorCode::UnknownCase: return "UNKNOWN_CASE";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::ValidationError: return "VALIDATION_ERROR";
    case ErrorCode::Incomplete: return "INCOMPLETE";
  }
  return "UNKNOWN";
}

/// Exception carrying a machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stinv
