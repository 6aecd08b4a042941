#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bohmlab {

enum class ErrorKind {
  Shape,
  Configuration,
  DegenerateState,
  UnsupportedOperation,
  Node,
  SelfAdjointness,
  Unitarity,
  Truncation,
  Regime,
  Fit,
  Endpoint,
  OutOfDomain,
  Validation,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (tests, the
/// CLI exit-code mapping) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace bohmlab
