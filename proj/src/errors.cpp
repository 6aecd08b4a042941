#include "bohmlab/errors.hpp"

namespace bohmlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::DegenerateState: return "degenerate-state";
    case ErrorKind::UnsupportedOperation: return "unsupported-operation";
    case ErrorKind::Node: return "node";
    case ErrorKind::SelfAdjointness: return "self-adjointness";
    case ErrorKind::Unitarity: return "unitarity";
    case ErrorKind::Truncation: return "truncation";
    case ErrorKind::Regime: return "regime";
    case ErrorKind::Fit: return "fit";
    case ErrorKind::Endpoint: return "endpoint";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::Validation: return "validation";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace bohmlab
