#include "slantkit/error.hpp"

namespace slantkit {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kDegenerate: return "degenerate";
    case ErrorKind::kInsufficientEvidence: return "insufficient-evidence";
    case ErrorKind::kEmpty: return "empty";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(ErrorKind::kParse,
            source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
      source_(source),
      line_(line) {}

}  // namespace slantkit
