#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slantkit {

enum class ErrorKind {
  kParse,              // malformed input record or file
  kPrecondition,       // caller violated an operation contract
  kDegenerate,         // statistic undefined for the given input
  kInsufficientEvidence,
  kEmpty,              // an input or result set is empty where it must not be
  kConfig,             // fatal configuration problem
  kTransport,          // network failure that survived the retry policy
  kIo,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse failures carry the 1-based line (or record) number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace slantkit
