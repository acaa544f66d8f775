#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "cyscale/metrics.hpp"

namespace cyscale {

/// Half-open character range [begin, end) into the query source.
struct SourceRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const SourceRange&, const SourceRange&) = default;
};

struct Diagnostic {
  MessageClass error_class = MessageClass::SyntaxError;
  SourceRange span;
  std::string detail;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// "UnknownLabel at 9..14: ..." style one-line rendering.
std::string format_diagnostic(const Diagnostic& diagnostic);

/// Thrown by the lexer and parser on the first lexical or syntax violation.
class QueryError : public std::runtime_error {
 public:
  explicit QueryError(Diagnostic diagnostic)
      : std::runtime_error(format_diagnostic(diagnostic)), diagnostic_(std::move(diagnostic)) {}

  const Diagnostic& diagnostic() const { return diagnostic_; }

 private:
  Diagnostic diagnostic_;
};

}  // namespace cyscale
