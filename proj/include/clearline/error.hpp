#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clearline {

enum class ErrorCode {
  // corpus
  MissingSectionHeader,
  EmptyDocument,
  EmptyCorpus,
  InvalidCorpus,
  // prompting
  EmptyQuestion,
  EmptyTopicList,
  EmptyContext,
  // backend
  Transport,
  Protocol,
  Upstream,
  // extraction
  UnrecognizedTopic,
  AmbiguousTopic,
  MalformedToken,
  OutOfRange,
  EmptySelection,
  PipelineExhausted,
  // answer
  IndexOutOfRange,
  // eval / records
  MissingCount,
  InvalidRecord,
  // configuration
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `detail()` carries auxiliary context
/// such as the raw model response for UnrecognizedTopic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Backend failure; `status()` is the HTTP status for Upstream errors, 0 otherwise.
class BackendError : public Error {
 public:
  BackendError(ErrorCode code, const std::string& message, int status = 0)
      : Error(code, message), status_(status) {}

  [[nodiscard]] int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Source parse failure with a 1-based line number (0 when not line-specific).
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& message, std::size_t line = 0)
      : Error(code, message), line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace clearline
