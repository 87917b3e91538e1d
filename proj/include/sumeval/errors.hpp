#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sumeval {

enum class ErrorCode {
  // corpus
  MissingField,
  DuplicateId,
  EmptyText,
  MalformedRecord,
  SampleTooLarge,
  // generic
  InvalidArgument,
  EmptyInput,
  IoError,
  ConfigError,
  // lexmetrics
  NoReference,
  // providers
  AuthFailure,
  RateLimited,
  Timeout,
  MalformedProviderResponse,
  ProviderFailure,
  // modelmetrics
  EmptySummary,
  EmptyDocument,
  // judge / refine
  MismatchedIds,
  MissingDimension,
  OutOfRange,
  AmbiguousScore,
  JudgeUnparseable,
  EmptyCompletion,
  // stats
  ConstantVector,
  Misaligned,
  TooFewSamples,
  // runstore
  ValidationFailed,
  DuplicateKey,
  StorageFailure,
  NoGoldChecks,
  EmptyRun,
  // service
  UnknownSession,
  NoTasksLeft,
  UnknownTask,
  DuplicateSubmission,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `code()` identifies the failure kind;
/// `line()` is set for record-level input errors, `reason()` refines a code
/// (e.g. MalformedRecord caused by MissingField).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt,
        std::optional<ErrorCode> reason = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  std::optional<ErrorCode> reason() const noexcept { return reason_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
  std::optional<ErrorCode> reason_;
};

class RateLimitedError : public Error {
 public:
  RateLimitedError(const std::string& message, std::optional<double> retry_after_s)
      : Error(ErrorCode::RateLimited, message), retry_after_s_(retry_after_s) {}
  std::optional<double> retry_after_seconds() const noexcept { return retry_after_s_; }

 private:
  std::optional<double> retry_after_s_;
};

}  // namespace sumeval
