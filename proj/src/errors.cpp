#include "sumeval/errors.hpp"

namespace sumeval {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::SampleTooLarge: return "SampleTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NoReference: return "NoReference";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedProviderResponse: return "MalformedProviderResponse";
    case ErrorCode::ProviderFailure: return "ProviderFailure";
    case ErrorCode::EmptySummary: return "EmptySummary";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::MismatchedIds: return "MismatchedIds";
    case ErrorCode::MissingDimension: return "MissingDimension";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::AmbiguousScore: return "AmbiguousScore";
    case ErrorCode::JudgeUnparseable: return "JudgeUnparseable";
    case ErrorCode::EmptyCompletion: return "EmptyCompletion";
    case ErrorCode::ConstantVector: return "ConstantVector";
    case ErrorCode::Misaligned: return "Misaligned";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::NoGoldChecks: return "NoGoldChecks";
    case ErrorCode::EmptyRun: return "EmptyRun";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::NoTasksLeft: return "NoTasksLeft";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::DuplicateSubmission: return "DuplicateSubmission";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line,
             std::optional<ErrorCode> reason)
    : std::runtime_error(compose(code, message, line)), code_(code), line_(line), reason_(reason) {}

}  // namespace sumeval
