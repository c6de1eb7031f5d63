#include "acgen/error.hpp"

namespace acgen {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingKeyword: return "MissingKeyword";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ImageNotFound: return "ImageNotFound";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::CacheMiss: return "CacheMiss";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyConversion: return "EmptyConversion";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::LogprobsUnavailable: return "LogprobsUnavailable";
    case ErrorCode::AblationViolation: return "AblationViolation";
    case ErrorCode::OversizePrompt: return "OversizePrompt";
    case ErrorCode::UnparseableOutput: return "UnparseableOutput";
    case ErrorCode::UnparseableScore: return "UnparseableScore";
    case ErrorCode::UnparseablePolish: return "UnparseablePolish";
    case ErrorCode::MixedScorers: return "MixedScorers";
    case ErrorCode::EmptyRelevanceSet: return "EmptyRelevanceSet";
    case ErrorCode::EmptyAfterTokenization: return "EmptyAfterTokenization";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::IncompleteVerdicts: return "IncompleteVerdicts";
    case ErrorCode::UnparseablePreference: return "UnparseablePreference";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::Locked: return "Locked";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, nlohmann::json details)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      details_(std::move(details)) {}

nlohmann::json Error::to_json() const {
  return {{"error", std::string(to_string(code_))},
          {"message", what()},
          {"details", details_}};
}

Error Error::with_context(std::string_view prefix) const {
  std::string msg = what();
  auto colon = msg.find(": ");
  std::string body = colon == std::string::npos ? msg : msg.substr(colon + 2);
  return Error(code_, std::string(prefix) + ": " + body, details_);
}

}  // namespace acgen
