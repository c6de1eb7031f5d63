#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace acgen {

enum class ErrorCode {
  InvalidArgument,
  EmptyInput,
  MissingKeyword,
  SchemaError,
  DanglingReference,
  DuplicateId,
  ImageNotFound,
  InvalidImage,
  Transport,
  RateLimited,
  CacheMiss,
  DimensionMismatch,
  EmptyConversion,
  ParseError,
  LogprobsUnavailable,
  AblationViolation,
  OversizePrompt,
  UnparseableOutput,
  UnparseableScore,
  UnparseablePolish,
  MixedScorers,
  EmptyRelevanceSet,
  EmptyAfterTokenization,
  UnparseableVerdict,
  IncompleteVerdicts,
  UnparseablePreference,
  NonFiniteScore,
  FingerprintMismatch,
  MissingArtifact,
  ConfigError,
  Locked,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library. `details` carries structured
/// context (JSON pointer, attempt count, raw replies) for machine-readable
/// reporting.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json details = nlohmann::json::object());

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

  /// {"error": <code>, "message": ..., "details": {...}}
  nlohmann::json to_json() const;

  /// Same error with `prefix: ` prepended to the message.
  Error with_context(std::string_view prefix) const;

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace acgen
