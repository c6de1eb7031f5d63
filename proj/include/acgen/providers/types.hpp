#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace acgen::providers {

enum class Role { System, User, Assistant };

struct TextPart {
  std::string text;
  bool operator==(const TextPart&) const = default;
};

/// Base64 image payload as sent to multi-modal chat models.
struct ImagePart {
  std::string base64;
  std::string media_type;
  bool operator==(const ImagePart&) const = default;
};

using Part = std::variant<TextPart, ImagePart>;

struct Message {
  Role role = Role::User;
  std::vector<Part> parts;

  static Message text(Role role, std::string body) { return {role, {TextPart{std::move(body)}}}; }
  /// Concatenation of the text parts.
  std::string text_content() const;
  bool operator==(const Message&) const = default;
};

struct Sampling {
  double temperature = 0.0;
  double top_p = 1.0;
  bool operator==(const Sampling&) const = default;
};

struct ChatRequest {
  std::vector<Message> messages;
  /// Absent means "provider defaults".
  std::optional<Sampling> sampling;
  /// Pipeline stage that issued the call (generate, polish, global_score, ...).
  /// Offline backends use it to pick a responder; HTTP backends ignore it.
  std::string purpose;
  /// Structured context for offline backends; never sent over HTTP.
  nlohmann::json metadata = nlohmann::json::object();
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
  bool operator==(const TokenLogprob&) const = default;
};

struct ChatResponse {
  std::string text;
  std::optional<std::vector<TokenLogprob>> token_logprobs;
};

/// Unit-norm dense vector.
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  double norm() const;
  /// Scales `values` to unit L2 norm; throws InvalidArgument for zero or
  /// non-finite input.
  static EmbeddingVector unit(std::vector<double> values);
  bool operator==(const EmbeddingVector&) const = default;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{200};
};

enum class BackendKind { Mock, Http };

struct ProviderConfig {
  std::string name;  // role label used in logs and fingerprints
  BackendKind backend = BackendKind::Mock;
  std::string endpoint;
  std::string model_name;
  std::string api_key_env;
  std::chrono::milliseconds timeout{60000};
  int max_parallel = 4;
  RetryPolicy retry;
  /// Embedding dimension for mock backends and for validating HTTP replies
  /// (0 = accept the first dimension seen).
  std::size_t dim = 0;
  /// Largest prompt the model accepts, in bytes (0 = unlimited).
  std::size_t max_prompt_bytes = 0;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
  /// Identity of the backend (kind, endpoint, model, dim); independent of
  /// secrets, timeouts and caching.
  std::string fingerprint() const;
};

std::string to_string(Role role);
Role role_from_string(const std::string& s);

nlohmann::json to_json(const ChatRequest& req);
ChatRequest chat_request_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChatResponse& resp);
ChatResponse chat_response_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProviderConfig& cfg);
ProviderConfig provider_config_from_json(const nlohmann::json& j);

}  // namespace acgen::providers
