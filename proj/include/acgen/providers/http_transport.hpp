#pragma once

#include <chrono>
#include <functional>
#include <string>

#include "acgen/providers/transport.hpp"
#include "acgen/providers/types.hpp"

namespace acgen::providers {

/// OpenAI-compatible HTTP backend.
///
///   chat, image_to_html, next_token_logprobs -> POST {endpoint}/chat/completions
///   embed_text, embed_image                  -> POST {endpoint}/embeddings
///   continuation_logprobs                    -> POST {endpoint}/completions (echo + logprobs)
///
/// Images travel as data URLs. Image embeddings use `input: [{"image": <data URL>}]`.
/// The API key is read from the environment variable named in the config.
/// Connection failures, 429 and 5xx replies are retried with exponential
/// backoff up to `retry.max_attempts`; the final error carries
/// details["attempts"].
class HttpTransport final : public Transport {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  /// Throws ConfigError when `api_key_env` names an unset variable.
  explicit HttpTransport(ProviderConfig config, Sleeper sleeper = {});

  nlohmann::json call(std::string_view op, const nlohmann::json& request) override;

  /// Neutral chat request -> OpenAI chat/completions body.
  static nlohmann::json chat_body(const nlohmann::json& request);

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  ProviderConfig config_;
  std::string api_key_;
  std::string host_;    // scheme://host[:port]
  std::string prefix_;  // path prefix such as /v1
  Sleeper sleeper_;
};

}  // namespace acgen::providers
