#include "acgen/providers/types.hpp"

#include <cmath>

#include "acgen/error.hpp"
#include "acgen/util/encoding.hpp"

namespace acgen::providers {

using nlohmann::json;

std::string Message::text_content() const {
  std::string out;
  for (const auto& p : parts) {
    if (const auto* t = std::get_if<TextPart>(&p)) {
      if (!out.empty()) out.push_back('\n');
      out += t->text;
    }
  }
  return out;
}

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

EmbeddingVector EmbeddingVector::unit(std::vector<double> values) {
  double s = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "embedding has a non-finite component");
    s += v * v;
  }
  if (values.empty() || s == 0.0) throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero embedding");
  double n = std::sqrt(s);
  for (double& v : values) v /= n;
  return EmbeddingVector{std::move(values)};
}

std::string to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(const std::string& s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  throw Error(ErrorCode::InvalidArgument, "unknown role '" + s + "'");
}

json to_json(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    json parts = json::array();
    for (const auto& p : m.parts) {
      if (const auto* t = std::get_if<TextPart>(&p)) {
        parts.push_back({{"type", "text"}, {"text", t->text}});
      } else {
        const auto& img = std::get<ImagePart>(p);
        parts.push_back({{"type", "image"}, {"media_type", img.media_type}, {"data", img.base64}});
      }
    }
    messages.push_back({{"role", to_string(m.role)}, {"content", std::move(parts)}});
  }
  json j{{"messages", std::move(messages)}, {"purpose", req.purpose}, {"metadata", req.metadata}};
  if (req.sampling) j["sampling"] = {{"temperature", req.sampling->temperature}, {"top_p", req.sampling->top_p}};
  return j;
}

ChatRequest chat_request_from_json(const json& j) {
  ChatRequest req;
  for (const auto& m : j.at("messages")) {
    Message msg;
    msg.role = role_from_string(m.at("role").get<std::string>());
    for (const auto& p : m.at("content")) {
      if (p.at("type") == "text") {
        msg.parts.emplace_back(TextPart{p.at("text").get<std::string>()});
      } else {
        msg.parts.emplace_back(ImagePart{p.at("data").get<std::string>(), p.at("media_type").get<std::string>()});
      }
    }
    req.messages.push_back(std::move(msg));
  }
  if (auto it = j.find("sampling"); it != j.end()) {
    req.sampling = Sampling{it->at("temperature").get<double>(), it->at("top_p").get<double>()};
  }
  req.purpose = j.value("purpose", "");
  req.metadata = j.value("metadata", json::object());
  return req;
}

json to_json(const ChatResponse& resp) {
  json j{{"text", resp.text}};
  if (resp.token_logprobs) {
    json lp = json::array();
    for (const auto& t : *resp.token_logprobs) lp.push_back({{"token", t.token}, {"logprob", t.logprob}});
    j["token_logprobs"] = std::move(lp);
  }
  return j;
}

ChatResponse chat_response_from_json(const json& j) {
  ChatResponse resp;
  resp.text = j.at("text").get<std::string>();
  if (auto it = j.find("token_logprobs"); it != j.end() && it->is_array()) {
    std::vector<TokenLogprob> lp;
    for (const auto& t : *it) lp.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
    resp.token_logprobs = std::move(lp);
  }
  return resp;
}

void ProviderConfig::validate() const {
  if (max_parallel < 1) throw Error(ErrorCode::ConfigError, "provider '" + name + "': max_parallel must be >= 1");
  if (retry.max_attempts < 1) {
    throw Error(ErrorCode::ConfigError, "provider '" + name + "': retry.max_attempts must be >= 1");
  }
  if (timeout.count() <= 0) throw Error(ErrorCode::ConfigError, "provider '" + name + "': timeout must be positive");
  if (backend == BackendKind::Http) {
    if (endpoint.empty()) throw Error(ErrorCode::ConfigError, "provider '" + name + "': http backend needs an endpoint");
    if (model_name.empty()) throw Error(ErrorCode::ConfigError, "provider '" + name + "': http backend needs a model");
  }
}

std::string ProviderConfig::fingerprint() const {
  json j{{"backend", backend == BackendKind::Mock ? "mock" : "http"},
         {"endpoint", endpoint},
         {"model", model_name},
         {"dim", dim}};
  return util::canonical_hash(j).substr(0, 16);
}

json to_json(const ProviderConfig& cfg) {
  return {{"name", cfg.name},
          {"backend", cfg.backend == BackendKind::Mock ? "mock" : "http"},
          {"endpoint", cfg.endpoint},
          {"model", cfg.model_name},
          {"api_key_env", cfg.api_key_env},
          {"timeout_ms", cfg.timeout.count()},
          {"max_parallel", cfg.max_parallel},
          {"retry", {{"max_attempts", cfg.retry.max_attempts}, {"backoff_ms", cfg.retry.backoff_base.count()}}},
          {"dim", cfg.dim},
          {"max_prompt_bytes", cfg.max_prompt_bytes}};
}

ProviderConfig provider_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "provider config must be an object");
  ProviderConfig cfg;
  try {
    cfg.name = j.value("name", "");
    auto backend = j.value("backend", "mock");
    if (backend == "mock") cfg.backend = BackendKind::Mock;
    else if (backend == "http") cfg.backend = BackendKind::Http;
    else throw Error(ErrorCode::ConfigError, "unknown backend '" + backend + "' (mock|http)");
    cfg.endpoint = j.value("endpoint", "");
    cfg.model_name = j.value("model", cfg.backend == BackendKind::Mock ? "mock" : "");
    cfg.api_key_env = j.value("api_key_env", "");
    cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    cfg.max_parallel = j.value("max_parallel", 4);
    if (auto it = j.find("retry"); it != j.end()) {
      cfg.retry.max_attempts = it->value("max_attempts", 3);
      cfg.retry.backoff_base = std::chrono::milliseconds(it->value("backoff_ms", 200));
    }
    cfg.dim = j.value("dim", std::size_t{0});
    cfg.max_prompt_bytes = j.value("max_prompt_bytes", std::size_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid provider config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace acgen::providers
