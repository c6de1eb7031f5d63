#include "acgen/providers/http_transport.hpp"

#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "acgen/error.hpp"
#include "acgen/util/text.hpp"

namespace acgen::providers {

using nlohmann::json;

namespace {

constexpr const char* kHtmlInstruction =
    "Convert this user-interface screenshot into one self-contained HTML document that reproduces its "
    "structure and visible text. Reply with the HTML only.";

std::string data_url(const json& request) {
  return "data:" + request.at("media_type").get<std::string>() + ";base64," + request.at("data").get<std::string>();
}

std::string message_text(const json& message) {
  const auto& content = message.at("content");
  if (content.is_string()) return content.get<std::string>();
  std::string out;
  for (const auto& part : content) {
    if (part.value("type", "") == "text") out += part.value("text", "");
  }
  return out;
}

std::string strip_code_fence(std::string text) {
  auto t = std::string(util::trim(text));
  if (!t.starts_with("```")) return text;
  auto first_nl = t.find('\n');
  auto last = t.rfind("```");
  if (first_nl == std::string::npos || last <= first_nl) return text;
  return std::string(util::trim(std::string_view(t).substr(first_nl + 1, last - first_nl - 1)));
}

[[noreturn]] void bad_reply(std::string_view op, const std::string& why) {
  throw Error(ErrorCode::Transport, "unexpected " + std::string(op) + " reply: " + why);
}

}  // namespace

HttpTransport::HttpTransport(ProviderConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  config_.validate();
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr) {
      throw Error(ErrorCode::ConfigError, "environment variable '" + config_.api_key_env + "' for provider '" +
                                              config_.name + "' is not set");
    }
    api_key_ = key;
  }
  auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::ConfigError, "endpoint must be an http(s) URL");
  auto slash = config_.endpoint.find('/', scheme + 3);
  host_ = config_.endpoint.substr(0, slash);
  prefix_ = slash == std::string::npos ? "" : config_.endpoint.substr(slash);
  while (prefix_.ends_with('/')) prefix_.pop_back();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

json HttpTransport::chat_body(const json& request) {
  json messages = json::array();
  for (const auto& m : request.at("messages")) {
    json content = json::array();
    for (const auto& p : m.at("content")) {
      if (p.at("type") == "text") {
        content.push_back({{"type", "text"}, {"text", p.at("text")}});
      } else {
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url(p)}}}});
      }
    }
    messages.push_back({{"role", m.at("role")}, {"content", std::move(content)}});
  }
  json body{{"model", request.at("model")}, {"messages", std::move(messages)}};
  if (auto it = request.find("sampling"); it != request.end()) {
    body["temperature"] = it->at("temperature");
    body["top_p"] = it->at("top_p");
  }
  return body;
}

json HttpTransport::post(const std::string& path, const json& body) {
  httplib::Client client(host_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string payload = body.dump();
  ErrorCode last_code = ErrorCode::Transport;
  std::string last_message;
  int last_status = 0;
  int attempt = 0;
  for (attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    auto res = client.Post(prefix_ + path, headers, payload, "application/json");
    bool retryable = false;
    if (!res) {
      last_code = ErrorCode::Transport;
      last_message = "request to " + host_ + prefix_ + path + " failed: " + httplib::to_string(res.error());
      last_status = 0;
      retryable = true;
    } else if (res->status >= 200 && res->status < 300) {
      try {
        return json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Transport, std::string("reply is not JSON: ") + e.what(), {{"attempts", attempt}});
      }
    } else {
      last_status = res->status;
      last_message = "HTTP " + std::to_string(res->status) + " from " + host_ + prefix_ + path;
      last_code = res->status == 429 ? ErrorCode::RateLimited : ErrorCode::Transport;
      retryable = res->status == 429 || res->status >= 500;
    }
    if (!retryable) break;
    if (attempt < config_.retry.max_attempts) sleeper_(config_.retry.backoff_base * (1LL << (attempt - 1)));
  }
  int attempts = std::min(attempt, config_.retry.max_attempts);
  throw Error(last_code, last_message + " after " + std::to_string(attempts) + " attempt(s)",
              {{"attempts", attempts}, {"status", last_status}});
}

json HttpTransport::call(std::string_view op, const json& request) {
  if (op == ops::kChat) {
    json reply = post("/chat/completions", chat_body(request));
    try {
      const auto& choice = reply.at("choices").at(0);
      json out{{"text", message_text(choice.at("message"))}};
      if (auto lp = choice.find("logprobs"); lp != choice.end() && lp->is_object() && lp->contains("content")) {
        json tokens = json::array();
        for (const auto& t : lp->at("content")) tokens.push_back({{"token", t.at("token")}, {"logprob", t.at("logprob")}});
        out["token_logprobs"] = std::move(tokens);
      }
      return out;
    } catch (const json::exception& e) {
      bad_reply(op, e.what());
    }
  }
  if (op == ops::kEmbedText || op == ops::kEmbedImage) {
    json body{{"model", request.at("model")}};
    if (op == ops::kEmbedText) body["input"] = request.at("input");
    else body["input"] = json::array({{{"image", data_url(request)}}});
    json reply = post("/embeddings", body);
    try {
      return {{"embedding", reply.at("data").at(0).at("embedding")}};
    } catch (const json::exception& e) {
      bad_reply(op, e.what());
    }
  }
  if (op == ops::kImageToHtml) {
    json body{{"model", request.at("model")},
              {"messages", json::array({{{"role", "user"},
                                         {"content", json::array({{{"type", "text"}, {"text", kHtmlInstruction}},
                                                                  {{"type", "image_url"},
                                                                   {"image_url", {{"url", data_url(request)}}}}})}}})}};
    json reply = post("/chat/completions", body);
    try {
      return {{"html", strip_code_fence(message_text(reply.at("choices").at(0).at("message")))}};
    } catch (const json::exception& e) {
      bad_reply(op, e.what());
    }
  }
  if (op == ops::kNextTokenLogprobs) {
    json body{{"model", request.at("model")},
              {"messages", json::array({{{"role", "user"}, {"content", request.at("prompt")}}})},
              {"max_tokens", 1},
              {"temperature", 0},
              {"logprobs", true},
              {"top_logprobs", 20}};
    json reply = post("/chat/completions", body);
    try {
      const auto& first = reply.at("choices").at(0).at("logprobs").at("content").at(0);
      json out = json::array();
      for (const auto& t : first.at("top_logprobs")) out.push_back({{"token", t.at("token")}, {"logprob", t.at("logprob")}});
      return {{"top_logprobs", std::move(out)}};
    } catch (const json::exception& e) {
      throw Error(ErrorCode::LogprobsUnavailable, std::string("provider returned no top logprobs: ") + e.what());
    }
  }
  if (op == ops::kContinuationLogprobs) {
    std::string context = request.at("context").get<std::string>();
    std::string continuation = request.at("continuation").get<std::string>();
    json body{{"model", request.at("model")},
              {"prompt", context + continuation},
              {"max_tokens", 0},
              {"echo", true},
              {"logprobs", 0}};
    json reply = post("/completions", body);
    try {
      const auto& lp = reply.at("choices").at(0).at("logprobs");
      const auto& tokens = lp.at("tokens");
      const auto& logprobs = lp.at("token_logprobs");
      const auto& offsets = lp.at("text_offset");
      json out = json::array();
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (offsets.at(i).get<std::size_t>() < context.size() || logprobs.at(i).is_null()) continue;
        out.push_back({{"token", tokens.at(i)}, {"logprob", logprobs.at(i)}});
      }
      return {{"token_logprobs", std::move(out)}};
    } catch (const json::exception& e) {
      throw Error(ErrorCode::LogprobsUnavailable, std::string("provider returned no echo logprobs: ") + e.what());
    }
  }
  throw Error(ErrorCode::Transport, "unsupported operation '" + std::string(op) + "'");
}

}  // namespace acgen::providers
