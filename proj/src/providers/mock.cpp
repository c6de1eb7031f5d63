#include "acgen/providers/mock.hpp"

#include <cmath>
#include <set>

#include "acgen/error.hpp"
#include "acgen/providers/media.hpp"
#include "acgen/util/encoding.hpp"
#include "acgen/util/text.hpp"

namespace acgen::providers {

using nlohmann::json;

namespace {

json logprob_list(const std::vector<TokenLogprob>& tokens) {
  json arr = json::array();
  for (const auto& t : tokens) arr.push_back({{"token", t.token}, {"logprob", t.logprob}});
  return arr;
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

MockBackend::MockBackend(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(ErrorCode::ConfigError, "mock embedding dimension must be positive");
}

std::vector<double> MockBackend::hash_embedding(const std::string& text) const {
  std::vector<double> v(dim_, 0.0);
  const std::uint64_t base = util::fnv1a64("acgen-mock", 0xcbf29ce484222325ULL ^ seed_);
  auto add = [&](const std::string& feature, double weight) {
    std::uint64_t h = util::fnv1a64(feature, base);
    double sign = (h >> 63) ? -1.0 : 1.0;
    v[h % dim_] += sign * weight;
  };
  auto tokens = util::tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i], 1.0);
    if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1], 0.5);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    for (std::size_t i = 0; i < dim_; ++i) {
      std::uint64_t h = util::fnv1a64(text + "#" + std::to_string(i), base);
      v[i] = static_cast<double>(h % 2001) / 1000.0 - 1.0;
    }
    v[util::fnv1a64(text, base) % dim_] += 1.0;
  }
  return v;
}

void MockBackend::script_chat(const std::string& purpose, std::vector<std::string> replies) {
  std::lock_guard lock(mu_);
  auto& q = scripted_[purpose];
  for (auto& r : replies) q.push_back(std::move(r));
}

void MockBackend::set_chat_responder(const std::string& purpose, ChatResponder responder) {
  std::lock_guard lock(mu_);
  responders_[purpose] = std::move(responder);
}

void MockBackend::set_html(const std::string& visual_id, std::string html) {
  std::lock_guard lock(mu_);
  html_[visual_id] = std::move(html);
}

void MockBackend::plant_text_embedding(const std::string& text, std::vector<double> values) {
  if (values.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "planted vector has the wrong dimension");
  std::lock_guard lock(mu_);
  planted_text_[text] = std::move(values);
}

void MockBackend::plant_image_embedding(const std::vector<std::uint8_t>& image, std::vector<double> values) {
  if (values.size() != dim_) throw Error(ErrorCode::DimensionMismatch, "planted vector has the wrong dimension");
  std::lock_guard lock(mu_);
  planted_image_[util::base64_encode(image)] = std::move(values);
}

void MockBackend::set_next_token(NextTokenFn fn) {
  std::lock_guard lock(mu_);
  next_token_ = std::move(fn);
}

void MockBackend::set_continuation(ContinuationFn fn) {
  std::lock_guard lock(mu_);
  continuation_ = std::move(fn);
}

std::string MockBackend::chat_reply(const ChatRequest& req) {
  ChatResponder responder;
  {
    std::lock_guard lock(mu_);
    for (const std::string& key : {req.purpose, std::string()}) {
      auto it = scripted_.find(key);
      if (it != scripted_.end() && !it->second.empty()) {
        std::string reply = std::move(it->second.front());
        it->second.pop_front();
        return reply;
      }
    }
    if (auto it = responders_.find(req.purpose); it != responders_.end()) responder = it->second;
    else if (auto any = responders_.find(""); any != responders_.end()) responder = any->second;
  }
  if (!responder) throw Error(ErrorCode::Transport, "mock backend has no reply for purpose '" + req.purpose + "'");
  return responder(req);
}

std::vector<double> MockBackend::image_embedding(const std::string& data_b64) {
  {
    std::lock_guard lock(mu_);
    if (auto it = planted_image_.find(data_b64); it != planted_image_.end()) return it->second;
  }
  auto bytes = util::base64_decode(data_b64);
  std::string text;
  for (const auto& [key, value] : png_text_chunks(bytes)) text += value + "\n";
  if (!util::trim(text).empty()) return hash_embedding(text);
  return hash_embedding(util::sha256_hex(std::span<const std::uint8_t>(bytes)));
}

std::string MockBackend::synthesize_html(const std::string& data_b64) const {
  auto bytes = util::base64_decode(data_b64);
  std::string title = "Screen";
  std::string description;
  for (const auto& [key, value] : png_text_chunks(bytes)) {
    if (key == "Title") title = value;
    else if (key == "Description") description = value;
  }
  std::string out = "<!DOCTYPE html>\n<html>\n<head>\n<style>body { font-family: sans-serif; margin: 0 }"
                    " .panel { padding: 12px; border: 1px solid #ccc }</style>\n"
                    "<script>window.analytics = window.analytics || [];</script>\n</head>\n"
                    "<body class=\"app\" style=\"background:#fafafa\">\n"
                    "  <!-- generated layout -->\n"
                    "  <header class=\"top-bar\" style=\"height:48px\"><h1 id=\"page-title\" class=\"title\">" +
                    html_escape(title) + "</h1></header>\n";
  out += "  <main class=\"panel\" role=\"main\">\n";
  for (const auto& sentence : util::split_lines(description)) {
    if (util::trim(sentence).empty()) continue;
    out += "    <p class=\"text-body\" style=\"color:#333\">" + html_escape(std::string(util::trim(sentence))) + "</p>\n";
  }
  out += "    <img class=\"hero\" alt=\"" + html_escape(title) +
         "\" src=\"data:image/png;base64,iVBORw0KGgo=\">\n  </main>\n</body>\n</html>\n";
  return out;
}

json MockBackend::call(std::string_view op, const json& request) {
  if (op == ops::kChat) {
    return {{"text", chat_reply(chat_request_from_json(request))}};
  }
  if (op == ops::kEmbedText) {
    std::string input = request.at("input").get<std::string>();
    {
      std::lock_guard lock(mu_);
      if (auto it = planted_text_.find(input); it != planted_text_.end()) return {{"embedding", it->second}};
    }
    return {{"embedding", hash_embedding(input)}};
  }
  if (op == ops::kEmbedImage) {
    return {{"embedding", image_embedding(request.at("data").get<std::string>())}};
  }
  if (op == ops::kImageToHtml) {
    std::string id = request.value("id", "");
    {
      std::lock_guard lock(mu_);
      if (auto it = html_.find(id); it != html_.end()) return {{"html", it->second}};
    }
    return {{"html", synthesize_html(request.at("data").get<std::string>())}};
  }
  if (op == ops::kNextTokenLogprobs) {
    std::string prompt = request.at("prompt").get<std::string>();
    NextTokenFn fn;
    {
      std::lock_guard lock(mu_);
      fn = next_token_;
    }
    if (fn) return {{"top_logprobs", logprob_list(fn(prompt))}};
    double p_yes = 0.1 + 0.8 * static_cast<double>(util::fnv1a64(prompt, seed_ + 7) % 1000) / 999.0;
    return {{"top_logprobs", logprob_list({{"yes", std::log(p_yes)}, {"no", std::log(1.0 - p_yes)}})}};
  }
  if (op == ops::kContinuationLogprobs) {
    std::string context = request.at("context").get<std::string>();
    std::string continuation = request.at("continuation").get<std::string>();
    ContinuationFn fn;
    {
      std::lock_guard lock(mu_);
      fn = continuation_;
    }
    if (fn) return {{"token_logprobs", logprob_list(fn(context, continuation))}};
    auto ctx_tokens = util::tokenize(context);
    std::set<std::string> seen(ctx_tokens.begin(), ctx_tokens.end());
    std::vector<TokenLogprob> out;
    for (const auto& tok : util::tokenize(continuation)) {
      double lp = seen.contains(tok) ? -0.5 : -2.0 - static_cast<double>(util::fnv1a64(tok, seed_) % 100) / 100.0;
      out.push_back({tok, lp});
    }
    return {{"token_logprobs", logprob_list(out)}};
  }
  throw Error(ErrorCode::Transport, "mock backend does not support operation '" + std::string(op) + "'");
}

}  // namespace acgen::providers
