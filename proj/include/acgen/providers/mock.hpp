#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "acgen/providers/transport.hpp"
#include "acgen/providers/types.hpp"

namespace acgen::providers {

/// Deterministic offline backend covering every wire operation.
///
/// * chat: scripted replies are consumed first (per purpose, then the
///   wildcard queue ""), then a registered responder for the purpose;
///   otherwise the call fails with Transport.
/// * embed_text: feature-hashed bag of unigrams and bigrams, unit-normalized.
///   Planted vectors override the hash for exact texts.
/// * embed_image: planted vectors by image bytes, else the hashed embedding
///   of the PNG tEXt metadata (shared text/image space), else a byte hash.
/// * image_to_html: scripted HTML per visual id, else a page synthesized from
///   the PNG tEXt metadata.
/// * next_token_logprobs / continuation_logprobs: scripted functions, else
///   hash- and overlap-based defaults.
class MockBackend final : public Transport {
 public:
  using ChatResponder = std::function<std::string(const ChatRequest&)>;
  using NextTokenFn = std::function<std::vector<TokenLogprob>(const std::string& prompt)>;
  using ContinuationFn =
      std::function<std::vector<TokenLogprob>(const std::string& context, const std::string& continuation)>;

  explicit MockBackend(std::size_t dim = 64, std::uint64_t seed = 0);

  nlohmann::json call(std::string_view op, const nlohmann::json& request) override;

  /// Queues replies for chats with this purpose ("" matches any purpose).
  void script_chat(const std::string& purpose, std::vector<std::string> replies);
  void set_chat_responder(const std::string& purpose, ChatResponder responder);
  void set_html(const std::string& visual_id, std::string html);
  void plant_text_embedding(const std::string& text, std::vector<double> values);
  void plant_image_embedding(const std::vector<std::uint8_t>& image, std::vector<double> values);
  void set_next_token(NextTokenFn fn);
  void set_continuation(ContinuationFn fn);

  std::size_t dim() const { return dim_; }
  /// The default text embedding (before unit normalization is applied by Provider).
  std::vector<double> hash_embedding(const std::string& text) const;

 private:
  std::string chat_reply(const ChatRequest& req);
  std::vector<double> image_embedding(const std::string& data_b64);
  std::string synthesize_html(const std::string& data_b64) const;

  std::size_t dim_;
  std::uint64_t seed_;
  std::mutex mu_;
  std::map<std::string, std::deque<std::string>> scripted_;
  std::map<std::string, ChatResponder> responders_;
  std::map<std::string, std::string> html_;
  std::map<std::string, std::vector<double>> planted_text_;
  std::map<std::string, std::vector<double>> planted_image_;  // keyed by base64
  NextTokenFn next_token_;
  ContinuationFn continuation_;
};

}  // namespace acgen::providers
