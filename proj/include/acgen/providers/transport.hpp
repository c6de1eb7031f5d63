#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace acgen::providers {

/// Wire operations. Every backend speaks these neutral JSON shapes:
///
///   chat                  {model, messages, sampling?, purpose, metadata} -> {text, token_logprobs?}
///   embed_text            {model, input}                                   -> {embedding: [..]}
///   embed_image           {model, media_type, data}                        -> {embedding: [..]}
///   image_to_html         {model, id, media_type, data}                    -> {html}
///   next_token_logprobs   {model, prompt}                                  -> {top_logprobs: [{token, logprob}]}
///   continuation_logprobs {model, context, continuation}                   -> {token_logprobs: [{token, logprob}]}
namespace ops {
inline constexpr std::string_view kChat = "chat";
inline constexpr std::string_view kEmbedText = "embed_text";
inline constexpr std::string_view kEmbedImage = "embed_image";
inline constexpr std::string_view kImageToHtml = "image_to_html";
inline constexpr std::string_view kNextTokenLogprobs = "next_token_logprobs";
inline constexpr std::string_view kContinuationLogprobs = "continuation_logprobs";
}  // namespace ops

class Transport {
 public:
  virtual ~Transport() = default;
  virtual nlohmann::json call(std::string_view op, const nlohmann::json& request) = 0;
};

/// Records every call passing through; used for call-count assertions and
/// run statistics.
class LoggingTransport final : public Transport {
 public:
  struct Call {
    std::string op;
    nlohmann::json request;
  };

  explicit LoggingTransport(std::shared_ptr<Transport> inner) : inner_(std::move(inner)) {}

  nlohmann::json call(std::string_view op, const nlohmann::json& request) override;

  std::vector<Call> calls() const;
  std::size_t count() const;
  std::size_t count(std::string_view op) const;
  void clear();

 private:
  std::shared_ptr<Transport> inner_;
  mutable std::mutex mu_;
  std::vector<Call> calls_;
};

enum class CacheMode {
  Off,     // no caching
  Auto,    // serve hits, record misses
  Record,  // always call through and overwrite
  Replay,  // strict: a miss is an error and the backend is never called
};

std::string to_string(CacheMode mode);
CacheMode cache_mode_from_string(const std::string& s);

/// Content-addressed record/replay cache. Each exchange lives in
/// `<dir>/<key[0:2]>/<key>.json` where key = SHA-256 of the canonical
/// {op, request} document. Reads are concurrent; writes are serialized and
/// atomic (temp file + rename).
class ReplayTransport final : public Transport {
 public:
  struct Stats {
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t writes = 0;
  };

  /// `inner` may be null only in Replay mode.
  ReplayTransport(std::shared_ptr<Transport> inner, std::filesystem::path dir, CacheMode mode);

  nlohmann::json call(std::string_view op, const nlohmann::json& request) override;

  static std::string key_for(std::string_view op, const nlohmann::json& request);
  std::filesystem::path path_for(const std::string& key) const;
  Stats stats() const;

 private:
  std::shared_ptr<Transport> inner_;
  std::filesystem::path dir_;
  CacheMode mode_;
  mutable std::shared_mutex mu_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> writes_{0};
};

}  // namespace acgen::providers
