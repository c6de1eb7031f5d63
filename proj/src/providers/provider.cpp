#include "acgen/providers/provider.hpp"

#include <algorithm>
#include <cmath>

#include "acgen/error.hpp"
#include "acgen/providers/media.hpp"
#include "acgen/util/encoding.hpp"
#include "acgen/util/text.hpp"

namespace acgen::providers {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(std::string_view op, const std::string& why) {
  throw Error(ErrorCode::Transport, "malformed " + std::string(op) + " reply: " + why);
}

std::vector<TokenLogprob> decode_logprobs(std::string_view op, const json& reply, const char* key) {
  auto it = reply.find(key);
  if (it == reply.end() || !it->is_array()) {
    throw Error(ErrorCode::LogprobsUnavailable, std::string(op) + " reply carries no '" + key + "'");
  }
  std::vector<TokenLogprob> out;
  for (const auto& t : *it) {
    if (!t.contains("token") || !t.contains("logprob") || !t["logprob"].is_number()) {
      malformed(op, "token entry without token/logprob");
    }
    double lp = t["logprob"].get<double>();
    if (!std::isfinite(lp)) malformed(op, "non-finite logprob");
    out.push_back({t["token"].get<std::string>(), std::min(lp, 0.0)});
  }
  return out;
}

std::size_t request_bytes(const ChatRequest& req) {
  std::size_t n = 0;
  for (const auto& m : req.messages) {
    for (const auto& p : m.parts) {
      if (const auto* t = std::get_if<TextPart>(&p)) n += t->text.size();
      else n += std::get<ImagePart>(p).base64.size();
    }
  }
  return n;
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

}  // namespace

Provider::Provider(ProviderConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
  if (!transport_) throw Error(ErrorCode::ConfigError, "provider '" + config_.name + "' has no transport");
  slots_ = std::make_unique<std::counting_semaphore<1024>>(std::clamp(config_.max_parallel, 1, 1024));
}

json Provider::call(std::string_view op, const json& request) {
  SlotGuard guard(*slots_);
  return transport_->call(op, request);
}

ChatResponse Provider::chat(const ChatRequest& request) {
  if (request.messages.empty()) throw Error(ErrorCode::InvalidArgument, "chat request has no messages");
  for (const auto& m : request.messages) {
    for (const auto& p : m.parts) {
      if (const auto* img = std::get_if<ImagePart>(&p)) {
        if (img->base64.empty() || !util::is_valid_base64(img->base64)) {
          throw Error(ErrorCode::InvalidArgument, "image part is not valid base64");
        }
      }
    }
  }
  if (request.sampling) {
    const auto& s = *request.sampling;
    if (!(s.temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
    if (!(s.top_p > 0.0 && s.top_p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "top_p must be in (0, 1]");
  }
  if (config_.max_prompt_bytes > 0 && request_bytes(request) > config_.max_prompt_bytes) {
    throw Error(ErrorCode::OversizePrompt, "request exceeds the provider limit of " +
                                               std::to_string(config_.max_prompt_bytes) + " bytes");
  }
  json body = to_json(request);
  body["model"] = config_.model_name;
  json reply = call(ops::kChat, body);
  if (!reply.contains("text") || !reply["text"].is_string()) malformed(ops::kChat, "missing text");
  return chat_response_from_json(reply);
}

EmbeddingVector Provider::decode_embedding(const json& reply) {
  auto it = reply.find("embedding");
  if (it == reply.end() || !it->is_array()) malformed("embedding", "missing embedding array");
  std::vector<double> values;
  values.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) malformed("embedding", "non-numeric component");
    values.push_back(v.get<double>());
  }
  if (config_.dim != 0 && values.size() != config_.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "provider '" + config_.name + "' returned " + std::to_string(values.size()) +
                    " dimensions, expected " + std::to_string(config_.dim),
                {{"expected", config_.dim}, {"actual", values.size()}});
  }
  try {
    return EmbeddingVector::unit(std::move(values));
  } catch (const Error& e) {
    malformed("embedding", e.what());
  }
}

EmbeddingVector Provider::embed_text(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed empty text");
  return decode_embedding(call(ops::kEmbedText, {{"model", config_.model_name}, {"input", text}}));
}

EmbeddingVector Provider::embed_image(const corpus::VisualDoc& image) {
  validate_image(image.image, image.media_type);
  return decode_embedding(call(ops::kEmbedImage, {{"model", config_.model_name},
                                                  {"media_type", image.media_type},
                                                  {"data", util::base64_encode(image.image)}}));
}

std::string Provider::image_to_html(const corpus::VisualDoc& image) {
  validate_image(image.image, image.media_type);
  json reply = call(ops::kImageToHtml, {{"model", config_.model_name},
                                        {"id", image.id},
                                        {"media_type", image.media_type},
                                        {"data", util::base64_encode(image.image)}});
  auto it = reply.find("html");
  if (it == reply.end() || !it->is_string()) malformed(ops::kImageToHtml, "missing html");
  std::string html = it->get<std::string>();
  if (util::trim(html).empty()) {
    throw Error(ErrorCode::EmptyConversion, "image-to-HTML conversion of '" + image.id + "' returned nothing");
  }
  return html;
}

std::vector<TokenLogprob> Provider::next_token_logprobs(std::string_view prompt) {
  if (prompt.empty()) throw Error(ErrorCode::InvalidArgument, "empty scoring prompt");
  json reply = call(ops::kNextTokenLogprobs, {{"model", config_.model_name}, {"prompt", prompt}});
  return decode_logprobs(ops::kNextTokenLogprobs, reply, "top_logprobs");
}

std::vector<TokenLogprob> Provider::continuation_logprobs(std::string_view context, std::string_view continuation) {
  if (continuation.empty()) throw Error(ErrorCode::InvalidArgument, "empty continuation");
  json reply = call(ops::kContinuationLogprobs,
                    {{"model", config_.model_name}, {"context", context}, {"continuation", continuation}});
  return decode_logprobs(ops::kContinuationLogprobs, reply, "token_logprobs");
}

namespace {

std::string normalize_answer_token(std::string_view token) {
  std::string_view t = util::trim(token);
  // SentencePiece and GPT-2 BPE word-start markers.
  for (std::string_view marker : {std::string_view("\xE2\x96\x81"), std::string_view("\xC4\xA0")}) {
    while (t.starts_with(marker)) t.remove_prefix(marker.size());
  }
  return util::to_lower_ascii(util::trim(t));
}

}  // namespace

double yes_probability(std::span<const TokenLogprob> candidates) {
  double p_yes = 0.0, p_no = 0.0;
  bool seen_yes = false, seen_no = false;
  for (const auto& c : candidates) {
    auto t = normalize_answer_token(c.token);
    if (t == "yes") {
      p_yes += std::exp(c.logprob);
      seen_yes = true;
    } else if (t == "no") {
      p_no += std::exp(c.logprob);
      seen_no = true;
    }
  }
  if (!seen_yes && !seen_no) {
    throw Error(ErrorCode::LogprobsUnavailable, "neither 'yes' nor 'no' among the candidate tokens");
  }
  if (p_yes + p_no <= 0.0) return seen_yes && !seen_no ? 1.0 : (seen_no && !seen_yes ? 0.0 : 0.5);
  return p_yes / (p_yes + p_no);
}

double yes_probability(Provider& provider, std::string_view prompt) {
  auto candidates = provider.next_token_logprobs(prompt);
  return yes_probability(candidates);
}

SequenceScore sequence_score(std::span<const TokenLogprob> tokens) {
  if (tokens.empty()) throw Error(ErrorCode::LogprobsUnavailable, "no continuation token logprobs");
  SequenceScore s;
  for (const auto& t : tokens) s.total += t.logprob;
  s.tokens = tokens.size();
  s.per_token_mean = s.total / static_cast<double>(s.tokens);
  return s;
}

SequenceScore sequence_logprob(Provider& provider, std::string_view context, std::string_view continuation) {
  auto tokens = provider.continuation_logprobs(context, continuation);
  return sequence_score(tokens);
}

}  // namespace acgen::providers
