#pragma once

#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acgen/corpus/types.hpp"
#include "acgen/providers/transport.hpp"
#include "acgen/providers/types.hpp"

namespace acgen::providers {

/// Typed front end over a Transport: validates requests, decodes replies and
/// enforces the per-capability contracts (unit-norm embeddings, decodable
/// images, non-empty conversions). At most `max_parallel` calls are in flight.
class Provider {
 public:
  Provider(ProviderConfig config, std::shared_ptr<Transport> transport);

  ChatResponse chat(const ChatRequest& request);
  EmbeddingVector embed_text(std::string_view text);
  EmbeddingVector embed_image(const corpus::VisualDoc& image);
  std::string image_to_html(const corpus::VisualDoc& image);
  /// Candidate next tokens with their log-probabilities.
  std::vector<TokenLogprob> next_token_logprobs(std::string_view prompt);
  /// Log-probability of every continuation token given the context.
  std::vector<TokenLogprob> continuation_logprobs(std::string_view context, std::string_view continuation);

  const ProviderConfig& config() const { return config_; }
  std::string fingerprint() const { return config_.fingerprint(); }

 private:
  nlohmann::json call(std::string_view op, const nlohmann::json& request);
  EmbeddingVector decode_embedding(const nlohmann::json& reply);

  ProviderConfig config_;
  std::shared_ptr<Transport> transport_;
  std::unique_ptr<std::counting_semaphore<1024>> slots_;
};

/// p_yes / (p_yes + p_no) over the candidates whose text, after stripping
/// leading whitespace and tokenizer word markers and case-folding, is "yes"
/// or "no". Spelling variants of the same answer are summed.
/// Throws LogprobsUnavailable when neither answer is present.
double yes_probability(std::span<const TokenLogprob> candidates);
double yes_probability(Provider& provider, std::string_view prompt);

struct SequenceScore {
  double total = 0.0;
  double per_token_mean = 0.0;
  std::size_t tokens = 0;
};

/// Sum and per-token mean of continuation log-probabilities.
/// Throws LogprobsUnavailable for an empty token list.
SequenceScore sequence_score(std::span<const TokenLogprob> tokens);
SequenceScore sequence_logprob(Provider& provider, std::string_view context, std::string_view continuation);

}  // namespace acgen::providers
