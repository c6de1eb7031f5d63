#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgen/corpus/types.hpp"
#include "acgen/providers/provider.hpp"
#include "acgen/retrieval/retrieval.hpp"

namespace acgen::generation {

enum class TemplateKind { Apeer, Urial };
enum class Ablation { Full, NoVrag, NoRag };

std::string to_string(TemplateKind k);
std::string to_string(Ablation a);
TemplateKind template_kind_from_string(const std::string& s);
Ablation ablation_from_string(const std::string& s);

struct Exemplar {
  std::string story;
  std::string acs;
  bool operator==(const Exemplar&) const = default;
};

/// Editable prompt text. Placeholders: none; sections are concatenated.
struct PromptConfig {
  std::string role;
  std::string task;
  std::string knowledge_header;
  std::string visual_header;
  std::string output_format;
  std::string corrective;  // sent after an unparseable reply
  std::string urial_preamble;
  std::vector<Exemplar> exemplars;

  static PromptConfig defaults();
  bool operator==(const PromptConfig&) const = default;
};

nlohmann::json to_json(const PromptConfig& c);
/// Missing keys keep their default text.
PromptConfig prompt_config_from_json(const nlohmann::json& j);

struct PromptTemplate {
  TemplateKind kind = TemplateKind::Apeer;
  std::vector<Exemplar> exemplars;  // Urial only

  /// Apeer has no exemplars; Urial has at least one.
  void validate() const;
  static PromptTemplate make(TemplateKind kind, const PromptConfig& config);
};

struct TextContext {
  retrieval::RetrievalHit hit;
  std::string text;
};

struct VisualContext {
  retrieval::RetrievalHit hit;
  std::string media_type;
  std::string base64;
};

struct Truncation {
  std::string doc_id;
  std::string modality;  // "text" or "visual"
  std::size_t rank = 0;
};

struct AssembledPrompt {
  providers::ChatRequest request;
  std::vector<std::string> text_ids;    // in prompt order
  std::vector<std::string> visual_ids;  // in prompt order
  std::vector<Truncation> truncations;
  std::size_t bytes = 0;

  /// Canonical hash of the request.
  std::string hash() const;
};

/// Counts text bytes plus base64 payload bytes, as the provider limit does.
std::size_t prompt_bytes(const providers::ChatRequest& request);

/// Deterministic prompt assembly. Contexts are placed in rank order. When the
/// prompt exceeds `max_prompt_bytes` (0 = unlimited) the highest-numbered
/// rank is dropped first, an image before a text block of the same rank, and
/// each drop is recorded in `truncations`.
///
/// Throws AblationViolation when hits are supplied that the ablation forbids
/// and OversizePrompt when the prompt is too large even without context.
AssembledPrompt build_prompt(const PromptTemplate& tmpl, const PromptConfig& config, const corpus::UserStory& story,
                             std::vector<TextContext> text, std::vector<VisualContext> visual, Ablation ablation,
                             std::size_t max_prompt_bytes = 0);

struct GenerationOutput {
  std::string raw;  // reply that parsed
  std::vector<corpus::AcceptanceCriterion> acs;
  std::size_t retries = 0;
  /// Messages including the final assistant reply; polishing continues it.
  std::vector<providers::Message> dialogue;
  nlohmann::json transcript;
  std::string transcript_hash;
};

/// One chat call, parsed and atomicized. An unparseable reply gets one
/// corrective follow-up in the same dialogue; a second failure throws
/// UnparseableOutput with both replies in details["replies"].
GenerationOutput generate_acs(const AssembledPrompt& prompt, providers::Provider& provider,
                              const PromptConfig& config);

/// Story block used inside prompts.
std::string story_block(const corpus::UserStory& story);

nlohmann::json to_json(const GenerationOutput& out);
GenerationOutput generation_output_from_json(const nlohmann::json& j);

}  // namespace acgen::generation
