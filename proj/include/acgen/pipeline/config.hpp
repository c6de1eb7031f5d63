#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "acgen/evaluation/judges.hpp"
#include "acgen/generation/generation.hpp"
#include "acgen/providers/transport.hpp"
#include "acgen/providers/types.hpp"
#include "acgen/retrieval/retrieval.hpp"
#include "acgen/reward/reward.hpp"

namespace acgen::pipeline {

struct Prompts {
  generation::PromptConfig generation = generation::PromptConfig::defaults();
  reward::RewardPrompts reward = reward::RewardPrompts::defaults();
  evaluation::JudgePrompts evaluation = evaluation::JudgePrompts::defaults();

  bool operator==(const Prompts&) const = default;
};

nlohmann::json to_json(const Prompts& p);
Prompts prompts_from_json(const nlohmann::json& j);

/// Provider roles used by the pipeline.
struct ProviderConfigs {
  providers::ProviderConfig embedder;   // text and image embeddings, semantic similarity
  providers::ProviderConfig converter;  // screenshot to HTML
  providers::ProviderConfig lm_scorer;  // LM-scored text retrieval
  providers::ProviderConfig generator;  // generation and polishing
  providers::ProviderConfig judge;      // global quality level
  providers::ProviderConfig scorer;     // local per-criterion score
  std::array<providers::ProviderConfig, 3> judges;  // coverage and comparison

  static ProviderConfigs mock_defaults();
};

struct PipelineConfig {
  std::filesystem::path dataset;
  std::filesystem::path run_dir;
  std::filesystem::path cache_dir;
  providers::CacheMode cache_mode = providers::CacheMode::Auto;

  retrieval::RetrievalConfig retrieval;
  generation::TemplateKind template_kind = generation::TemplateKind::Apeer;
  generation::Ablation ablation = generation::Ablation::Full;
  reward::PolishConfig polish;
  ProviderConfigs providers = ProviderConfigs::mock_defaults();
  Prompts prompts;

  /// Throws ConfigError.
  void validate() const;
  /// Everything that influences results; excludes paths and cache mode.
  nlohmann::json semantic_json() const;
};

/// Relative paths in the file resolve against the file's directory. A
/// "prompts" entry may be an object or a path to a JSON file.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const PipelineConfig& c);

}  // namespace acgen::pipeline
