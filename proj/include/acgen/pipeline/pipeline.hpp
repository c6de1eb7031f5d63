#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgen/corpus/types.hpp"
#include "acgen/pipeline/config.hpp"
#include "acgen/providers/mock.hpp"
#include "acgen/providers/provider.hpp"
#include "acgen/providers/transport.hpp"

namespace acgen::pipeline {

/// One provider with its transport stack: backend -> replay cache -> call log.
struct ProviderHandle {
  std::shared_ptr<providers::Provider> provider;
  std::shared_ptr<providers::LoggingTransport> log;
  std::shared_ptr<providers::ReplayTransport> replay;
  std::shared_ptr<providers::MockBackend> mock;  // null for HTTP backends
};

struct ProviderSet {
  ProviderHandle embedder, converter, lm_scorer, generator, judge, scorer;
  std::array<ProviderHandle, 3> judges;

  std::vector<const ProviderHandle*> all() const;
  std::array<providers::Provider*, 3> judge_ptrs() const;
  /// Calls per operation summed over every provider.
  nlohmann::json call_counts() const;
  nlohmann::json cache_stats() const;
};

/// Builds every provider. HTTP backends read their API keys here, so a
/// missing variable fails before any network call. Mock backends get the
/// offline responders for `dataset`.
ProviderSet make_providers(const PipelineConfig& cfg, std::shared_ptr<const corpus::Dataset> dataset);

/// Exclusive lock on a run directory; throws Locked when already held.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Loaded dataset plus providers for one command invocation.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);
  /// Test hook: use prebuilt providers.
  Pipeline(PipelineConfig cfg, std::shared_ptr<const corpus::Dataset> dataset, ProviderSet providers);

  const PipelineConfig& config() const { return cfg_; }
  const corpus::Dataset& dataset() const { return *dataset_; }
  ProviderSet& providers() { return providers_; }

  /// Content hash of the semantic config, dataset and provider fingerprints.
  std::string run_id() const;
  std::filesystem::path run_path(const std::string& run_id) const;
  std::filesystem::path text_index_path() const;
  std::filesystem::path visual_index_path() const;

  nlohmann::json cmd_index();
  nlohmann::json cmd_generate();
  nlohmann::json cmd_polish(const std::string& run_id);
  nlohmann::json cmd_eval_retrieval();
  nlohmann::json cmd_eval_acs(const std::string& run_id);
  nlohmann::json cmd_report(const std::string& run_id);
  /// index, generate, polish, eval-retrieval, eval-acs, report.
  nlohmann::json cmd_all();

 private:
  nlohmann::json generate_locked(const std::string& run_id);
  void update_manifest(const std::string& run_id, const std::function<void(nlohmann::json&)>& fn);

  PipelineConfig cfg_;
  std::shared_ptr<const corpus::Dataset> dataset_;
  std::string dataset_fingerprint_;
  ProviderSet providers_;
};

/// Plain-text summary of a report.
std::string render_report_text(const nlohmann::json& report);

}  // namespace acgen::pipeline
