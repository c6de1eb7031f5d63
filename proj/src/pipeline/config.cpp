#include "acgen/pipeline/config.hpp"

#include "acgen/error.hpp"
#include "acgen/util/files.hpp"

namespace acgen::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const Prompts& p) {
  return {{"generation", generation::to_json(p.generation)},
          {"reward", reward::to_json(p.reward)},
          {"evaluation", evaluation::to_json(p.evaluation)}};
}

Prompts prompts_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "prompts must be an object");
  Prompts p;
  p.generation = generation::prompt_config_from_json(j.value("generation", json::object()));
  p.reward = reward::reward_prompts_from_json(j.value("reward", json::object()));
  p.evaluation = evaluation::judge_prompts_from_json(j.value("evaluation", json::object()));
  return p;
}

ProviderConfigs ProviderConfigs::mock_defaults() {
  auto mock = [](const std::string& name) {
    providers::ProviderConfig c;
    c.name = name;
    c.backend = providers::BackendKind::Mock;
    c.model_name = "mock-" + name;
    return c;
  };
  ProviderConfigs p;
  p.embedder = mock("embedder");
  p.embedder.dim = 64;
  p.converter = mock("converter");
  p.lm_scorer = mock("lm_scorer");
  p.generator = mock("generator");
  p.judge = mock("judge");
  p.scorer = mock("scorer");
  for (std::size_t i = 0; i < 3; ++i) p.judges[i] = mock("judge" + std::to_string(i + 1));
  return p;
}

void PipelineConfig::validate() const {
  if (dataset.empty()) throw Error(ErrorCode::ConfigError, "no dataset path configured");
  if (run_dir.empty()) throw Error(ErrorCode::ConfigError, "no run directory configured");
  if (cache_dir.empty()) throw Error(ErrorCode::ConfigError, "no cache directory configured");
  retrieval.validate();
  polish.validate();
  generation::PromptTemplate::make(template_kind, prompts.generation);
  for (const auto* p : {&providers.embedder, &providers.converter, &providers.lm_scorer, &providers.generator,
                        &providers.judge, &providers.scorer, &providers.judges[0], &providers.judges[1],
                        &providers.judges[2]}) {
    p->validate();
  }
}

namespace {

json provider_semantics(const providers::ProviderConfig& c) {
  return {{"name", c.name}, {"fingerprint", c.fingerprint()}, {"max_prompt_bytes", c.max_prompt_bytes}};
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

providers::ProviderConfig provider_or(const json& j, const char* key, providers::ProviderConfig fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  json merged = providers::to_json(fallback);
  if (it->value("backend", "mock") == "http") {
    merged.erase("model");
    merged.erase("dim");
  }
  merged.update(*it);
  if (!it->contains("name")) merged["name"] = fallback.name;
  try {
    return providers::provider_config_from_json(merged);
  } catch (const Error& e) {
    throw e.with_context(std::string("providers.") + key);
  }
}

}  // namespace

json PipelineConfig::semantic_json() const {
  json judges = json::array();
  for (const auto& j : providers.judges) judges.push_back(provider_semantics(j));
  return {{"retrieval",
           {{"k", retrieval.k},
            {"text_strategy", retrieval::to_string(retrieval.text_strategy)},
            {"visual_variant", retrieval::to_string(retrieval.visual_variant)}}},
          {"generation", {{"template", generation::to_string(template_kind)}, {"ablation", generation::to_string(ablation)}}},
          {"polish",
           {{"threshold", polish.threshold},
            {"max_rounds", polish.max_rounds},
            {"local_scorer", reward::to_string(polish.local_scorer)}}},
          {"providers",
           {{"embedder", provider_semantics(providers.embedder)},
            {"converter", provider_semantics(providers.converter)},
            {"lm_scorer", provider_semantics(providers.lm_scorer)},
            {"generator", provider_semantics(providers.generator)},
            {"judge", provider_semantics(providers.judge)},
            {"scorer", provider_semantics(providers.scorer)},
            {"judges", std::move(judges)}}},
          {"prompts", pipeline::to_json(prompts)}};
}

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  PipelineConfig c;
  try {
    c.dataset = resolve(base_dir, j.value("dataset", "data/toy/dataset.json"));
    c.run_dir = resolve(base_dir, j.value("run_dir", "runs"));
    c.cache_dir = resolve(base_dir, j.value("cache_dir", "cache"));
    c.cache_mode = providers::cache_mode_from_string(j.value("cache_mode", "auto"));
    if (auto r = j.find("retrieval"); r != j.end()) {
      c.retrieval.k = r->value("k", c.retrieval.k);
      c.retrieval.text_strategy = retrieval::text_strategy_from_string(r->value("text_strategy", "DenseCosine"));
      c.retrieval.visual_variant = retrieval::visual_variant_from_string(r->value("visual_variant", "HtmlPruned"));
    }
    if (auto g = j.find("generation"); g != j.end()) {
      c.template_kind = generation::template_kind_from_string(g->value("template", "Apeer"));
      c.ablation = generation::ablation_from_string(g->value("ablation", "Full"));
    }
    if (auto p = j.find("polish"); p != j.end()) {
      c.polish.threshold = p->value("threshold", c.polish.threshold);
      c.polish.max_rounds = p->value("max_rounds", c.polish.max_rounds);
      c.polish.local_scorer = reward::local_scorer_from_string(p->value("local_scorer", "Verifier"));
    }
    if (auto p = j.find("providers"); p != j.end()) {
      auto& d = c.providers;
      d.embedder = provider_or(*p, "embedder", d.embedder);
      d.converter = provider_or(*p, "converter", d.converter);
      d.lm_scorer = provider_or(*p, "lm_scorer", d.lm_scorer);
      d.generator = provider_or(*p, "generator", d.generator);
      d.judge = provider_or(*p, "judge", d.judge);
      d.scorer = provider_or(*p, "scorer", d.scorer);
      if (auto js = p->find("judges"); js != p->end()) {
        if (!js->is_array() || js->size() != 3) throw Error(ErrorCode::ConfigError, "providers.judges must list three judges");
        for (std::size_t i = 0; i < 3; ++i) {
          json wrapper{{"j", (*js)[i]}};
          d.judges[i] = provider_or(wrapper, "j", d.judges[i]);
        }
      }
    }
    if (auto p = j.find("prompts"); p != j.end()) {
      if (p->is_string()) c.prompts = prompts_from_json(util::read_json(resolve(base_dir, p->get<std::string>())));
      else c.prompts = prompts_from_json(*p);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  json j;
  try {
    j = util::read_json(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what(), {{"path", path.string()}});
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

json to_json(const PipelineConfig& c) {
  json j = c.semantic_json();
  j["dataset"] = c.dataset.string();
  j["run_dir"] = c.run_dir.string();
  j["cache_dir"] = c.cache_dir.string();
  j["cache_mode"] = providers::to_string(c.cache_mode);
  return j;
}

}  // namespace acgen::pipeline
