#include "acgen/pipeline/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <set>

#include "acgen/corpus/dataset.hpp"
#include "acgen/corpus/gherkin.hpp"
#include "acgen/error.hpp"
#include "acgen/evaluation/judges.hpp"
#include "acgen/evaluation/metrics.hpp"
#include "acgen/pipeline/offline.hpp"
#include "acgen/providers/http_transport.hpp"
#include "acgen/util/encoding.hpp"
#include "acgen/util/files.hpp"
#include "acgen/util/parallel.hpp"

namespace acgen::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ProviderHandle make_handle(const providers::ProviderConfig& cfg, const PipelineConfig& pc,
                           const std::shared_ptr<const corpus::Dataset>& dataset) {
  ProviderHandle h;
  std::shared_ptr<providers::Transport> backend;
  if (cfg.backend == providers::BackendKind::Mock) {
    h.mock = std::make_shared<providers::MockBackend>(cfg.dim ? cfg.dim : 64);
    install_offline_responders(*h.mock, dataset);
    backend = h.mock;
  } else if (pc.cache_mode != providers::CacheMode::Replay) {
    backend = std::make_shared<providers::HttpTransport>(cfg);
  }
  h.replay = std::make_shared<providers::ReplayTransport>(backend, pc.cache_dir / cfg.fingerprint(), pc.cache_mode);
  h.log = std::make_shared<providers::LoggingTransport>(h.replay);
  h.provider = std::make_shared<providers::Provider>(cfg, h.log);
  return h;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
};

fs::path generation_path(const fs::path& run, const std::string& story_id) {
  return run / "generation" / (story_id + ".json");
}

fs::path polish_path(const fs::path& run, const std::string& story_id) { return run / "polish" / (story_id + ".json"); }

[[noreturn]] void missing(const fs::path& path, const std::string& hint) {
  throw Error(ErrorCode::MissingArtifact, path.string() + " does not exist; run '" + hint + "' first",
              {{"path", path.string()}, {"required_stage", hint}});
}

json hits_json(const std::vector<retrieval::RetrievalHit>& hits) {
  json arr = json::array();
  for (const auto& h : hits) arr.push_back(retrieval::to_json(h));
  return arr;
}

json acs_rendered(const std::vector<corpus::AcceptanceCriterion>& acs) {
  json arr = json::array();
  for (const auto& ac : acs) arr.push_back(corpus::render(ac));
  return arr;
}

json mean_ranking(const std::vector<evaluation::RankingMetrics>& ms) {
  evaluation::RankingMetrics mean;
  std::vector<double> aps;
  for (const auto& m : ms) {
    mean.k = m.k;
    mean.precision += m.precision;
    mean.recall += m.recall;
    mean.f1 += m.f1;
    mean.ndcg += m.ndcg;
    mean.hit_rate += m.hit_rate;
    aps.push_back(m.average_precision);
  }
  double n = static_cast<double>(ms.size());
  json j = {{"k", mean.k},
            {"precision", mean.precision / n},
            {"recall", mean.recall / n},
            {"f1", mean.f1 / n},
            {"ndcg", mean.ndcg / n},
            {"hit_rate", mean.hit_rate / n},
            {"map", evaluation::mean_average_precision(aps)},
            {"queries", ms.size()}};
  return j;
}

json mean_text(const std::vector<evaluation::TextMetrics>& ms) {
  double n = static_cast<double>(ms.size());
  evaluation::TextMetrics s;
  double lev = 0.0;
  for (const auto& m : ms) {
    s.semantic_sim += m.semantic_sim;
    for (auto [acc, v] : {std::pair{&s.rouge1, &m.rouge1}, std::pair{&s.rouge2, &m.rouge2}, std::pair{&s.rougeL, &m.rougeL}}) {
      acc->precision += v->precision;
      acc->recall += v->recall;
      acc->f1 += v->f1;
    }
    s.bleu += m.bleu;
    lev += static_cast<double>(m.levenshtein);
  }
  auto prf = [n](const evaluation::Prf& p) {
    return json{{"precision", p.precision / n}, {"recall", p.recall / n}, {"f1", p.f1 / n}};
  };
  return {{"semantic_sim", s.semantic_sim / n}, {"rouge1", prf(s.rouge1)}, {"rouge2", prf(s.rouge2)},
          {"rougeL", prf(s.rougeL)},            {"bleu", s.bleu / n},      {"levenshtein", lev / n},
          {"stories", ms.size()}};
}

std::vector<corpus::AcceptanceCriterion> acs_from(const json& arr) {
  std::vector<corpus::AcceptanceCriterion> out;
  for (const auto& a : arr) out.push_back(corpus::criterion_from_json(a));
  return out;
}

}  // namespace

std::vector<const ProviderHandle*> ProviderSet::all() const {
  return {&embedder, &converter, &lm_scorer, &generator, &judge, &scorer, &judges[0], &judges[1], &judges[2]};
}

std::array<providers::Provider*, 3> ProviderSet::judge_ptrs() const {
  return {judges[0].provider.get(), judges[1].provider.get(), judges[2].provider.get()};
}

json ProviderSet::call_counts() const {
  json counts = json::object();
  for (const auto* h : all()) {
    for (const auto& c : h->log->calls()) counts[c.op] = counts.value(c.op, 0) + 1;
  }
  return counts;
}

json ProviderSet::cache_stats() const {
  std::size_t hits = 0, misses = 0, writes = 0;
  for (const auto* h : all()) {
    auto s = h->replay->stats();
    hits += s.hits;
    misses += s.misses;
    writes += s.writes;
  }
  return {{"hits", hits}, {"misses", misses}, {"writes", writes}};
}

ProviderSet make_providers(const PipelineConfig& cfg, std::shared_ptr<const corpus::Dataset> dataset) {
  const auto& p = cfg.providers;
  ProviderSet set;
  set.embedder = make_handle(p.embedder, cfg, dataset);
  set.converter = make_handle(p.converter, cfg, dataset);
  set.lm_scorer = make_handle(p.lm_scorer, cfg, dataset);
  set.generator = make_handle(p.generator, cfg, dataset);
  set.judge = make_handle(p.judge, cfg, dataset);
  set.scorer = make_handle(p.scorer, cfg, dataset);
  for (std::size_t i = 0; i < 3; ++i) set.judges[i] = make_handle(p.judges[i], cfg, dataset);
  return set;
}

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lock") {
  fs::create_directories(dir);
  int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw Error(ErrorCode::Locked,
                  "another command holds " + path_.string() + " (remove it if no command is running)",
                  {{"lock", path_.string()}});
    }
    throw Error(ErrorCode::Io, "cannot create " + path_.string() + ": " + std::strerror(errno));
  }
  std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  dataset_ = std::make_shared<const corpus::Dataset>(corpus::load_dataset(cfg_.dataset));
  dataset_fingerprint_ = corpus::fingerprint(*dataset_);
  providers_ = make_providers(cfg_, dataset_);
}

Pipeline::Pipeline(PipelineConfig cfg, std::shared_ptr<const corpus::Dataset> dataset, ProviderSet providers)
    : cfg_(std::move(cfg)), dataset_(std::move(dataset)), providers_(std::move(providers)) {
  cfg_.validate();
  dataset_fingerprint_ = corpus::fingerprint(*dataset_);
}

std::string Pipeline::run_id() const {
  json j{{"config", cfg_.semantic_json()}, {"dataset", dataset_fingerprint_}};
  return util::canonical_hash(j).substr(0, 16);
}

fs::path Pipeline::run_path(const std::string& run_id) const { return cfg_.run_dir / "runs" / run_id; }

fs::path Pipeline::text_index_path() const {
  bool dense = cfg_.retrieval.text_strategy == retrieval::TextStrategy::DenseCosine;
  json key{{"dataset", dataset_fingerprint_},
           {"strategy", retrieval::to_string(cfg_.retrieval.text_strategy)},
           {"embedder", dense ? cfg_.providers.embedder.fingerprint() : ""}};
  return cfg_.run_dir / "indices" /
         ("text-" + retrieval::to_string(cfg_.retrieval.text_strategy) + "-" + util::canonical_hash(key).substr(0, 12) +
          ".json");
}

fs::path Pipeline::visual_index_path() const {
  json key{{"dataset", dataset_fingerprint_},
           {"variant", retrieval::to_string(cfg_.retrieval.visual_variant)},
           {"embedder", cfg_.providers.embedder.fingerprint()},
           {"converter", cfg_.providers.converter.fingerprint()}};
  return cfg_.run_dir / "indices" /
         ("visual-" + retrieval::to_string(cfg_.retrieval.visual_variant) + "-" +
          util::canonical_hash(key).substr(0, 12) + ".json");
}

void Pipeline::update_manifest(const std::string& run_id, const std::function<void(json&)>& fn) {
  fs::path path = run_path(run_id) / "manifest.json";
  json m;
  if (fs::exists(path)) {
    m = util::read_json(path);
  } else {
    json fingerprints = json::object();
    const auto& p = cfg_.providers;
    for (const auto* c : {&p.embedder, &p.converter, &p.lm_scorer, &p.generator, &p.judge, &p.scorer, &p.judges[0],
                          &p.judges[1], &p.judges[2]}) {
      fingerprints[c->name] = c->fingerprint();
    }
    m = {{"run_id", run_id},
         {"config", cfg_.semantic_json()},
         {"dataset_fingerprint", dataset_fingerprint_},
         {"provider_fingerprints", std::move(fingerprints)},
         {"ablation", generation::to_string(cfg_.ablation)},
         {"generation_sampling", "provider defaults"},
         {"judge_sampling", {{"temperature", evaluation::kJudgeTemperature}, {"top_p", evaluation::kJudgeTopP}}},
         {"timing", json::object()}};
  }
  fn(m);
  util::write_json(path, m);
}

json Pipeline::cmd_index() {
  RunLock lock(cfg_.run_dir);
  Stopwatch sw;
  json out{{"command", "index"}};
  auto& emb = *providers_.embedder.provider;

  fs::path tp = text_index_path();
  bool dense = cfg_.retrieval.text_strategy == retrieval::TextStrategy::DenseCosine;
  if (fs::exists(tp)) {
    retrieval::load_index(tp, dense ? emb.fingerprint() : "");
    out["text_index"] = {{"path", tp.string()}, {"built", false}};
  } else {
    auto index = retrieval::index_text(dataset_->chunks, cfg_.retrieval.text_strategy, emb);
    retrieval::save_index(index, tp);
    out["text_index"] = {{"path", tp.string()}, {"built", true}, {"entries", index.size()}};
  }

  fs::path vp = visual_index_path();
  if (dataset_->visuals.empty()) {
    out["visual_index"] = nullptr;
  } else if (fs::exists(vp)) {
    retrieval::load_index(vp, emb.fingerprint());
    out["visual_index"] = {{"path", vp.string()}, {"built", false}};
  } else {
    auto index = retrieval::index_visual(dataset_->visuals, cfg_.retrieval.visual_variant, emb,
                                         providers_.converter.provider.get());
    retrieval::save_index(index, vp);
    out["visual_index"] = {{"path", vp.string()}, {"built", true}, {"entries", index.size()}};
  }
  out["elapsed_ms"] = sw.ms();
  return out;
}

json Pipeline::cmd_generate() {
  std::string id = run_id();
  RunLock lock(cfg_.run_dir);
  return generate_locked(id);
}

json Pipeline::generate_locked(const std::string& id) {
  Stopwatch sw;
  const bool use_text = cfg_.ablation != generation::Ablation::NoRag;
  const bool use_visual = cfg_.ablation == generation::Ablation::Full && !dataset_->visuals.empty();
  auto& emb = *providers_.embedder.provider;
  const bool dense = cfg_.retrieval.text_strategy == retrieval::TextStrategy::DenseCosine;

  std::optional<retrieval::Index> text_index, visual_index;
  if (use_text) {
    if (!fs::exists(text_index_path())) missing(text_index_path(), "index");
    text_index = retrieval::load_index(text_index_path(), dense ? emb.fingerprint() : "");
  }
  if (use_visual) {
    if (!fs::exists(visual_index_path())) missing(visual_index_path(), "index");
    visual_index = retrieval::load_index(visual_index_path(), emb.fingerprint());
  }

  auto tmpl = generation::PromptTemplate::make(cfg_.template_kind, cfg_.prompts.generation);
  retrieval::QueryCache cache;
  auto& text_provider = dense ? emb : *providers_.lm_scorer.provider;
  const auto& stories = dataset_->stories;
  std::vector<json> artifacts(stories.size());
  fs::path run = run_path(id);

  util::parallel_for(stories.size(), static_cast<std::size_t>(cfg_.providers.generator.max_parallel), [&](std::size_t i) {
    const auto& story = stories[i];
    try {
      std::vector<retrieval::RetrievalHit> text_hits, visual_hits;
      std::vector<generation::TextContext> text_ctx;
      std::vector<generation::VisualContext> visual_ctx;
      if (text_index) {
        text_hits = retrieval::query_text(*text_index, story, cfg_.retrieval, text_provider, &cache);
        for (const auto& h : text_hits) text_ctx.push_back({h, dataset_->find_chunk(h.doc_id)->text});
      }
      if (visual_index) {
        visual_hits = retrieval::query_visual(*visual_index, story, cfg_.retrieval, emb, &cache);
        for (const auto& h : visual_hits) {
          const auto* v = dataset_->find_visual(h.doc_id);
          visual_ctx.push_back({h, v->media_type, util::base64_encode(v->image)});
        }
      }
      auto prompt = generation::build_prompt(tmpl, cfg_.prompts.generation, story, std::move(text_ctx),
                                             std::move(visual_ctx), cfg_.ablation,
                                             cfg_.providers.generator.max_prompt_bytes);
      auto out = generation::generate_acs(prompt, *providers_.generator.provider, cfg_.prompts.generation);
      json truncations = json::array();
      for (const auto& t : prompt.truncations) {
        truncations.push_back({{"doc_id", t.doc_id}, {"modality", t.modality}, {"rank", t.rank}});
      }
      artifacts[i] = {{"story_id", story.id},
                      {"text_hits", hits_json(text_hits)},
                      {"visual_hits", hits_json(visual_hits)},
                      {"prompt_hash", prompt.hash()},
                      {"prompt_bytes", prompt.bytes},
                      {"truncations", std::move(truncations)},
                      {"output", generation::to_json(out)}};
    } catch (const Error& e) {
      throw e.with_context("story '" + story.id + "'");
    }
  });

  json hashes = json::object();
  for (std::size_t i = 0; i < stories.size(); ++i) {
    util::write_json(generation_path(run, stories[i].id), artifacts[i]);
    hashes[stories[i].id] = artifacts[i]["output"]["transcript_hash"];
  }
  double ms = sw.ms();
  update_manifest(id, [&](json& m) {
    m["transcript_hashes"] = hashes;
    m["timing"]["generate_ms"] = ms;
  });
  return {{"command", "generate"}, {"run_id", id}, {"stories", stories.size()}, {"run_dir", run.string()}};
}

json Pipeline::cmd_polish(const std::string& id) {
  RunLock lock(cfg_.run_dir);
  Stopwatch sw;
  fs::path run = run_path(id);
  const auto& stories = dataset_->stories;
  for (const auto& s : stories) {
    if (!fs::exists(generation_path(run, s.id))) missing(generation_path(run, s.id), "generate");
  }
  std::vector<json> artifacts(stories.size());
  reward::PolishProviders pp{*providers_.judge.provider, *providers_.scorer.provider, *providers_.generator.provider};
  util::parallel_for(stories.size(), static_cast<std::size_t>(cfg_.providers.generator.max_parallel), [&](std::size_t i) {
    const auto& story = stories[i];
    try {
      auto gen = generation::generation_output_from_json(util::read_json(generation_path(run, story.id)).at("output"));
      auto outcome = reward::polish(story, gen.acs, cfg_.polish, pp, cfg_.prompts.reward, gen.dialogue);
      artifacts[i] = reward::to_json(outcome);
      artifacts[i]["story_id"] = story.id;
    } catch (const Error& e) {
      throw e.with_context("story '" + story.id + "'");
    }
  });
  json hashes = json::object();
  int polished = 0;
  for (std::size_t i = 0; i < stories.size(); ++i) {
    util::write_json(polish_path(run, stories[i].id), artifacts[i]);
    hashes[stories[i].id] = util::canonical_hash(artifacts[i]["transcript"]);
    polished += artifacts[i]["rounds_executed"].get<int>() > 0;
  }
  double ms = sw.ms();
  update_manifest(id, [&](json& m) {
    m["polish_transcript_hashes"] = hashes;
    m["timing"]["polish_ms"] = ms;
  });
  return {{"command", "polish"}, {"run_id", id}, {"stories", stories.size()}, {"polished", polished}};
}

json Pipeline::cmd_eval_retrieval() {
  std::string id = run_id();
  RunLock lock(cfg_.run_dir);
  Stopwatch sw;
  auto& emb = *providers_.embedder.provider;
  const bool dense = cfg_.retrieval.text_strategy == retrieval::TextStrategy::DenseCosine;
  if (!fs::exists(text_index_path())) missing(text_index_path(), "index");
  auto text_index = retrieval::load_index(text_index_path(), dense ? emb.fingerprint() : "");
  std::optional<retrieval::Index> visual_index;
  if (!dataset_->visuals.empty()) {
    if (!fs::exists(visual_index_path())) missing(visual_index_path(), "index");
    visual_index = retrieval::load_index(visual_index_path(), emb.fingerprint());
  }
  auto& text_provider = dense ? emb : *providers_.lm_scorer.provider;
  retrieval::QueryCache cache;

  std::set<std::string> chunk_ids, visual_ids;
  for (const auto& c : dataset_->chunks) chunk_ids.insert(c.id);
  for (const auto& v : dataset_->visuals) visual_ids.insert(v.id);

  json result{{"k", cfg_.retrieval.k},
              {"text_strategy", retrieval::to_string(cfg_.retrieval.text_strategy)},
              {"visual_variant", retrieval::to_string(cfg_.retrieval.visual_variant)}};
  for (const char* modality : {"text", "visual"}) {
    bool is_text = std::string(modality) == "text";
    if (!is_text && !visual_index) continue;
    const auto& index = is_text ? text_index : *visual_index;
    const auto& ids = is_text ? chunk_ids : visual_ids;
    retrieval::RetrievalConfig full = cfg_.retrieval;
    full.k = index.size();
    std::vector<evaluation::RankingMetrics> metrics;
    json per_story = json::object();
    for (const auto& story : dataset_->stories) {
      auto it = dataset_->relevance.find(story.id);
      if (it == dataset_->relevance.end()) continue;
      std::set<std::string> relevant;
      for (const auto& r : it->second) {
        if (ids.contains(r)) relevant.insert(r);
      }
      if (relevant.empty()) continue;
      auto hits = is_text ? retrieval::query_text(index, story, full, text_provider, &cache)
                          : retrieval::query_visual(index, story, full, emb, &cache);
      std::vector<std::string> ranked;
      for (const auto& h : hits) ranked.push_back(h.doc_id);
      auto m = evaluation::ranking_metrics(ranked, relevant, cfg_.retrieval.k);
      per_story[story.id] = evaluation::to_json(m);
      metrics.push_back(m);
    }
    if (!metrics.empty()) result[modality] = {{"mean", mean_ranking(metrics)}, {"per_story", std::move(per_story)}};
  }
  util::write_json(run_path(id) / "eval" / "retrieval.json", result);
  double ms = sw.ms();
  update_manifest(id, [&](json& m) { m["timing"]["eval_retrieval_ms"] = ms; });
  return {{"command", "eval-retrieval"}, {"run_id", id}, {"result", result}};
}

json Pipeline::cmd_eval_acs(const std::string& id) {
  RunLock lock(cfg_.run_dir);
  Stopwatch sw;
  fs::path run = run_path(id);
  std::map<std::string, std::vector<corpus::AcceptanceCriterion>> generated, polished;
  for (const auto& s : dataset_->stories) {
    if (!fs::exists(generation_path(run, s.id))) missing(generation_path(run, s.id), "generate");
    generated[s.id] = acs_from(util::read_json(generation_path(run, s.id)).at("output").at("acs"));
    if (fs::exists(polish_path(run, s.id))) polished[s.id] = acs_from(util::read_json(polish_path(run, s.id)).at("acs"));
  }
  const bool have_polish = !polished.empty();
  if (have_polish && polished.size() != generated.size()) {
    throw Error(ErrorCode::MissingArtifact, "polish artifacts exist for only some stories; rerun 'polish'");
  }
  auto& emb = *providers_.embedder.provider;
  json result = json::object();

  auto text_section = [&](const std::map<std::string, std::vector<corpus::AcceptanceCriterion>>& acs) {
    std::vector<evaluation::TextMetrics> ms;
    json per_story = json::object();
    for (const auto& [story_id, gt] : dataset_->ground_truth_acs) {
      if (gt.empty()) continue;
      auto m = evaluation::text_metrics(corpus::render(acs.at(story_id)), corpus::render(gt), emb);
      per_story[story_id] = evaluation::to_json(m);
      ms.push_back(m);
    }
    return ms.empty() ? json(nullptr) : json{{"mean", mean_text(ms)}, {"per_story", std::move(per_story)}};
  };

  struct Job {
    const corpus::GroundTruthObjective* objective;
    const corpus::UserStory* story;
  };
  std::vector<Job> jobs;
  for (const auto& [story_id, objs] : dataset_->objectives) {
    for (const auto& o : objs) jobs.push_back({&o, dataset_->find_story(story_id)});
  }
  auto judges = providers_.judge_ptrs();
  auto judge_all = [&](const std::map<std::string, std::vector<corpus::AcceptanceCriterion>>& acs) {
    std::vector<std::vector<evaluation::JudgeVerdict>> per_job(jobs.size());
    util::parallel_for(jobs.size(), static_cast<std::size_t>(cfg_.providers.judges[0].max_parallel), [&](std::size_t i) {
      per_job[i] = evaluation::judge_objective(*jobs[i].objective, acs.at(jobs[i].story->id), *jobs[i].story, judges,
                                               cfg_.prompts.evaluation);
    });
    std::vector<evaluation::JudgeVerdict> verdicts;
    for (auto& v : per_job) verdicts.insert(verdicts.end(), v.begin(), v.end());
    json matrix = json::array();
    for (const auto& v : verdicts) matrix.push_back(evaluation::to_json(v));
    json section{{"verdicts", std::move(matrix)}};
    if (!jobs.empty()) section["accuracy"] = evaluation::to_json(evaluation::accuracy_report(verdicts, dataset_->objectives));
    return section;
  };

  result["text_metrics"] = text_section(generated);
  result["coverage"] = judge_all(generated);
  if (have_polish) {
    result["text_metrics_polished"] = text_section(polished);
    result["coverage_polished"] = judge_all(polished);
    std::vector<json> compares(dataset_->stories.size());
    util::parallel_for(dataset_->stories.size(), static_cast<std::size_t>(cfg_.providers.judges[0].max_parallel),
                       [&](std::size_t i) {
                         const auto& s = dataset_->stories[i];
                         compares[i] = evaluation::to_json(evaluation::compare_polish(
                             s, generated.at(s.id), polished.at(s.id), judges, cfg_.prompts.evaluation));
                       });
    std::size_t unanimous = 0;
    for (const auto& c : compares) unanimous += c["unanimous_better"].get<bool>();
    result["compare"] = {{"per_story", compares},
                         {"unanimous_better", unanimous},
                         {"stories", compares.size()},
                         {"rate", static_cast<double>(unanimous) / static_cast<double>(compares.size())}};
  }
  util::write_json(run / "eval" / "acs.json", result);
  double ms = sw.ms();
  update_manifest(id, [&](json& m) { m["timing"]["eval_acs_ms"] = ms; });
  return {{"command", "eval-acs"}, {"run_id", id}, {"polished", have_polish}};
}

json Pipeline::cmd_report(const std::string& id) {
  RunLock lock(cfg_.run_dir);
  fs::path run = run_path(id);
  fs::path acs_path = run / "eval" / "acs.json";
  if (!fs::exists(acs_path)) missing(acs_path, "eval-acs");
  json manifest = util::read_json(run / "manifest.json");

  json generation = json::object();
  for (const auto& s : dataset_->stories) {
    json g = util::read_json(generation_path(run, s.id));
    generation[s.id] = {{"acs", acs_rendered(acs_from(g["output"]["acs"]))},
                        {"retries", g["output"]["retries"]},
                        {"text_hits", g["text_hits"]},
                        {"visual_hits", g["visual_hits"]},
                        {"truncations", g["truncations"]},
                        {"transcript_hash", g["output"]["transcript_hash"]}};
  }
  json report{{"run_id", id},
              {"dataset_fingerprint", manifest.at("dataset_fingerprint")},
              {"config", manifest.at("config")},
              {"provider_fingerprints", manifest.at("provider_fingerprints")},
              {"generation", std::move(generation)},
              {"evaluation", util::read_json(acs_path)}};
  if (fs::exists(run / "eval" / "retrieval.json")) report["retrieval"] = util::read_json(run / "eval" / "retrieval.json");
  json polish = json::object();
  for (const auto& s : dataset_->stories) {
    if (!fs::exists(polish_path(run, s.id))) continue;
    json p = util::read_json(polish_path(run, s.id));
    polish[s.id] = {{"rounds_executed", p["rounds_executed"]},
                    {"replaced_indices", p["replaced_indices"]},
                    {"global_before", p["global_before"]["level"]},
                    {"global_after", p["global_after"]["level"]},
                    {"acs", acs_rendered(acs_from(p["acs"]))}};
  }
  if (!polish.empty()) report["polish"] = std::move(polish);

  util::write_text(run / "report.json", report.dump(2) + "\n");
  util::write_text(run / "report.txt", render_report_text(report));
  return {{"command", "report"},
          {"run_id", id},
          {"report", (run / "report.json").string()},
          {"summary", (run / "report.txt").string()}};
}

json Pipeline::cmd_all() {
  std::string id = run_id();
  json steps = json::array();
  steps.push_back(cmd_index());
  steps.push_back(cmd_generate());
  steps.push_back(cmd_polish(id));
  if (!dataset_->relevance.empty()) steps.push_back(cmd_eval_retrieval());
  steps.push_back(cmd_eval_acs(id));
  steps.push_back(cmd_report(id));
  return {{"command", "all"},
          {"run_id", id},
          {"report", (run_path(id) / "report.json").string()},
          {"calls", providers_.call_counts()},
          {"cache", providers_.cache_stats()}};
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_report_text(const json& report) {
  std::string out = "run " + report.value("run_id", "") + "\n";
  const auto& cfg = report.at("config");
  out += "template " + cfg["generation"]["template"].get<std::string>() + ", ablation " +
         cfg["generation"]["ablation"].get<std::string>() + ", text " +
         cfg["retrieval"]["text_strategy"].get<std::string>() + ", visual " +
         cfg["retrieval"]["visual_variant"].get<std::string>() + ", k " + std::to_string(cfg["retrieval"]["k"].get<int>()) +
         "\n\n";

  if (report.contains("retrieval")) {
    out += "retrieval\n";
    out += "  " + pad("modality", 10) + pad("P@k", 9) + pad("R@k", 9) + pad("F1@k", 9) + pad("nDCG@k", 9) +
           pad("Hit@k", 9) + "MAP\n";
    for (const char* m : {"text", "visual"}) {
      if (!report["retrieval"].contains(m)) continue;
      const auto& r = report["retrieval"][m]["mean"];
      out += "  " + pad(m, 10) + pad(fixed(r["precision"]), 9) + pad(fixed(r["recall"]), 9) + pad(fixed(r["f1"]), 9) +
             pad(fixed(r["ndcg"]), 9) + pad(fixed(r["hit_rate"]), 9) + fixed(r["map"]) + "\n";
    }
    out += "\n";
  }

  const auto& ev = report.at("evaluation");
  auto text_row = [&](const char* label, const json& t) {
    if (t.is_null()) return;
    const auto& m = t["mean"];
    out += "  " + pad(label, 10) + pad(fixed(m["semantic_sim"]), 9) + pad(fixed(m["rouge1"]["f1"]), 9) +
           pad(fixed(m["rouge2"]["f1"]), 9) + pad(fixed(m["rougeL"]["f1"]), 9) + pad(fixed(m["bleu"]), 9) +
           fixed(m["levenshtein"], 1) + "\n";
  };
  out += "text metrics\n";
  out += "  " + pad("set", 10) + pad("SemSim", 9) + pad("R-1", 9) + pad("R-2", 9) + pad("R-L", 9) + pad("BLEU", 9) +
         "Lev\n";
  text_row("generated", ev.value("text_metrics", json(nullptr)));
  text_row("polished", ev.value("text_metrics_polished", json(nullptr)));
  out += "\n";

  auto acc_row = [&](const char* label, const json& c) {
    if (!c.is_object() || !c.contains("accuracy")) return;
    const auto& a = c["accuracy"];
    out += "  " + pad(label, 10) + pad(fixed(a["hit_case"]), 10) + pad(fixed(a["cor_case"]), 10) +
           pad(fixed(a["hit_point"]), 10) + fixed(a["cor_point"]) + "\n";
  };
  out += "coverage (three judges, unanimous)\n";
  out += "  " + pad("set", 10) + pad("Hit(C)", 10) + pad("Cor(C)", 10) + pad("Hit(P)", 10) + "Cor(P)\n";
  acc_row("generated", ev.value("coverage", json(nullptr)));
  acc_row("polished", ev.value("coverage_polished", json(nullptr)));

  if (report.contains("polish")) {
    int polished = 0;
    for (const auto& [id, p] : report["polish"].items()) polished += p["rounds_executed"].get<int>() > 0;
    out += "\npolish: " + std::to_string(polished) + " of " + std::to_string(report["polish"].size()) +
           " stories below the threshold were revised\n";
  }
  if (ev.contains("compare")) {
    out += "comparison: polished set unanimously preferred for " +
           std::to_string(ev["compare"]["unanimous_better"].get<int>()) + " of " +
           std::to_string(ev["compare"]["stories"].get<int>()) + " stories (judge positions alternate)\n";
  }
  return out;
}

}  // namespace acgen::pipeline
