// acgen: acceptance-criteria generation pipeline.
//
//   acgen index          --config pipeline.json
//   acgen generate       --config pipeline.json [--ablation NoRag]
//   acgen polish         --config pipeline.json [--run <id>]
//   acgen eval-retrieval --config pipeline.json
//   acgen eval-acs       --config pipeline.json [--run <id>]
//   acgen report         --config pipeline.json [--run <id>]
//   acgen all            --config pipeline.json
//   acgen prompts        (prints the default prompt set)
//
// Results go to stdout as JSON; failures go to stderr as {"error", "message", "details"}.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "acgen/error.hpp"
#include "acgen/pipeline/config.hpp"
#include "acgen/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using acgen::Error;
using acgen::ErrorCode;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> dataset, run_dir, cache_dir, cache_mode;
  std::optional<std::size_t> k;
  std::optional<std::string> text_strategy, visual_variant, template_kind, ablation, local_scorer;
  std::optional<int> threshold, max_rounds;
  std::string run;
};

void add_common(CLI::App* cmd, Overrides& o, bool needs_run) {
  cmd->add_option("-c,--config", o.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--dataset", o.dataset, "dataset file");
  cmd->add_option("--run-dir", o.run_dir, "run directory");
  cmd->add_option("--cache-dir", o.cache_dir, "replay cache directory");
  cmd->add_option("--cache-mode", o.cache_mode, "off|auto|record|replay");
  cmd->add_option("-k,--k", o.k, "retrieval depth");
  cmd->add_option("--text-strategy", o.text_strategy, "DenseCosine|LmScored");
  cmd->add_option("--visual-variant", o.visual_variant, "HtmlFull|HtmlPruned|DirectEmbedding");
  cmd->add_option("--template", o.template_kind, "Apeer|Urial");
  cmd->add_option("--ablation", o.ablation, "Full|NoVrag|NoRag");
  cmd->add_option("--threshold", o.threshold, "polish threshold (1-5)");
  cmd->add_option("--max-rounds", o.max_rounds, "polish rounds");
  cmd->add_option("--local-scorer", o.local_scorer, "Verifier|Ur3");
  if (needs_run) cmd->add_option("--run", o.run, "run id (default: derived from the config)");
}

acgen::pipeline::PipelineConfig resolve(const Overrides& o) {
  using namespace acgen;
  auto cfg = pipeline::load_config(o.config);
  auto abs = [](const std::string& p) { return fs::absolute(p).lexically_normal(); };
  if (o.dataset) cfg.dataset = abs(*o.dataset);
  if (o.run_dir) cfg.run_dir = abs(*o.run_dir);
  if (o.cache_dir) cfg.cache_dir = abs(*o.cache_dir);
  if (o.cache_mode) cfg.cache_mode = providers::cache_mode_from_string(*o.cache_mode);
  if (o.k) cfg.retrieval.k = *o.k;
  if (o.text_strategy) cfg.retrieval.text_strategy = retrieval::text_strategy_from_string(*o.text_strategy);
  if (o.visual_variant) cfg.retrieval.visual_variant = retrieval::visual_variant_from_string(*o.visual_variant);
  if (o.template_kind) cfg.template_kind = generation::template_kind_from_string(*o.template_kind);
  if (o.ablation) cfg.ablation = generation::ablation_from_string(*o.ablation);
  if (o.threshold) cfg.polish.threshold = *o.threshold;
  if (o.max_rounds) cfg.polish.max_rounds = *o.max_rounds;
  if (o.local_scorer) cfg.polish.local_scorer = reward::local_scorer_from_string(*o.local_scorer);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate and evaluate acceptance criteria for user stories"};
  app.require_subcommand(1);
  Overrides o;

  struct Command {
    const char* name;
    const char* help;
    bool needs_run;
  };
  const Command commands[] = {
      {"index", "build the text and visual indices", false},
      {"generate", "retrieve context and generate criteria for every story", false},
      {"polish", "score and polish the generated criteria of a run", true},
      {"eval-retrieval", "ranking metrics against the relevance labels", false},
      {"eval-acs", "text metrics, judge coverage and polish comparison for a run", true},
      {"report", "write report.json and report.txt for a run", true},
      {"all", "run every stage in order", false},
  };
  for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help), o, c.needs_run);
  auto* prompts = app.add_subcommand("prompts", "print the default prompts as JSON");

  CLI11_PARSE(app, argc, argv);

  if (prompts->parsed()) {
    std::cout << acgen::pipeline::to_json(acgen::pipeline::Prompts{}).dump(2) << "\n";
    return 0;
  }

  try {
    acgen::pipeline::Pipeline p(resolve(o));
    std::string run = o.run.empty() ? p.run_id() : o.run;
    std::string name = app.get_subcommands().front()->get_name();
    json out;
    if (name == "index") out = p.cmd_index();
    else if (name == "generate") out = p.cmd_generate();
    else if (name == "polish") out = p.cmd_polish(run);
    else if (name == "eval-retrieval") out = p.cmd_eval_retrieval();
    else if (name == "eval-acs") out = p.cmd_eval_acs(run);
    else if (name == "report") out = p.cmd_report(run);
    else out = p.cmd_all();
    std::cout << out.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << e.to_json().dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << Error(ErrorCode::Io, e.what()).to_json().dump() << "\n";
    return 1;
  }
}
