#include "acgen/generation/generation.hpp"

#include <algorithm>

#include "acgen/corpus/dataset.hpp"
#include "acgen/corpus/gherkin.hpp"
#include "acgen/error.hpp"
#include "acgen/util/encoding.hpp"

namespace acgen::generation {

using nlohmann::json;
using providers::ImagePart;
using providers::Message;
using providers::Role;
using providers::TextPart;

std::string to_string(TemplateKind k) { return k == TemplateKind::Apeer ? "Apeer" : "Urial"; }

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "Full";
    case Ablation::NoVrag: return "NoVrag";
    case Ablation::NoRag: return "NoRag";
  }
  return "?";
}

TemplateKind template_kind_from_string(const std::string& s) {
  if (s == "Apeer") return TemplateKind::Apeer;
  if (s == "Urial") return TemplateKind::Urial;
  throw Error(ErrorCode::ConfigError, "unknown template kind '" + s + "'");
}

Ablation ablation_from_string(const std::string& s) {
  if (s == "Full") return Ablation::Full;
  if (s == "NoVrag") return Ablation::NoVrag;
  if (s == "NoRag") return Ablation::NoRag;
  throw Error(ErrorCode::ConfigError, "unknown ablation '" + s + "'");
}

PromptConfig PromptConfig::defaults() {
  PromptConfig c;
  c.role =
      "You are a requirements engineer who writes acceptance criteria for agile software teams. "
      "You know the product domain and its user interface.";
  c.task =
      "Write the acceptance criteria for the user story below. Cover the main flow, alternative flows and "
      "error handling. Each criterion must describe one observable, testable outcome.";
  c.knowledge_header =
      "Domain knowledge retrieved for this story, most relevant first. Use it where it applies and ignore "
      "the rest.";
  c.visual_header = "Screens of the product retrieved for this story, most relevant first.";
  c.output_format =
      "Write every criterion in Gherkin form. Start each criterion on a new line with GIVEN, then a line "
      "with WHEN and a line with THEN. Put additional clauses on their own lines starting with AND. "
      "Write exactly one THEN outcome per criterion and separate criteria with a blank line. Output the "
      "criteria only.";
  c.corrective =
      "Your reply could not be read as acceptance criteria. Rewrite it using only GIVEN, WHEN, THEN and "
      "AND lines, one criterion per GIVEN block, and no other text.";
  c.urial_preamble =
      "The following is a conversation between a product team and a requirements engineer. The engineer "
      "turns each user story into precise, atomic acceptance criteria in Gherkin form.";
  c.exemplars = {
      {"Title: Reset password\n"
       "As a registered user, I want to reset my password by email, so that I can sign in again when I forget it.",
       "GIVEN a registered user on the sign-in page\n"
       "WHEN the user requests a password reset for their email address\n"
       "THEN a reset link is sent to that address\n\n"
       "GIVEN a user holding a reset link older than 24 hours\n"
       "WHEN the user opens the link\n"
       "THEN the page explains that the link has expired"},
      {"Title: Filter orders\n"
       "As a shop manager, I want to filter orders by status, so that I can focus on the ones that need action.",
       "GIVEN a shop manager viewing the order list\n"
       "WHEN the manager selects the status \"pending\"\n"
       "THEN only pending orders are listed\n\n"
       "GIVEN a shop manager with an active status filter\n"
       "WHEN the manager clears the filter\n"
       "THEN all orders are listed again"},
  };
  return c;
}

json to_json(const PromptConfig& c) {
  json ex = json::array();
  for (const auto& e : c.exemplars) ex.push_back({{"story", e.story}, {"acs", e.acs}});
  return {{"role", c.role},
          {"task", c.task},
          {"knowledge_header", c.knowledge_header},
          {"visual_header", c.visual_header},
          {"output_format", c.output_format},
          {"corrective", c.corrective},
          {"urial_preamble", c.urial_preamble},
          {"exemplars", std::move(ex)}};
}

PromptConfig prompt_config_from_json(const json& j) {
  PromptConfig c = PromptConfig::defaults();
  try {
    c.role = j.value("role", c.role);
    c.task = j.value("task", c.task);
    c.knowledge_header = j.value("knowledge_header", c.knowledge_header);
    c.visual_header = j.value("visual_header", c.visual_header);
    c.output_format = j.value("output_format", c.output_format);
    c.corrective = j.value("corrective", c.corrective);
    c.urial_preamble = j.value("urial_preamble", c.urial_preamble);
    if (j.contains("exemplars")) {
      c.exemplars.clear();
      for (const auto& e : j.at("exemplars")) {
        c.exemplars.push_back({e.at("story").get<std::string>(), e.at("acs").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad generation prompts: ") + e.what());
  }
  return c;
}

void PromptTemplate::validate() const {
  if (kind == TemplateKind::Apeer && !exemplars.empty()) {
    throw Error(ErrorCode::ConfigError, "the Apeer template takes no exemplars");
  }
  if (kind == TemplateKind::Urial && exemplars.empty()) {
    throw Error(ErrorCode::ConfigError, "the Urial template needs at least one exemplar");
  }
}

PromptTemplate PromptTemplate::make(TemplateKind kind, const PromptConfig& config) {
  PromptTemplate t{kind, kind == TemplateKind::Urial ? config.exemplars : std::vector<Exemplar>{}};
  t.validate();
  return t;
}

std::string story_block(const corpus::UserStory& story) {
  std::string out = "Title: " + story.title + "\n" + story.narrative;
  if (!story.extensions.empty()) {
    out += "\nDetails:";
    for (const auto& e : story.extensions) out += "\n- " + e;
  }
  return out;
}

std::size_t prompt_bytes(const providers::ChatRequest& request) {
  std::size_t n = 0;
  for (const auto& m : request.messages) {
    for (const auto& p : m.parts) {
      if (const auto* t = std::get_if<TextPart>(&p)) n += t->text.size();
      else n += std::get<ImagePart>(p).base64.size();
    }
  }
  return n;
}

std::string AssembledPrompt::hash() const { return util::canonical_hash(providers::to_json(request)); }

namespace {

AssembledPrompt assemble(const PromptTemplate& tmpl, const PromptConfig& config, const corpus::UserStory& story,
                         const std::vector<TextContext>& text, const std::vector<VisualContext>& visual) {
  AssembledPrompt out;
  auto& messages = out.request.messages;
  if (tmpl.kind == TemplateKind::Apeer) {
    messages.push_back(Message::text(Role::System, config.role));
  } else {
    messages.push_back(Message::text(Role::System, config.urial_preamble));
    for (const auto& ex : tmpl.exemplars) {
      messages.push_back(Message::text(Role::User, "User story:\n" + ex.story));
      messages.push_back(Message::text(Role::Assistant, ex.acs));
    }
  }

  Message target{Role::User, {}};
  std::string head;
  if (tmpl.kind == TemplateKind::Urial) head += config.role + "\n\n";
  head += "## Task\n" + config.task + "\n\n## User story\n" + story_block(story);
  target.parts.emplace_back(TextPart{head});
  if (!text.empty()) {
    std::string block = "## Ground knowledge\n" + config.knowledge_header;
    for (const auto& c : text) {
      block += "\n\n[" + std::to_string(c.hit.rank) + "] " + c.hit.doc_id + "\n" + c.text;
      out.text_ids.push_back(c.hit.doc_id);
    }
    target.parts.emplace_back(TextPart{block});
  }
  if (!visual.empty()) {
    target.parts.emplace_back(TextPart{"## Screens\n" + config.visual_header});
    for (const auto& v : visual) {
      target.parts.emplace_back(TextPart{"[Screen " + std::to_string(v.hit.rank) + "] " + v.hit.doc_id});
      target.parts.emplace_back(ImagePart{v.base64, v.media_type});
      out.visual_ids.push_back(v.hit.doc_id);
    }
  }
  target.parts.emplace_back(TextPart{"## Output format\n" + config.output_format});
  messages.push_back(std::move(target));

  out.request.purpose = "generate";
  out.request.metadata = {{"story_id", story.id},
                          {"template", to_string(tmpl.kind)},
                          {"text_ids", out.text_ids},
                          {"visual_ids", out.visual_ids}};
  out.bytes = prompt_bytes(out.request);
  return out;
}

bool by_rank(const retrieval::RetrievalHit& a, const retrieval::RetrievalHit& b) {
  if (a.rank != b.rank) return a.rank < b.rank;
  return a.doc_id < b.doc_id;
}

}  // namespace

AssembledPrompt build_prompt(const PromptTemplate& tmpl, const PromptConfig& config, const corpus::UserStory& story,
                             std::vector<TextContext> text, std::vector<VisualContext> visual, Ablation ablation,
                             std::size_t max_prompt_bytes) {
  tmpl.validate();
  if (ablation == Ablation::NoRag && (!text.empty() || !visual.empty())) {
    throw Error(ErrorCode::AblationViolation, "retrieved context supplied in NoRag mode",
                {{"text_hits", text.size()}, {"visual_hits", visual.size()}});
  }
  if (ablation == Ablation::NoVrag && !visual.empty()) {
    throw Error(ErrorCode::AblationViolation, "visual context supplied in NoVrag mode",
                {{"visual_hits", visual.size()}});
  }
  std::stable_sort(text.begin(), text.end(), [](const auto& a, const auto& b) { return by_rank(a.hit, b.hit); });
  std::stable_sort(visual.begin(), visual.end(), [](const auto& a, const auto& b) { return by_rank(a.hit, b.hit); });

  std::vector<Truncation> dropped;
  for (;;) {
    AssembledPrompt p = assemble(tmpl, config, story, text, visual);
    if (max_prompt_bytes == 0 || p.bytes <= max_prompt_bytes) {
      p.truncations = std::move(dropped);
      if (!p.truncations.empty()) {
        json log = json::array();
        for (const auto& t : p.truncations) log.push_back({{"doc_id", t.doc_id}, {"modality", t.modality}, {"rank", t.rank}});
        p.request.metadata["truncated"] = std::move(log);
      }
      return p;
    }
    if (text.empty() && visual.empty()) {
      throw Error(ErrorCode::OversizePrompt,
                  "prompt for story '" + story.id + "' needs " + std::to_string(p.bytes) + " bytes, limit is " +
                      std::to_string(max_prompt_bytes),
                  {{"bytes", p.bytes}, {"limit", max_prompt_bytes}, {"dropped", dropped.size()}});
    }
    std::size_t text_rank = text.empty() ? 0 : text.back().hit.rank;
    std::size_t visual_rank = visual.empty() ? 0 : visual.back().hit.rank;
    if (!visual.empty() && visual_rank >= text_rank) {
      dropped.push_back({visual.back().hit.doc_id, "visual", visual_rank});
      visual.pop_back();
    } else {
      dropped.push_back({text.back().hit.doc_id, "text", text_rank});
      text.pop_back();
    }
  }
}

namespace {

std::vector<corpus::AcceptanceCriterion> try_parse(const std::string& reply) {
  try {
    return corpus::atomicize_all(corpus::parse_gherkin(reply));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MissingKeyword || e.code() == ErrorCode::EmptyInput) return {};
    throw;
  }
}

json dialogue_json(const std::vector<Message>& dialogue) {
  providers::ChatRequest r;
  r.messages = dialogue;
  return providers::to_json(r).at("messages");
}

}  // namespace

GenerationOutput generate_acs(const AssembledPrompt& prompt, providers::Provider& provider,
                              const PromptConfig& config) {
  providers::ChatRequest request = prompt.request;
  std::vector<std::string> replies;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply = provider.chat(request).text;
    replies.push_back(reply);
    request.messages.push_back(Message::text(Role::Assistant, reply));
    auto acs = try_parse(reply);
    if (!acs.empty()) {
      GenerationOutput out;
      out.raw = reply;
      out.acs = std::move(acs);
      out.retries = static_cast<std::size_t>(attempt);
      out.dialogue = request.messages;
      out.transcript = {{"request", providers::to_json(prompt.request)},
                        {"replies", replies},
                        {"dialogue", dialogue_json(out.dialogue)}};
      out.transcript_hash = util::canonical_hash(out.transcript);
      return out;
    }
    request.messages.push_back(Message::text(Role::User, config.corrective));
    request.metadata["attempt"] = attempt + 2;
  }
  throw Error(ErrorCode::UnparseableOutput, "no acceptance criteria could be parsed after a corrective retry",
              {{"replies", replies}, {"story_id", prompt.request.metadata.value("story_id", "")}});
}

json to_json(const GenerationOutput& out) {
  json acs = json::array();
  for (const auto& ac : out.acs) acs.push_back(corpus::to_json(ac));
  return {{"raw", out.raw},
          {"acs", std::move(acs)},
          {"retries", out.retries},
          {"dialogue", dialogue_json(out.dialogue)},
          {"transcript", out.transcript},
          {"transcript_hash", out.transcript_hash}};
}

GenerationOutput generation_output_from_json(const json& j) {
  try {
    GenerationOutput out;
    out.raw = j.at("raw").get<std::string>();
    for (const auto& ac : j.at("acs")) out.acs.push_back(corpus::criterion_from_json(ac));
    out.retries = j.at("retries").get<std::size_t>();
    out.dialogue = providers::chat_request_from_json({{"messages", j.at("dialogue")}}).messages;
    out.transcript = j.at("transcript");
    out.transcript_hash = j.at("transcript_hash").get<std::string>();
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed generation artifact: ") + e.what());
  }
}

}  // namespace acgen::generation
