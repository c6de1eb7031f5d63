#include <gtest/gtest.h>

#include "acgen/corpus/gherkin.hpp"
#include "acgen/generation/generation.hpp"
#include "acgen/util/encoding.hpp"
#include "expect_error.hpp"
#include "support.hpp"

using namespace acgen;
using namespace acgen::generation;
using providers::ImagePart;
using providers::TextPart;

namespace {

corpus::UserStory story() {
  return {"S1", "Reset password", "As a member, I want to reset my password, so that I can sign in again.",
          {"The link expires after one hour."}};
}

std::vector<TextContext> texts(std::size_t n) {
  std::vector<TextContext> out;
  for (std::size_t r = n; r >= 1; --r) {  // reversed on purpose
    out.push_back({{"c" + std::to_string(r), 1.0 - 0.1 * static_cast<double>(r), r}, "chunk body " + std::to_string(r)});
  }
  return out;
}

std::vector<VisualContext> images(std::size_t n) {
  std::vector<VisualContext> out;
  for (std::size_t r = 1; r <= n; ++r) {
    out.push_back({{"v" + std::to_string(r), 0.5, r}, "image/png", util::base64_encode(support::tiny_png(std::to_string(r)))});
  }
  return out;
}

std::vector<providers::Part> user_parts(const AssembledPrompt& p) {
  std::vector<providers::Part> parts;
  for (const auto& m : p.request.messages) {
    if (m.role == providers::Role::User) parts = m.parts;  // the target message is last
  }
  return parts;
}

std::string all_text(const AssembledPrompt& p) {
  std::string s;
  for (const auto& m : p.request.messages) s += m.text_content() + "\n";
  return s;
}

PromptTemplate apeer() { return PromptTemplate::make(TemplateKind::Apeer, PromptConfig::defaults()); }

}  // namespace

TEST(BuildPrompt, FullModeHasContextInRankOrder) {
  auto cfg = PromptConfig::defaults();
  auto p = build_prompt(apeer(), cfg, story(), texts(5), images(5), Ablation::Full);
  EXPECT_EQ(p.text_ids, (std::vector<std::string>{"c1", "c2", "c3", "c4", "c5"}));
  EXPECT_EQ(p.visual_ids, (std::vector<std::string>{"v1", "v2", "v3", "v4", "v5"}));
  std::size_t images_seen = 0;
  for (const auto& part : user_parts(p)) {
    if (const auto* img = std::get_if<ImagePart>(&part)) {
      ++images_seen;
      EXPECT_EQ(img->base64, util::base64_encode(support::tiny_png(std::to_string(images_seen))));
    }
  }
  EXPECT_EQ(images_seen, 5u);
  std::string text = all_text(p);
  std::size_t last = 0;
  for (int r = 1; r <= 5; ++r) {
    auto at = text.find("chunk body " + std::to_string(r));
    ASSERT_NE(at, std::string::npos);
    EXPECT_GT(at, last);
    last = at;
  }
  EXPECT_EQ(p.request.purpose, "generate");
  EXPECT_EQ(p.request.metadata.at("story_id"), "S1");
  EXPECT_EQ(p.bytes, prompt_bytes(p.request));
}

TEST(BuildPrompt, ApeerSectionOrder) {
  auto cfg = PromptConfig::defaults();
  auto p = build_prompt(apeer(), cfg, story(), texts(1), {}, Ablation::NoVrag);
  ASSERT_EQ(p.request.messages.size(), 2u);
  EXPECT_EQ(p.request.messages[0].role, providers::Role::System);
  EXPECT_EQ(p.request.messages[0].text_content(), cfg.role);
  std::string user = p.request.messages[1].text_content();
  auto task = user.find(cfg.task), story_at = user.find(story().narrative), knowledge = user.find("chunk body 1"),
       format = user.find(cfg.output_format);
  ASSERT_NE(task, std::string::npos);
  ASSERT_NE(format, std::string::npos);
  EXPECT_LT(task, story_at);
  EXPECT_LT(story_at, knowledge);
  EXPECT_LT(knowledge, format);
}

TEST(BuildPrompt, NoRagHasStoryAndInstructionsOnly) {
  auto cfg = PromptConfig::defaults();
  auto p = build_prompt(apeer(), cfg, story(), {}, {}, Ablation::NoRag);
  std::string text = all_text(p);
  EXPECT_NE(text.find(story().narrative), std::string::npos);
  EXPECT_EQ(text.find(cfg.knowledge_header), std::string::npos);
  EXPECT_EQ(text.find(cfg.visual_header), std::string::npos);
  EXPECT_TRUE(p.text_ids.empty());
  for (const auto& part : user_parts(p)) EXPECT_TRUE(std::holds_alternative<TextPart>(part));
}

TEST(BuildPrompt, AblationViolations) {
  auto cfg = PromptConfig::defaults();
  EXPECT_ERROR_CODE(build_prompt(apeer(), cfg, story(), texts(1), {}, Ablation::NoRag), AblationViolation);
  EXPECT_ERROR_CODE(build_prompt(apeer(), cfg, story(), {}, images(1), Ablation::NoVrag), AblationViolation);
}

TEST(BuildPrompt, Deterministic) {
  auto cfg = PromptConfig::defaults();
  auto a = build_prompt(apeer(), cfg, story(), texts(3), images(2), Ablation::Full);
  auto b = build_prompt(apeer(), cfg, story(), texts(3), images(2), Ablation::Full);
  EXPECT_EQ(providers::to_json(a.request).dump(), providers::to_json(b.request).dump());
  EXPECT_EQ(a.hash(), b.hash());
}

TEST(BuildPrompt, TruncationDropsHighestRankImageFirst) {
  auto cfg = PromptConfig::defaults();
  auto full = build_prompt(apeer(), cfg, story(), texts(3), images(3), Ablation::Full);
  auto p = build_prompt(apeer(), cfg, story(), texts(3), images(3), Ablation::Full, full.bytes - 1);
  ASSERT_EQ(p.truncations.size(), 1u);
  EXPECT_EQ(p.truncations[0].doc_id, "v3");
  EXPECT_EQ(p.truncations[0].modality, "visual");
  EXPECT_LE(p.bytes, full.bytes - 1);
  EXPECT_TRUE(p.request.metadata.contains("truncated"));

  auto bare = build_prompt(apeer(), cfg, story(), {}, {}, Ablation::Full);
  auto tight = build_prompt(apeer(), cfg, story(), texts(3), images(3), Ablation::Full, bare.bytes);
  EXPECT_EQ(tight.truncations.size(), 6u);
  EXPECT_EQ(tight.truncations[1].doc_id, "c3");
  EXPECT_ERROR_CODE(build_prompt(apeer(), cfg, story(), texts(1), {}, Ablation::Full, 10), OversizePrompt);
}

TEST(PromptTemplate, UrialNeedsExemplarsAndApeerHasNone) {
  auto cfg = PromptConfig::defaults();
  auto urial = PromptTemplate::make(TemplateKind::Urial, cfg);
  EXPECT_EQ(urial.exemplars.size(), cfg.exemplars.size());
  EXPECT_TRUE(apeer().exemplars.empty());
  PromptTemplate bad{TemplateKind::Urial, {}};
  EXPECT_ERROR_CODE(bad.validate(), ConfigError);
  PromptTemplate bad2{TemplateKind::Apeer, cfg.exemplars};
  EXPECT_ERROR_CODE(bad2.validate(), ConfigError);
}

TEST(PromptTemplate, UrialPrependsExemplarPairs) {
  auto cfg = PromptConfig::defaults();
  auto p = build_prompt(PromptTemplate::make(TemplateKind::Urial, cfg), cfg, story(), {}, {}, Ablation::NoRag);
  const auto& m = p.request.messages;
  ASSERT_EQ(m.size(), 2 + 2 * cfg.exemplars.size());
  EXPECT_EQ(m[0].text_content(), cfg.urial_preamble);
  EXPECT_EQ(m[1].role, providers::Role::User);
  EXPECT_NE(m[1].text_content().find(cfg.exemplars[0].story), std::string::npos);
  EXPECT_EQ(m[2].role, providers::Role::Assistant);
  EXPECT_EQ(m[2].text_content(), cfg.exemplars[0].acs);
  EXPECT_NE(m.back().text_content().find(story().narrative), std::string::npos);
  for (const auto& ex : cfg.exemplars) EXPECT_NO_THROW(corpus::parse_gherkin(ex.acs));
}

TEST(PromptConfig, JsonOverlaysDefaults) {
  auto cfg = prompt_config_from_json({{"role", "custom role"}});
  EXPECT_EQ(cfg.role, "custom role");
  EXPECT_EQ(cfg.task, PromptConfig::defaults().task);
  EXPECT_EQ(prompt_config_from_json(to_json(PromptConfig::defaults())), PromptConfig::defaults());
}

TEST(GenerateAcs, ParsesAndAtomicizes) {
  auto gen = support::mock_stack("gen");
  gen.mock->script_chat("generate", {"GIVEN a\nWHEN b\nTHEN c\n\nGIVEN d\nWHEN e\nTHEN f\nAND g\n\nGIVEN h\nWHEN i\nTHEN j"});
  auto p = build_prompt(apeer(), PromptConfig::defaults(), story(), {}, {}, Ablation::NoRag);
  auto out = generate_acs(p, *gen, PromptConfig::defaults());
  EXPECT_EQ(out.acs.size(), 4u);
  EXPECT_EQ(out.retries, 0u);
  for (const auto& ac : out.acs) EXPECT_TRUE(ac.is_atomic());
  EXPECT_EQ(out.dialogue.back().role, providers::Role::Assistant);
  EXPECT_FALSE(out.transcript_hash.empty());
}

TEST(GenerateAcs, CorrectiveRetryContinuesDialogue) {
  auto gen = support::mock_stack("gen");
  gen.mock->script_chat("generate", {"no criteria", "GIVEN a WHEN b THEN c"});
  auto cfg = PromptConfig::defaults();
  auto p = build_prompt(apeer(), cfg, story(), {}, {}, Ablation::NoRag);
  auto out = generate_acs(p, *gen, cfg);
  EXPECT_EQ(out.acs.size(), 1u);
  EXPECT_EQ(out.retries, 1u);
  auto calls = gen.log->calls();
  ASSERT_EQ(calls.size(), 2u);
  auto second = providers::chat_request_from_json(calls[1].request);
  EXPECT_EQ(second.messages.size(), p.request.messages.size() + 2);
  EXPECT_EQ(second.messages.back().text_content(), cfg.corrective);
}

TEST(GenerateAcs, TwoMalformedRepliesFail) {
  auto gen = support::mock_stack("gen");
  gen.mock->script_chat("generate", {"nothing", "still nothing"});
  auto p = build_prompt(apeer(), PromptConfig::defaults(), story(), {}, {}, Ablation::NoRag);
  try {
    generate_acs(p, *gen, PromptConfig::defaults());
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnparseableOutput);
    EXPECT_EQ(e.details().at("replies").size(), 2u);
  }
}

TEST(GenerateAcs, JsonRoundTrip) {
  auto gen = support::mock_stack("gen");
  gen.mock->script_chat("generate", {"GIVEN a WHEN b THEN c"});
  auto p = build_prompt(apeer(), PromptConfig::defaults(), story(), {}, {}, Ablation::NoRag);
  auto out = generate_acs(p, *gen, PromptConfig::defaults());
  auto back = generation_output_from_json(to_json(out));
  EXPECT_EQ(back.acs, out.acs);
  EXPECT_EQ(back.dialogue, out.dialogue);
  EXPECT_EQ(back.transcript_hash, out.transcript_hash);
}
