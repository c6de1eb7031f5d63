#include <cmath>

#include <gtest/gtest.h>

#include "acgen/reward/reward.hpp"
#include "expect_error.hpp"
#include "support.hpp"

using namespace acgen;
using namespace acgen::reward;
using corpus::AcceptanceCriterion;

namespace {

corpus::UserStory story() { return {"S", "Enrol", "As a learner, I want to enrol, so that I can study.", {}}; }

AcceptanceCriterion ac(const std::string& outcome) { return {{"a learner"}, {"the learner enrols"}, {outcome}, ""}; }

struct Stacks {
  support::MockStack judge = support::mock_stack("judge");
  support::MockStack scorer = support::mock_stack("scorer");
  support::MockStack gen = support::mock_stack("generator");
  PolishProviders providers() { return {*judge, *scorer, *gen}; }
};

void yes_by_outcome(support::MockStack& s, std::map<std::string, double> p) {
  s.mock->set_next_token([p](const std::string& prompt) {
    for (const auto& [k, v] : p) {
      if (prompt.find(k) != std::string::npos) {
        return std::vector<providers::TokenLogprob>{{"yes", std::log(v)}, {"no", std::log(1 - v)}};
      }
    }
    return std::vector<providers::TokenLogprob>{{"yes", -1}, {"no", -1}};
  });
}

}  // namespace

TEST(ParseScore, TaggedLine) {
  EXPECT_EQ(parse_score("Good.\nScore: 5"), 5);
  EXPECT_EQ(parse_score("score = 3/5"), 3);
  EXPECT_EQ(parse_score("Score: 4 out of 5"), 4);
  EXPECT_EQ(parse_score("Score: 2\nlater\nFinal score: 4"), 4);
  EXPECT_EQ(parse_score("Score: 7"), std::nullopt);
  EXPECT_EQ(parse_score("looks great"), std::nullopt);
}

TEST(GlobalScore, ScriptedLevel) {
  Stacks s;
  s.judge.mock->script_chat("global_score", {"relevance: fine\nScore: 5"});
  auto g = global_score(story(), {ac("done")}, *s.judge, RewardPrompts::defaults());
  EXPECT_EQ(g.level, 5);
  EXPECT_EQ(g.dimension_notes.size(), kDimensions.size());
  EXPECT_EQ(g.dimension_notes[0], "fine");
}

TEST(GlobalScore, OutOfRangeTwiceIsUnparseable) {
  Stacks s;
  s.judge.mock->script_chat("global_score", {"Score: 7", "Score: 7"});
  EXPECT_ERROR_CODE(global_score(story(), {ac("done")}, *s.judge, RewardPrompts::defaults()), UnparseableScore);
  EXPECT_EQ(s.judge.log->count(), 2u);
}

TEST(GlobalScore, ReplayedTranscriptGivesSameScore) {
  support::TempDir dir;
  auto mock = std::make_shared<providers::MockBackend>();
  mock->script_chat("global_score", {"Score: 4"});
  providers::ProviderConfig cfg;
  cfg.name = "judge";
  auto rec = std::make_shared<providers::ReplayTransport>(mock, dir.path(), providers::CacheMode::Auto);
  providers::Provider recording(cfg, rec);
  auto first = global_score(story(), {ac("done")}, recording, RewardPrompts::defaults());
  auto strict = std::make_shared<providers::ReplayTransport>(nullptr, dir.path(), providers::CacheMode::Replay);
  providers::Provider replaying(cfg, strict);
  EXPECT_EQ(global_score(story(), {ac("done")}, replaying, RewardPrompts::defaults()), first);
}

TEST(LocalScore, VerifierNormalizesYes) {
  Stacks s;
  s.scorer.mock->set_next_token([](const std::string&) {
    return std::vector<providers::TokenLogprob>{{"Yes", std::log(0.8)}, {"No", std::log(0.2)}};
  });
  auto v = local_score(story(), ac("done"), LocalScorer::Verifier, *s.scorer, RewardPrompts::defaults());
  EXPECT_NEAR(v.value, 0.8, 1e-12);
}

TEST(LocalScore, Ur3IsMeanLogprob) {
  Stacks s;
  s.scorer.mock->set_continuation([](const std::string&, const std::string&) {
    return std::vector<providers::TokenLogprob>{{"a", -1}, {"b", -1}};
  });
  auto v = local_score(story(), ac("done"), LocalScorer::Ur3, *s.scorer, RewardPrompts::defaults());
  EXPECT_DOUBLE_EQ(v.value, -1.0);
  EXPECT_EQ(v.scorer, LocalScorer::Ur3);
}

TEST(LocalScore, NonAtomicIsRejected) {
  Stacks s;
  AcceptanceCriterion two{{"g"}, {"w"}, {"a", "b"}, ""};
  EXPECT_ERROR_CODE(local_score(story(), two, LocalScorer::Verifier, *s.scorer, RewardPrompts::defaults()),
                    InvalidArgument);
}

TEST(LocalScore, MixedScorersAreNotComparable) {
  LocalScore v{0.5, LocalScorer::Verifier}, u{-1.0, LocalScorer::Ur3};
  EXPECT_FALSE(v.comparable(u));
  EXPECT_ERROR_CODE(v.less_than(u), MixedScorers);
  std::vector<LocalScore> mixed{v, u};
  EXPECT_ERROR_CODE(select_worst(mixed), MixedScorers);
}

TEST(SelectWorst, Examples) {
  auto scores = [](std::vector<double> v) {
    std::vector<LocalScore> out;
    for (double x : v) out.push_back({x, LocalScorer::Verifier});
    return out;
  };
  EXPECT_EQ(select_worst(scores({0.9, 0.2, 0.8})), 1u);
  EXPECT_EQ(select_worst(scores({0.5, 0.5})), 0u);
  EXPECT_EQ(select_worst(scores({0.3})), 0u);
  EXPECT_ERROR_CODE(select_worst(std::vector<LocalScore>{}), EmptyInput);
}

TEST(Polish, HighGlobalReturnsInput) {
  Stacks s;
  s.judge.mock->script_chat("global_score", {"Score: 5"});
  std::vector<AcceptanceCriterion> acs{ac("a"), ac("b")};
  auto out = polish(story(), acs, PolishConfig{}, s.providers(), RewardPrompts::defaults());
  EXPECT_EQ(out.acs, acs);
  EXPECT_EQ(out.rounds_executed, 0);
  EXPECT_EQ(out.global_after, out.global_before);
  EXPECT_EQ(s.scorer.log->count() + s.gen.log->count(), 0u);
}

TEST(Polish, ReplacesWorstInPlace) {
  Stacks s;
  s.judge.mock->script_chat("global_score", {"Score: 3", "Score: 5"});
  yes_by_outcome(s.scorer, {{"first", 0.9}, {"second", 0.2}, {"third", 0.8}});
  s.gen.mock->script_chat("polish", {"Here you go:\nGIVEN a learner\nWHEN the learner enrols\nTHEN R"});
  std::vector<AcceptanceCriterion> acs{ac("first"), ac("second"), ac("third")};
  auto out = polish(story(), acs, PolishConfig{}, s.providers(), RewardPrompts::defaults());
  ASSERT_EQ(out.acs.size(), 3u);
  EXPECT_EQ(out.acs[0], acs[0]);
  EXPECT_EQ(out.acs[1].then, std::vector<std::string>{"R"});
  EXPECT_EQ(out.acs[2], acs[2]);
  EXPECT_EQ(out.rounds_executed, 1);
  EXPECT_EQ(out.global_before.level, 3);
  EXPECT_EQ(out.global_after.level, 5);
  ASSERT_EQ(out.rounds.size(), 1u);
  EXPECT_EQ(out.rounds[0].worst, 1u);
}

TEST(Polish, ContinuesGenerationDialogue) {
  Stacks s;
  s.judge.mock->script_chat("global_score", {"Score: 2", "Score: 2"});
  s.gen.mock->script_chat("polish", {"GIVEN x WHEN y THEN z"});
  std::vector<providers::Message> dialogue{providers::Message::text(providers::Role::User, "generate please"),
                                           providers::Message::text(providers::Role::Assistant, "GIVEN a WHEN b THEN c")};
  polish(story(), {ac("a")}, PolishConfig{}, s.providers(), RewardPrompts::defaults(), dialogue);
  auto req = providers::chat_request_from_json(s.gen.log->calls().at(0).request);
  ASSERT_EQ(req.messages.size(), 3u);
  EXPECT_EQ(req.messages[0], dialogue[0]);
  EXPECT_EQ(req.messages[1], dialogue[1]);
  EXPECT_NE(req.messages[2].text_content().find("THEN a"), std::string::npos);
  EXPECT_EQ(req.purpose, "polish");
}

TEST(Polish, RoundsStopAtMax) {
  Stacks s;
  s.judge.mock->set_chat_responder("global_score", [](const providers::ChatRequest&) { return "Score: 3"; });
  s.gen.mock->set_chat_responder("polish", [](const providers::ChatRequest&) { return "GIVEN x WHEN y THEN z"; });
  auto out = polish(story(), {ac("a"), ac("b")}, PolishConfig{5, 2, LocalScorer::Verifier}, s.providers(),
                    RewardPrompts::defaults());
  EXPECT_EQ(out.rounds_executed, 2);
  EXPECT_EQ(out.replaced_indices.size(), 2u);
}

TEST(Polish, UnparseableReplacement) {
  Stacks s;
  s.judge.mock->script_chat("global_score", {"Score: 1"});
  s.gen.mock->script_chat("polish", {"sorry", "still sorry"});
  EXPECT_ERROR_CODE(polish(story(), {ac("a")}, PolishConfig{}, s.providers(), RewardPrompts::defaults()),
                    UnparseablePolish);
}

TEST(Polish, ConfigValidation) {
  EXPECT_ERROR_CODE((PolishConfig{0, 1, LocalScorer::Verifier}.validate()), ConfigError);
  EXPECT_ERROR_CODE((PolishConfig{3, 0, LocalScorer::Verifier}.validate()), ConfigError);
}

TEST(Polish, OutcomeJsonRoundTrip) {
  Stacks s;
  s.judge.mock->script_chat("global_score", {"Score: 3", "Score: 4"});
  s.gen.mock->script_chat("polish", {"GIVEN x WHEN y THEN z"});
  auto out = polish(story(), {ac("a"), ac("b")}, PolishConfig{}, s.providers(), RewardPrompts::defaults());
  auto back = polish_outcome_from_json(to_json(out));
  EXPECT_EQ(back.acs, out.acs);
  EXPECT_EQ(back.replaced_indices, out.replaced_indices);
  EXPECT_EQ(back.global_after, out.global_after);
}

TEST(RewardPrompts, JsonRoundTrip) {
  EXPECT_EQ(reward_prompts_from_json(to_json(RewardPrompts::defaults())), RewardPrompts::defaults());
}
