#include <gtest/gtest.h>

#include "acgen/corpus/dataset.hpp"
#include "acgen/corpus/gherkin.hpp"
#include "acgen/util/files.hpp"
#include "expect_error.hpp"
#include "support.hpp"

using namespace acgen;
using corpus::AcceptanceCriterion;
using corpus::parse_gherkin;
using nlohmann::json;

TEST(Gherkin, SingleLineCriterion) {
  auto acs = parse_gherkin("GIVEN a learner is logged in WHEN they open the dashboard THEN the widget is visible");
  ASSERT_EQ(acs.size(), 1u);
  EXPECT_EQ(acs[0].given, std::vector<std::string>{"a learner is logged in"});
  EXPECT_EQ(acs[0].when, std::vector<std::string>{"they open the dashboard"});
  EXPECT_EQ(acs[0].then, std::vector<std::string>{"the widget is visible"});
}

TEST(Gherkin, AndContinuesThen) {
  auto acs = parse_gherkin("GIVEN x WHEN y THEN a AND b");
  ASSERT_EQ(acs.size(), 1u);
  EXPECT_EQ(acs[0].then, (std::vector<std::string>{"a", "b"}));
}

TEST(Gherkin, ButContinuesCurrentSection) {
  auto acs = parse_gherkin("Given x\nBut not y\nWhen z\nThen ok\nBut no error");
  ASSERT_EQ(acs.size(), 1u);
  EXPECT_EQ(acs[0].given, (std::vector<std::string>{"x", "not y"}));
  EXPECT_EQ(acs[0].then, (std::vector<std::string>{"ok", "no error"}));
}

TEST(Gherkin, MissingWhenIsAnError) { EXPECT_ERROR_CODE(parse_gherkin("GIVEN x THEN z"), MissingKeyword); }

TEST(Gherkin, BlankTextIsEmptyInput) { EXPECT_ERROR_CODE(parse_gherkin("  \n\t"), EmptyInput); }

TEST(Gherkin, ProseWithoutKeywordsIsMissingKeyword) {
  EXPECT_ERROR_CODE(parse_gherkin("no criteria here"), MissingKeyword);
}

TEST(Gherkin, WeakKeywordsInsideClausesAreText) {
  auto acs = parse_gherkin("GIVEN a form given to the user and a list\nWHEN the user saves and closes it\n"
                           "THEN the form is saved when valid");
  ASSERT_EQ(acs.size(), 1u);
  EXPECT_EQ(acs[0].given, std::vector<std::string>{"a form given to the user and a list"});
  EXPECT_EQ(acs[0].when, std::vector<std::string>{"the user saves and closes it"});
  EXPECT_EQ(acs[0].then, std::vector<std::string>{"the form is saved when valid"});
}

TEST(Gherkin, HeadingsBulletsAndPreambleAreSkipped) {
  auto acs = parse_gherkin("Here are the criteria:\n\nScenario: save\n- **Given** a form\n- **When** saving\n"
                           "- **Then** it is stored\n\n1. GIVEN b\n2. WHEN c\n3. THEN d");
  ASSERT_EQ(acs.size(), 2u);
  EXPECT_EQ(acs[0].given, std::vector<std::string>{"a form"});
  EXPECT_EQ(acs[1].then, std::vector<std::string>{"d"});
}

TEST(Gherkin, WhenAfterThenReusesGiven) {
  auto acs = parse_gherkin("GIVEN g\nWHEN w1\nTHEN t1\nWHEN w2\nTHEN t2");
  ASSERT_EQ(acs.size(), 2u);
  EXPECT_EQ(acs[1].given, std::vector<std::string>{"g"});
  EXPECT_EQ(acs[1].when, std::vector<std::string>{"w2"});
}

TEST(Gherkin, RenderIsCanonical) {
  AcceptanceCriterion ac{{"g1", "g2"}, {"w"}, {"t1", "t2"}, ""};
  EXPECT_EQ(corpus::render(ac), "GIVEN g1\nAND g2\nWHEN w\nTHEN t1\nAND t2");
  auto back = parse_gherkin(corpus::render(ac));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_TRUE(back[0].same_clauses(ac));
}

TEST(Atomicize, SingleThenIsIdentity) {
  AcceptanceCriterion ac{{"g"}, {"w"}, {"a"}, "raw"};
  auto out = corpus::atomicize(ac);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], ac);
}

TEST(Atomicize, SplitsEveryThenAndKeepsContext) {
  AcceptanceCriterion ac{{"g"}, {"w"}, {"a", "b", "c"}, ""};
  auto out = corpus::atomicize(ac);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out[i].given, ac.given);
    EXPECT_EQ(out[i].when, ac.when);
    EXPECT_EQ(out[i].then, std::vector<std::string>{ac.then[i]});
  }
}

namespace {

json small_dataset() {
  return json::parse(R"({
    "version": "1",
    "stories": [
      {"id": "S1", "title": "One", "narrative": "As a user, I want one, so that it works.", "extensions": ["detail"]},
      {"id": "S2", "title": "Two", "narrative": "As a user, I want two, so that it works."}
    ],
    "chunks": [
      {"id": "c1", "kind": "background", "text": "First chunk."},
      {"id": "c2", "kind": "consideration", "text": "Second chunk."},
      {"id": "c3", "kind": "background", "text": "Third chunk."}
    ],
    "visuals": [{"id": "v1", "image": "images/v1.png", "media_type": "image/png", "caption": "screen"}],
    "ground_truth": {"S1": ["GIVEN a WHEN b THEN c"]},
    "objectives": {"S1": [{"id": "S1-O1", "text": "c happens"}]},
    "relevance": {"S1": ["c1", "v1"]}
  })");
}

void write_fixture(const support::TempDir& dir, const json& doc) {
  auto png = support::tiny_png("v1");
  util::write_text(dir / "images/v1.png", std::string(png.begin(), png.end()));
  util::write_json(dir / "dataset.json", doc);
}

}  // namespace

TEST(Dataset, LoadsFixtureCounts) {
  support::TempDir dir;
  write_fixture(dir, small_dataset());
  auto d = corpus::load_dataset(dir / "dataset.json");
  EXPECT_EQ(d.stories.size(), 2u);
  EXPECT_EQ(d.chunks.size(), 3u);
  EXPECT_EQ(d.visuals.size(), 1u);
  EXPECT_EQ(d.chunks[1].kind, corpus::ChunkKind::Consideration);
  EXPECT_EQ(d.ground_truth_acs.at("S1").size(), 1u);
  EXPECT_EQ(d.relevance.at("S1"), (std::set<std::string>{"c1", "v1"}));
  EXPECT_EQ(d.visuals[0].image, support::tiny_png("v1"));
}

TEST(Dataset, ObjectiveForUnknownStoryIsDangling) {
  support::TempDir dir;
  auto doc = small_dataset();
  doc["objectives"]["S9"] = json::array({{{"id", "S9-O1"}, {"text", "x"}}});
  write_fixture(dir, doc);
  EXPECT_ERROR_CODE(corpus::load_dataset(dir / "dataset.json"), DanglingReference);
}

TEST(Dataset, RelevanceToUnknownDocIsDangling) {
  support::TempDir dir;
  auto doc = small_dataset();
  doc["relevance"]["S1"].push_back("c99");
  write_fixture(dir, doc);
  EXPECT_ERROR_CODE(corpus::load_dataset(dir / "dataset.json"), DanglingReference);
}

TEST(Dataset, DuplicateChunkId) {
  support::TempDir dir;
  auto doc = small_dataset();
  doc["chunks"][2]["id"] = "c1";
  write_fixture(dir, doc);
  EXPECT_ERROR_CODE(corpus::load_dataset(dir / "dataset.json"), DuplicateId);
}

TEST(Dataset, MissingImage) {
  support::TempDir dir;
  auto doc = small_dataset();
  doc["visuals"][0]["image"] = "images/none.png";
  write_fixture(dir, doc);
  EXPECT_ERROR_CODE(corpus::load_dataset(dir / "dataset.json"), ImageNotFound);
}

TEST(Dataset, SchemaErrorCarriesPointer) {
  support::TempDir dir;
  auto doc = small_dataset();
  doc["stories"][1].erase("narrative");
  write_fixture(dir, doc);
  try {
    corpus::load_dataset(dir / "dataset.json");
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaError);
    EXPECT_EQ(e.details().at("pointer"), "/stories/1/narrative");
  }
}

TEST(Dataset, SaveLoadRoundTripKeepsFingerprint) {
  support::TempDir dir;
  write_fixture(dir, small_dataset());
  auto d = corpus::load_dataset(dir / "dataset.json");
  corpus::save_dataset(d, dir / "copy" / "dataset.json");
  auto e = corpus::load_dataset(dir / "copy" / "dataset.json");
  EXPECT_EQ(d, e);
  EXPECT_EQ(corpus::fingerprint(d), corpus::fingerprint(e));
}

TEST(Dataset, ToyDatasetIsValid) {
  auto d = corpus::load_dataset(support::toy_dataset());
  EXPECT_EQ(d.stories.size(), 5u);
  EXPECT_EQ(d.chunks.size(), 12u);
  EXPECT_EQ(d.visuals.size(), 4u);
  EXPECT_NO_THROW(corpus::validate(d));
  for (const auto& s : d.stories) EXPECT_FALSE(d.objectives.at(s.id).empty()) << s.id;
}
