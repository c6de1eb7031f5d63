#include <cmath>

#include <gtest/gtest.h>

#include "acgen/providers/media.hpp"
#include "acgen/retrieval/retrieval.hpp"
#include "expect_error.hpp"
#include "support.hpp"

using namespace acgen;
using namespace acgen::retrieval;

namespace {

corpus::UserStory story(const std::string& text = "As a user, I want search, so that I find things.") {
  return {"S1", "Search", text, {}};
}

std::vector<double> axis(std::size_t dim, std::size_t i) {
  std::vector<double> v(dim, 0.0);
  v[i] = 1.0;
  return v;
}

corpus::VisualDoc visual(const std::string& id) {
  corpus::VisualDoc v;
  v.id = id;
  v.image = support::tiny_png(id);
  v.media_type = "image/png";
  return v;
}

}  // namespace

TEST(Cosine, KnownValues) {
  auto a = providers::EmbeddingVector::unit({1, 0});
  auto b = providers::EmbeddingVector::unit({0, 1});
  auto c = providers::EmbeddingVector::unit({1, 1});
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-12);
  EXPECT_NEAR(cosine(a, b), 0.0, 1e-12);
  EXPECT_NEAR(cosine(a, c), 0.70710678, 1e-8);
  EXPECT_ERROR_CODE(cosine(a, providers::EmbeddingVector::unit({1, 0, 0})), DimensionMismatch);
}

TEST(IndexText, DenseEmbedsEveryChunk) {
  auto emb = support::mock_stack("emb");
  std::vector<corpus::DomainChunk> chunks{{"c2", "two", {}, ""}, {"c1", "one", {}, ""}, {"c3", "three", {}, ""}};
  auto index = index_text(chunks, TextStrategy::DenseCosine, *emb);
  ASSERT_EQ(index.size(), 3u);
  EXPECT_EQ(index.entries[0].doc_id, "c1");  // sorted by id
  for (const auto& e : index.entries) EXPECT_TRUE(e.vector.has_value());
  EXPECT_EQ(emb.log->count("embed_text"), 3u);
  EXPECT_EQ(index.backend_fingerprint, emb.provider->fingerprint());
}

TEST(IndexText, Errors) {
  auto emb = support::mock_stack("emb");
  EXPECT_ERROR_CODE(index_text({}, TextStrategy::DenseCosine, *emb), EmptyInput);
  std::vector<corpus::DomainChunk> dup{{"c1", "a", {}, ""}, {"c1", "b", {}, ""}};
  EXPECT_ERROR_CODE(index_text(dup, TextStrategy::DenseCosine, *emb), DuplicateId);
}

TEST(IndexText, LmScoredStoresTextOnly) {
  auto emb = support::mock_stack("emb");
  auto index = index_text({{"c1", "alpha", {}, ""}}, TextStrategy::LmScored, *emb);
  EXPECT_FALSE(index.entries[0].vector.has_value());
  EXPECT_EQ(index.entries[0].text, "alpha");
  EXPECT_EQ(emb.log->count(), 0u);
}

TEST(QueryText, PlantedNearestRanksFirst) {
  auto emb = support::mock_stack("emb", 4);
  auto s = story();
  emb.mock->plant_text_embedding(s.query_text(), {0.6, 0.8, 0, 0});
  emb.mock->plant_text_embedding("near", {0.6, 0.8, 0, 0});
  emb.mock->plant_text_embedding("far", axis(4, 2));
  emb.mock->plant_text_embedding("mid", axis(4, 1));
  auto index = index_text({{"a", "far", {}, ""}, {"b", "near", {}, ""}, {"c", "mid", {}, ""}},
                          TextStrategy::DenseCosine, *emb);
  RetrievalConfig cfg;
  cfg.k = 2;
  auto hits = query_text(index, s, cfg, *emb);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].doc_id, "b");
  EXPECT_NEAR(hits[0].score, 1.0, 1e-12);
  EXPECT_EQ(hits[0].rank, 1u);
  EXPECT_EQ(hits[1].doc_id, "c");
  EXPECT_NEAR(hits[1].score, 0.8, 1e-12);
}

TEST(QueryText, KLargerThanCorpusReturnsAll) {
  auto emb = support::mock_stack("emb");
  auto index = index_text({{"a", "x", {}, ""}, {"b", "y", {}, ""}}, TextStrategy::DenseCosine, *emb);
  RetrievalConfig cfg;
  cfg.k = 10;
  auto hits = query_text(index, story(), cfg, *emb);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[1].rank, 2u);
}

TEST(QueryText, LmScoredUsesContinuationLogprobs) {
  auto emb = support::mock_stack("emb");
  auto lm = support::mock_stack("lm");
  lm.mock->set_continuation([](const std::string& context, const std::string&) {
    double lp = context == "relevant chunk" ? -0.5 : -3.0;
    return std::vector<providers::TokenLogprob>{{"t", lp}, {"u", lp}};
  });
  auto index = index_text({{"a", "other chunk", {}, ""}, {"b", "relevant chunk", {}, ""}}, TextStrategy::LmScored,
                          *emb);
  auto hits = query_text(index, story(), RetrievalConfig{}, *lm);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].doc_id, "b");
  EXPECT_DOUBLE_EQ(hits[0].score, -0.5);
  EXPECT_EQ(lm.log->count("continuation_logprobs"), 2u);
}

TEST(QueryCache, EmbedsEachQueryOnce) {
  auto emb = support::mock_stack("emb");
  auto index = index_text({{"a", "x", {}, ""}}, TextStrategy::DenseCosine, *emb);
  emb.log->clear();
  QueryCache cache;
  query_text(index, story(), RetrievalConfig{}, *emb, &cache);
  query_text(index, story(), RetrievalConfig{}, *emb, &cache);
  EXPECT_EQ(emb.log->count(), 1u);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 1u);
}

TEST(Rank, TiesGoToLowerIdAndNanIsRejected) {
  auto hits = rank({{"b", 0.5}, {"a", 0.5}, {"c", 0.9}}, 3);
  EXPECT_EQ(hits[0].doc_id, "c");
  EXPECT_EQ(hits[1].doc_id, "a");
  EXPECT_EQ(hits[2].doc_id, "b");
  EXPECT_ERROR_CODE(rank({{"a", std::nan("")}}, 1), NonFiniteScore);
}

TEST(IndexVisual, HtmlPrunedEmbedsPrunedHtml) {
  auto emb = support::mock_stack("emb");
  auto conv = support::mock_stack("conv");
  const std::string html1 = "<div style='x'><p>Login</p><script>t()</script></div>";
  const std::string html2 = "<form class='c'><input name='q'></form>";
  conv.mock->set_html("v1", html1);
  conv.mock->set_html("v2", html2);
  auto index = index_visual({visual("v1"), visual("v2")}, VisualVariant::HtmlPruned, *emb, conv.get());
  ASSERT_EQ(index.size(), 2u);
  EXPECT_EQ(index.entries[0].text, providers::prune_html(html1));
  EXPECT_EQ(index.entries[1].text, providers::prune_html(html2));
  EXPECT_EQ(*index.entries[0].vector, emb.provider->embed_text(providers::prune_html(html1)));
  EXPECT_EQ(conv.log->count("image_to_html"), 2u);
}

TEST(IndexVisual, ReusesProvidedHtml) {
  auto emb = support::mock_stack("emb");
  auto v = visual("v1");
  v.html_full = "<p style='a'>given</p>";
  auto index = index_visual({v}, VisualVariant::HtmlFull, *emb, nullptr);
  EXPECT_EQ(index.entries[0].text, "<p style='a'>given</p>");
}

TEST(IndexVisual, DirectEmbeddingAndPlantedQuery) {
  auto emb = support::mock_stack("emb", 3);
  auto s = story();
  auto a = visual("va"), b = visual("vb");
  emb.mock->plant_image_embedding(a.image, axis(3, 0));
  emb.mock->plant_image_embedding(b.image, axis(3, 1));
  emb.mock->plant_text_embedding(s.query_text(), axis(3, 1));
  auto index = index_visual({a, b}, VisualVariant::DirectEmbedding, *emb, nullptr);
  auto hits = query_visual(index, s, RetrievalConfig{}, *emb);
  EXPECT_EQ(hits[0].doc_id, "vb");
  EXPECT_NEAR(hits[0].score, 1.0, 1e-12);
  EXPECT_NEAR(hits[1].score, 0.0, 1e-12);
}

TEST(IndexVisual, EmptyIndexQueryFails) {
  auto emb = support::mock_stack("emb");
  Index empty;
  empty.modality = Modality::Visual;
  EXPECT_ERROR_CODE(query_visual(empty, story(), RetrievalConfig{}, *emb), EmptyInput);
  EXPECT_ERROR_CODE(index_visual({}, VisualVariant::DirectEmbedding, *emb, nullptr), EmptyInput);
}

TEST(IndexVisual, MissingConverterIsConfigError) {
  auto emb = support::mock_stack("emb");
  EXPECT_ERROR_CODE(index_visual({visual("v")}, VisualVariant::HtmlPruned, *emb, nullptr), ConfigError);
}

TEST(IndexPersistence, RoundTripAndFingerprintCheck) {
  support::TempDir dir;
  auto emb = support::mock_stack("emb");
  auto index = index_text({{"a", "x", {}, ""}, {"b", "y", {}, ""}}, TextStrategy::DenseCosine, *emb);
  save_index(index, dir / "i.json");
  EXPECT_EQ(load_index(dir / "i.json", index.backend_fingerprint), index);
  EXPECT_EQ(load_index(dir / "i.json", ""), index);
  EXPECT_ERROR_CODE(load_index(dir / "i.json", "other"), FingerprintMismatch);
}

TEST(RetrievalConfig, Validation) {
  RetrievalConfig cfg;
  EXPECT_EQ(cfg.k, 5u);
  cfg.k = 0;
  EXPECT_ERROR_CODE(cfg.validate(), ConfigError);
  EXPECT_ERROR_CODE(text_strategy_from_string("bm25"), ConfigError);
  EXPECT_EQ(visual_variant_from_string("DirectEmbedding"), VisualVariant::DirectEmbedding);
}
