#include "acgen/retrieval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "acgen/error.hpp"
#include "acgen/providers/media.hpp"
#include "acgen/util/files.hpp"
#include "acgen/util/parallel.hpp"

namespace acgen::retrieval {

using nlohmann::json;

namespace {

constexpr int kIndexVersion = 1;

template <typename Doc>
void check_ids(const std::vector<Doc>& docs, const char* what) {
  if (docs.empty()) throw Error(ErrorCode::EmptyInput, std::string("cannot index an empty ") + what + " list");
  std::set<std::string> seen;
  for (const auto& d : docs) {
    if (d.id.empty()) throw Error(ErrorCode::InvalidArgument, std::string(what) + " with empty id");
    if (!seen.insert(d.id).second) {
      throw Error(ErrorCode::DuplicateId, std::string("duplicate ") + what + " id '" + d.id + "'", {{"id", d.id}});
    }
  }
}

void sort_entries(Index& index) {
  std::sort(index.entries.begin(), index.entries.end(),
            [](const IndexEntry& a, const IndexEntry& b) { return a.doc_id < b.doc_id; });
}

std::size_t workers(const Provider& p) { return static_cast<std::size_t>(std::max(1, p.config().max_parallel)); }

EmbeddingVector embed_query(Provider& embedder, const std::string& text, QueryCache* cache) {
  return cache ? cache->get(embedder, text) : embedder.embed_text(text);
}

std::vector<RetrievalHit> dense_query(const Index& index, const EmbeddingVector& q, std::size_t k) {
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(index.entries.size());
  for (const auto& e : index.entries) {
    if (!e.vector) throw Error(ErrorCode::InvalidArgument, "index entry '" + e.doc_id + "' has no vector");
    scored.emplace_back(e.doc_id, cosine(q, *e.vector));
  }
  return rank(std::move(scored), k);
}

}  // namespace

std::string to_string(TextStrategy s) { return s == TextStrategy::DenseCosine ? "DenseCosine" : "LmScored"; }

std::string to_string(VisualVariant v) {
  switch (v) {
    case VisualVariant::HtmlFull: return "HtmlFull";
    case VisualVariant::HtmlPruned: return "HtmlPruned";
    case VisualVariant::DirectEmbedding: return "DirectEmbedding";
  }
  return "?";
}

TextStrategy text_strategy_from_string(const std::string& s) {
  if (s == "DenseCosine") return TextStrategy::DenseCosine;
  if (s == "LmScored") return TextStrategy::LmScored;
  throw Error(ErrorCode::ConfigError, "unknown text strategy '" + s + "'");
}

VisualVariant visual_variant_from_string(const std::string& s) {
  if (s == "HtmlFull") return VisualVariant::HtmlFull;
  if (s == "HtmlPruned") return VisualVariant::HtmlPruned;
  if (s == "DirectEmbedding") return VisualVariant::DirectEmbedding;
  throw Error(ErrorCode::ConfigError, "unknown visual variant '" + s + "'");
}

void RetrievalConfig::validate() const {
  if (k < 1) throw Error(ErrorCode::ConfigError, "retrieval k must be at least 1");
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "cosine of vectors with " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()) + " dimensions");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::InvalidArgument, "cosine of a zero vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

EmbeddingVector QueryCache::get(Provider& embedder, const std::string& text) {
  auto key = std::make_pair(text, embedder.fingerprint());
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  EmbeddingVector v = embedder.embed_text(text);
  std::lock_guard lock(mu_);
  ++misses_;
  return cache_.emplace(std::move(key), std::move(v)).first->second;
}

std::size_t QueryCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t QueryCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

TextIndex index_text(const std::vector<corpus::DomainChunk>& chunks, TextStrategy strategy, Provider& embedder) {
  check_ids(chunks, "chunk");
  TextIndex index;
  index.modality = Modality::Text;
  index.variant = to_string(strategy);
  index.entries.resize(chunks.size());
  if (strategy == TextStrategy::LmScored) {
    for (std::size_t i = 0; i < chunks.size(); ++i) index.entries[i] = {chunks[i].id, std::nullopt, chunks[i].text};
  } else {
    index.backend_fingerprint = embedder.fingerprint();
    util::parallel_for(chunks.size(), workers(embedder), [&](std::size_t i) {
      try {
        index.entries[i] = {chunks[i].id, embedder.embed_text(chunks[i].text), chunks[i].text};
      } catch (const Error& e) {
        throw e.with_context("chunk '" + chunks[i].id + "'");
      }
    });
  }
  sort_entries(index);
  return index;
}

VisualIndex index_visual(const std::vector<corpus::VisualDoc>& visuals, VisualVariant variant, Provider& embedder,
                         Provider* converter) {
  check_ids(visuals, "visual");
  VisualIndex index;
  index.modality = Modality::Visual;
  index.variant = to_string(variant);
  index.backend_fingerprint = embedder.fingerprint();
  index.entries.resize(visuals.size());
  util::parallel_for(visuals.size(), workers(embedder), [&](std::size_t i) {
    const auto& doc = visuals[i];
    try {
      if (variant == VisualVariant::DirectEmbedding) {
        index.entries[i] = {doc.id, embedder.embed_image(doc), ""};
        return;
      }
      std::string html;
      if (variant == VisualVariant::HtmlPruned && doc.html_pruned) {
        html = *doc.html_pruned;
      } else {
        if (doc.html_full) {
          html = *doc.html_full;
        } else {
          if (!converter) throw Error(ErrorCode::ConfigError, "no image-to-HTML converter configured");
          html = converter->image_to_html(doc);
        }
        if (variant == VisualVariant::HtmlPruned) html = providers::prune_html(html);
      }
      if (html.empty()) throw Error(ErrorCode::EmptyConversion, "HTML representation is empty");
      index.entries[i] = {doc.id, embedder.embed_text(html), html};
    } catch (const Error& e) {
      throw e.with_context("visual '" + doc.id + "'");
    }
  });
  sort_entries(index);
  return index;
}

std::vector<RetrievalHit> rank(std::vector<std::pair<std::string, double>> scored, std::size_t k) {
  for (const auto& [id, s] : scored) {
    if (!std::isfinite(s)) throw Error(ErrorCode::NonFiniteScore, "non-finite score for '" + id + "'", {{"doc_id", id}});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<RetrievalHit> hits;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) hits.push_back({scored[i].first, scored[i].second, i + 1});
  return hits;
}

std::vector<RetrievalHit> query_text(const TextIndex& index, const corpus::UserStory& story,
                                     const RetrievalConfig& cfg, Provider& provider, QueryCache* cache) {
  cfg.validate();
  if (index.modality != Modality::Text) throw Error(ErrorCode::InvalidArgument, "not a text index");
  if (index.entries.empty()) throw Error(ErrorCode::EmptyInput, "text index is empty");
  const std::string query = story.query_text();
  if (index.variant == to_string(TextStrategy::DenseCosine)) {
    return dense_query(index, embed_query(provider, query, cache), cfg.k);
  }
  std::vector<std::pair<std::string, double>> scored(index.entries.size());
  util::parallel_for(index.entries.size(), workers(provider), [&](std::size_t i) {
    const auto& e = index.entries[i];
    try {
      scored[i] = {e.doc_id, providers::sequence_logprob(provider, e.text, query).per_token_mean};
    } catch (const Error& err) {
      throw err.with_context("chunk '" + e.doc_id + "'");
    }
  });
  return rank(std::move(scored), cfg.k);
}

std::vector<RetrievalHit> query_visual(const VisualIndex& index, const corpus::UserStory& story,
                                       const RetrievalConfig& cfg, Provider& embedder, QueryCache* cache) {
  cfg.validate();
  if (index.modality != Modality::Visual) throw Error(ErrorCode::InvalidArgument, "not a visual index");
  if (index.entries.empty()) throw Error(ErrorCode::EmptyInput, "visual index is empty");
  return dense_query(index, embed_query(embedder, story.query_text(), cache), cfg.k);
}

json to_json(const Index& index) {
  json entries = json::array();
  for (const auto& e : index.entries) {
    json j{{"id", e.doc_id}, {"text", e.text}};
    if (e.vector) j["vector"] = e.vector->values;
    entries.push_back(std::move(j));
  }
  return {{"version", kIndexVersion},
          {"modality", index.modality == Modality::Text ? "text" : "visual"},
          {"variant", index.variant},
          {"backend_fingerprint", index.backend_fingerprint},
          {"entries", std::move(entries)}};
}

Index index_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kIndexVersion) {
      throw Error(ErrorCode::SchemaError, "unsupported index version " + j.at("version").dump());
    }
    Index index;
    std::string modality = j.at("modality").get<std::string>();
    if (modality != "text" && modality != "visual") throw Error(ErrorCode::SchemaError, "bad modality " + modality);
    index.modality = modality == "text" ? Modality::Text : Modality::Visual;
    index.variant = j.at("variant").get<std::string>();
    index.backend_fingerprint = j.at("backend_fingerprint").get<std::string>();
    for (const auto& e : j.at("entries")) {
      IndexEntry entry{e.at("id").get<std::string>(), std::nullopt, e.value("text", "")};
      if (e.contains("vector")) entry.vector = EmbeddingVector{e.at("vector").get<std::vector<double>>()};
      index.entries.push_back(std::move(entry));
    }
    return index;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed index: ") + e.what());
  }
}

void save_index(const Index& index, const std::filesystem::path& path) { util::write_json(path, to_json(index), -1); }

Index load_index(const std::filesystem::path& path, const std::string& expected_fingerprint) {
  Index index = index_from_json(util::read_json(path));
  if (!expected_fingerprint.empty() && index.backend_fingerprint != expected_fingerprint) {
    throw Error(ErrorCode::FingerprintMismatch,
                "index " + path.string() + " was built with backend " + index.backend_fingerprint + ", expected " +
                    expected_fingerprint,
                {{"stored", index.backend_fingerprint}, {"expected", expected_fingerprint}});
  }
  return index;
}

json to_json(const RetrievalHit& hit) { return {{"doc_id", hit.doc_id}, {"score", hit.score}, {"rank", hit.rank}}; }

RetrievalHit hit_from_json(const json& j) {
  return {j.at("doc_id").get<std::string>(), j.at("score").get<double>(), j.at("rank").get<std::size_t>()};
}

}  // namespace acgen::retrieval
