#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acgen/corpus/types.hpp"
#include "acgen/providers/provider.hpp"

namespace acgen::retrieval {

using providers::EmbeddingVector;
using providers::Provider;

struct RetrievalHit {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const RetrievalHit&) const = default;
};

enum class TextStrategy { DenseCosine, LmScored };
enum class VisualVariant { HtmlFull, HtmlPruned, DirectEmbedding };

std::string to_string(TextStrategy s);
std::string to_string(VisualVariant v);
TextStrategy text_strategy_from_string(const std::string& s);
VisualVariant visual_variant_from_string(const std::string& s);

struct RetrievalConfig {
  std::size_t k = 5;
  TextStrategy text_strategy = TextStrategy::DenseCosine;
  VisualVariant visual_variant = VisualVariant::HtmlPruned;

  void validate() const;
};

enum class Modality { Text, Visual };

struct IndexEntry {
  std::string doc_id;
  /// Absent for LM-scored text indices.
  std::optional<EmbeddingVector> vector;
  /// Chunk text (text indices) or the HTML that was embedded (HTML variants).
  std::string text;

  bool operator==(const IndexEntry&) const = default;
};

/// Immutable after construction; entries are sorted by doc_id so the index
/// does not depend on corpus order.
struct Index {
  Modality modality = Modality::Text;
  std::string variant;  // DenseCosine, LmScored, HtmlFull, HtmlPruned, DirectEmbedding
  std::string backend_fingerprint;
  std::vector<IndexEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool operator==(const Index&) const = default;
};

using TextIndex = Index;
using VisualIndex = Index;

/// Throws DimensionMismatch for vectors of different length.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Embeddings of query texts, keyed by (text, backend fingerprint).
class QueryCache {
 public:
  EmbeddingVector get(Provider& embedder, const std::string& text);
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, EmbeddingVector> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// DenseCosine embeds every chunk with `embedder`; LmScored stores raw text.
TextIndex index_text(const std::vector<corpus::DomainChunk>& chunks, TextStrategy strategy, Provider& embedder);

/// HtmlFull and HtmlPruned embed the (pruned) HTML as text; DirectEmbedding
/// embeds the image. HTML already present on a VisualDoc is reused, otherwise
/// `converter` renders it.
VisualIndex index_visual(const std::vector<corpus::VisualDoc>& visuals, VisualVariant variant, Provider& embedder,
                         Provider* converter);

/// `provider` is the embedder for DenseCosine indices and the LM scorer for
/// LmScored ones.
std::vector<RetrievalHit> query_text(const TextIndex& index, const corpus::UserStory& story,
                                     const RetrievalConfig& cfg, Provider& provider, QueryCache* cache = nullptr);
std::vector<RetrievalHit> query_visual(const VisualIndex& index, const corpus::UserStory& story,
                                       const RetrievalConfig& cfg, Provider& embedder, QueryCache* cache = nullptr);

/// Sorts by score descending then doc_id ascending and keeps the first k.
/// Throws NonFiniteScore if any score is NaN or infinite.
std::vector<RetrievalHit> rank(std::vector<std::pair<std::string, double>> scored, std::size_t k);

nlohmann::json to_json(const Index& index);
Index index_from_json(const nlohmann::json& j);
void save_index(const Index& index, const std::filesystem::path& path);
/// Throws FingerprintMismatch when the stored fingerprint differs from
/// `expected_fingerprint` (skipped when it is empty).
Index load_index(const std::filesystem::path& path, const std::string& expected_fingerprint);

nlohmann::json to_json(const RetrievalHit& hit);
RetrievalHit hit_from_json(const nlohmann::json& j);

}  // namespace acgen::retrieval
