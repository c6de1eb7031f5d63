#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "acgen/providers/provider.hpp"

namespace acgen::evaluation {

struct RankingMetrics {
  std::size_t k = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ndcg = 0.0;
  double hit_rate = 0.0;
  double average_precision = 0.0;  // over the whole ranked list, independent of k
};

/// Binary-relevance metrics at cutoff k. AP averages the precision at every
/// rank of the list that holds a relevant document (0 when none does).
/// Throws EmptyRelevanceSet, InvalidArgument (k = 0) or DuplicateId.
RankingMetrics ranking_metrics(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                               std::size_t k);
double mean_average_precision(std::span<const double> average_precisions);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const Prf&) const = default;
};

enum class RougeMode { N1, N2, L };

/// Clipped n-gram overlap (N1, N2) or LCS (L) over util::tokenize tokens.
/// When neither side has an n-gram of the requested order, all three values
/// are 1 for identical token sequences and 0 otherwise.
/// Throws EmptyAfterTokenization.
Prf rouge(const std::string& candidate, const std::string& reference, RougeMode mode);

/// Sentence BLEU, n = 1..4, uniform weights. A zero clipped count becomes
/// 1 / (total + 1); an order with no candidate n-grams contributes 1. The
/// brevity penalty uses the reference length closest to the candidate
/// (shorter on ties). Throws EmptyInput or EmptyAfterTokenization.
double bleu(const std::string& candidate, const std::vector<std::string>& references);

/// Unit-cost edit distance over Unicode scalar values.
std::size_t levenshtein(std::string_view a, std::string_view b);

double semantic_similarity(const std::string& a, const std::string& b, providers::Provider& embedder);

struct TextMetrics {
  double semantic_sim = 0.0;
  Prf rouge1, rouge2, rougeL;
  double bleu = 0.0;
  std::size_t levenshtein = 0;
};

TextMetrics text_metrics(const std::string& candidate, const std::string& reference, providers::Provider& embedder);

nlohmann::json to_json(const RankingMetrics& m);
nlohmann::json to_json(const Prf& p);
nlohmann::json to_json(const TextMetrics& m);

}  // namespace acgen::evaluation
