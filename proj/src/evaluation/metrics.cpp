#include "acgen/evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "acgen/error.hpp"
#include "acgen/retrieval/retrieval.hpp"
#include "acgen/util/text.hpp"

namespace acgen::evaluation {

using nlohmann::json;

namespace {

using Tokens = std::vector<std::string>;
using Counts = std::map<std::vector<std::string>, std::size_t>;

Counts ngrams(const Tokens& t, std::size_t n) {
  Counts c;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++c[Tokens(t.begin() + static_cast<long>(i), t.begin() + static_cast<long>(i + n))];
  return c;
}

std::size_t total(const Counts& c) {
  std::size_t n = 0;
  for (const auto& [g, k] : c) n += k;
  return n;
}

std::size_t clipped_overlap(const Counts& cand, const Counts& ref) {
  std::size_t n = 0;
  for (const auto& [g, k] : cand) {
    if (auto it = ref.find(g); it != ref.end()) n += std::min(k, it->second);
  }
  return n;
}

Prf make_prf(double p, double r) { return {p, r, p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0}; }

std::size_t lcs(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Tokens tokens_of(const std::string& s, const char* which) {
  Tokens t = util::tokenize(s);
  if (t.empty()) throw Error(ErrorCode::EmptyAfterTokenization, std::string(which) + " has no tokens");
  return t;
}

}  // namespace

RankingMetrics ranking_metrics(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                               std::size_t k) {
  if (relevant.empty()) throw Error(ErrorCode::EmptyRelevanceSet, "relevance set is empty");
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  std::set<std::string> seen;
  for (const auto& id : ranked) {
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateId, "ranked list repeats '" + id + "'");
  }
  RankingMetrics m;
  m.k = k;
  std::size_t hits = 0;
  double dcg = 0.0;
  double precision_sum = 0.0;
  std::size_t relevant_seen = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!relevant.contains(ranked[i])) continue;
    ++relevant_seen;
    precision_sum += static_cast<double>(relevant_seen) / static_cast<double>(i + 1);
    if (i < k) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
  }
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, relevant.size()); ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  m.precision = static_cast<double>(hits) / static_cast<double>(k);
  m.recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
  m.f1 = make_prf(m.precision, m.recall).f1;
  m.ndcg = dcg / idcg;
  m.hit_rate = hits > 0 ? 1.0 : 0.0;
  m.average_precision = relevant_seen ? precision_sum / static_cast<double>(relevant_seen) : 0.0;
  return m;
}

double mean_average_precision(std::span<const double> aps) {
  if (aps.empty()) throw Error(ErrorCode::EmptyInput, "no queries to average");
  double s = 0.0;
  for (double ap : aps) s += ap;
  return s / static_cast<double>(aps.size());
}

Prf rouge(const std::string& candidate, const std::string& reference, RougeMode mode) {
  Tokens c = tokens_of(candidate, "candidate");
  Tokens r = tokens_of(reference, "reference");
  if (mode == RougeMode::L) {
    double l = static_cast<double>(lcs(c, r));
    return make_prf(l / static_cast<double>(c.size()), l / static_cast<double>(r.size()));
  }
  std::size_t n = mode == RougeMode::N1 ? 1 : 2;
  Counts cg = ngrams(c, n), rg = ngrams(r, n);
  std::size_t ct = total(cg), rt = total(rg);
  if (ct == 0 && rt == 0) return c == r ? Prf{1.0, 1.0, 1.0} : Prf{};
  double overlap = static_cast<double>(clipped_overlap(cg, rg));
  return make_prf(ct ? overlap / static_cast<double>(ct) : 0.0, rt ? overlap / static_cast<double>(rt) : 0.0);
}

double bleu(const std::string& candidate, const std::vector<std::string>& references) {
  if (references.empty()) throw Error(ErrorCode::EmptyInput, "BLEU needs at least one reference");
  Tokens c = tokens_of(candidate, "candidate");
  std::vector<Tokens> refs;
  for (const auto& r : references) refs.push_back(tokens_of(r, "reference"));

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    Counts cg = ngrams(c, n);
    std::size_t t = total(cg);
    if (t == 0) continue;  // log(1)
    Counts max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
    }
    std::size_t m = clipped_overlap(cg, max_ref);
    double p = m == 0 ? 1.0 / static_cast<double>(t + 1) : static_cast<double>(m) / static_cast<double>(t);
    log_sum += std::log(p);
  }
  double c_len = static_cast<double>(c.size());
  double r_len = static_cast<double>(refs.front().size());
  for (const auto& r : refs) {
    double len = static_cast<double>(r.size());
    double d = std::abs(len - c_len), best = std::abs(r_len - c_len);
    if (d < best || (d == best && len < r_len)) r_len = len;
  }
  double bp = c_len < r_len ? std::exp(1.0 - r_len / c_len) : 1.0;
  return bp * std::exp(log_sum / 4.0);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::u32string x = util::utf8_decode(a), y = util::utf8_decode(b);
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

double semantic_similarity(const std::string& a, const std::string& b, providers::Provider& embedder) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "semantic similarity of empty text");
  return retrieval::cosine(embedder.embed_text(a), embedder.embed_text(b));
}

TextMetrics text_metrics(const std::string& candidate, const std::string& reference, providers::Provider& embedder) {
  TextMetrics m;
  m.semantic_sim = semantic_similarity(candidate, reference, embedder);
  m.rouge1 = rouge(candidate, reference, RougeMode::N1);
  m.rouge2 = rouge(candidate, reference, RougeMode::N2);
  m.rougeL = rouge(candidate, reference, RougeMode::L);
  m.bleu = bleu(candidate, {reference});
  m.levenshtein = levenshtein(candidate, reference);
  return m;
}

json to_json(const RankingMetrics& m) {
  return {{"k", m.k},       {"precision", m.precision}, {"recall", m.recall},
          {"f1", m.f1},     {"ndcg", m.ndcg},           {"hit_rate", m.hit_rate},
          {"average_precision", m.average_precision}};
}

json to_json(const Prf& p) { return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

json to_json(const TextMetrics& m) {
  return {{"semantic_sim", m.semantic_sim}, {"rouge1", to_json(m.rouge1)}, {"rouge2", to_json(m.rouge2)},
          {"rougeL", to_json(m.rougeL)},    {"bleu", m.bleu},              {"levenshtein", m.levenshtein}};
}

}  // namespace acgen::evaluation
