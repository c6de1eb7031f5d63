#pragma once

// Reference implementations written straight from the metric definitions.
// They favour obviousness over speed and share no code with the library.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

inline double log2_discount(std::size_t position) { return 1.0 / std::log2(static_cast<double>(position) + 1.0); }

inline std::size_t hits_in_prefix(const std::vector<std::string>& ranked, const std::set<std::string>& rel,
                                  std::size_t n) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n && i < ranked.size(); ++i) c += rel.count(ranked[i]);
  return c;
}

inline double dcg(const std::vector<std::string>& list, const std::set<std::string>& rel, std::size_t k) {
  double s = 0;
  for (std::size_t i = 0; i < k && i < list.size(); ++i) {
    if (rel.count(list[i])) s += log2_discount(i + 1);
  }
  return s;
}

struct Ranking {
  double p, r, f1, ndcg, hit, ap;
};

inline Ranking ranking(const std::vector<std::string>& ranked, const std::set<std::string>& rel, std::size_t k) {
  Ranking o{};
  double h = static_cast<double>(hits_in_prefix(ranked, rel, k));
  o.p = h / static_cast<double>(k);
  o.r = h / static_cast<double>(rel.size());
  o.f1 = (o.p + o.r) > 0 ? 2 * o.p * o.r / (o.p + o.r) : 0.0;
  o.hit = h > 0 ? 1.0 : 0.0;

  // Ideal list: every relevant id first, then the rest of the ranked list.
  std::vector<std::string> ideal(rel.begin(), rel.end());
  for (const auto& d : ranked) {
    if (!rel.count(d)) ideal.push_back(d);
  }
  o.ndcg = dcg(ranked, rel, k) / dcg(ideal, rel, k);

  double sum = 0;
  std::size_t n = 0;
  for (std::size_t r = 1; r <= ranked.size(); ++r) {
    if (!rel.count(ranked[r - 1])) continue;
    sum += static_cast<double>(hits_in_prefix(ranked, rel, r)) / static_cast<double>(r);
    ++n;
  }
  o.ap = n ? sum / static_cast<double>(n) : 0.0;
  return o;
}

/// Plain recursion on suffixes, memoized per call.
inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  auto go = [&](auto&& self, std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    long& m = memo[i][j];
    if (m >= 0) return static_cast<std::size_t>(m);
    std::size_t best;
    if (a[i] == b[j]) {
      best = self(self, i + 1, j + 1);
    } else {
      best = 1 + std::min({self(self, i + 1, j), self(self, i, j + 1), self(self, i + 1, j + 1)});
    }
    m = static_cast<long>(best);
    return best;
  };
  return go(go, 0, 0);
}

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::map<std::vector<std::string>, int> grams(const std::vector<std::string>& w, std::size_t n) {
  std::map<std::vector<std::string>, int> m;
  for (std::size_t i = 0; i + n <= w.size(); ++i) m[std::vector<std::string>(w.begin() + i, w.begin() + i + n)]++;
  return m;
}

inline int count_all(const std::map<std::vector<std::string>, int>& m) {
  int t = 0;
  for (const auto& [g, c] : m) t += c;
  return t;
}

inline bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& seq) {
  std::size_t j = 0;
  for (const auto& w : seq) {
    if (j < sub.size() && sub[j] == w) ++j;
  }
  return j == sub.size();
}

/// Longest common subsequence by trying every subsequence of `a` (|a| <= ~16).
inline std::size_t lcs_brute(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

struct Prf {
  double p, r, f;
};

inline Prf prf(double overlap, double cand_total, double ref_total) {
  Prf o{overlap / cand_total, overlap / ref_total, 0};
  o.f = o.p + o.r > 0 ? 2 * o.p * o.r / (o.p + o.r) : 0;
  return o;
}

/// mode: 1, 2 or 0 for LCS.
inline Prf rouge(const std::string& cand, const std::string& ref, int mode) {
  auto c = words(cand), r = words(ref);
  if (mode == 0) return prf(static_cast<double>(lcs_brute(c, r)), c.size(), r.size());
  auto cg = grams(c, mode), rg = grams(r, mode);
  int ct = count_all(cg), rt = count_all(rg);
  if (ct == 0 && rt == 0) {
    double v = c == r ? 1.0 : 0.0;
    return {v, v, v};
  }
  int overlap = 0;
  for (const auto& [g, n] : cg) {
    auto it = rg.find(g);
    if (it != rg.end()) overlap += std::min(n, it->second);
  }
  if (ct == 0 || rt == 0) return {0, 0, 0};
  return prf(overlap, ct, rt);
}

/// Sentence BLEU with uniform weights over orders 1..4, add-one on zero
/// matches, and the closest reference length (shorter on ties).
inline double bleu(const std::string& cand, const std::vector<std::string>& refs) {
  auto c = words(cand);
  std::vector<std::vector<std::string>> rs;
  for (const auto& r : refs) rs.push_back(words(r));
  double product = 1.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto cg = grams(c, n);
    int total = count_all(cg);
    if (total == 0) continue;
    int matched = 0;
    for (const auto& [g, cnt] : cg) {
      int best = 0;
      for (const auto& r : rs) {
        auto rg = grams(r, n);
        auto it = rg.find(g);
        if (it != rg.end()) best = std::max(best, it->second);
      }
      matched += std::min(cnt, best);
    }
    double p = matched ? static_cast<double>(matched) / total : 1.0 / (total + 1);
    product *= std::pow(p, 0.25);
  }
  std::size_t rlen = rs.front().size();
  for (const auto& r : rs) {
    long d = std::labs(static_cast<long>(r.size()) - static_cast<long>(c.size()));
    long bd = std::labs(static_cast<long>(rlen) - static_cast<long>(c.size()));
    if (d < bd || (d == bd && r.size() < rlen)) rlen = r.size();
  }
  double bp = c.size() >= rlen ? 1.0 : std::exp(1.0 - static_cast<double>(rlen) / c.size());
  return bp * product;
}

}  // namespace oracle
