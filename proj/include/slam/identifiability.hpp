#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "slam/patterns.hpp"

namespace slam {

enum class IdVerdict { strict, generic, partial_only, unknown, fails_necessary };

inline const char* to_string(IdVerdict v) {
  switch (v) {
    case IdVerdict::strict: return "strict";
    case IdVerdict::generic: return "generic";
    case IdVerdict::partial_only: return "partial-only";
    case IdVerdict::unknown: return "unknown";
    case IdVerdict::fails_necessary: return "fails-necessary";
  }
  return "unknown";
}

struct ConditionAWitness {
  std::vector<int> s1;
  std::vector<int> s2;
};

struct IdentifiabilityReport {
  std::optional<ConditionAWitness> condition_a;
  bool condition_b = false;
  bool condition_c = false;
  IdVerdict verdict = IdVerdict::unknown;
  bool search_exhaustive = true;
  std::string notes;
};

namespace detail {

inline std::vector<int> mask_to_items(std::uint64_t mask) {
  std::vector<int> s;
  for (int j = 0; mask; ++j, mask >>= 1)
    if (mask & 1) s.push_back(j);
  return s;
}

inline bool distinct_columns_over(const GammaMatrix& g,
                                  const std::vector<int>& s) {
  const std::size_t l = g.L();
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = a + 1; b < l; ++b) {
      bool equal = true;
      for (int j : s)
        if (g(j, a) != g(j, b)) { equal = false; break; }
      if (equal) return false;
    }
  return true;
}

// Enumerate subset masks of {0..J-1} by ascending popcount, then by value.
inline std::vector<std::uint64_t> subset_masks_by_size(int j, int max_size) {
  std::vector<std::uint64_t> out;
  for (int size = 1; size <= max_size; ++size)
    for (std::uint64_t m = 0; m < (std::uint64_t(1) << j); ++m)
      if (__builtin_popcountll(m) == size) out.push_back(m);
  return out;
}

}  // namespace detail

// Condition A: two disjoint item sets S1, S2 whose restricted Gamma matrices
// both have distinct columns and which induce the same partial order.
// Exhaustive over subsets up to max_subset_size (capped; the flag out-param
// reports whether the search was exhaustive).
inline std::optional<ConditionAWitness> check_condition_A(
    const GammaMatrix& g, int max_subset_size = -1,
    bool* exhaustive = nullptr) {
  const int j = g.J();
  if (exhaustive) *exhaustive = true;
  if (j > 62) {
    if (exhaustive) *exhaustive = false;
    return std::nullopt;
  }
  if (max_subset_size < 0) max_subset_size = std::max(1, std::min(j / 2, 8));
  max_subset_size = std::min(max_subset_size, j);

  const auto masks = detail::subset_masks_by_size(j, max_subset_size);
  // cache distinctness per mask to avoid recomputation
  std::unordered_map<std::uint64_t, bool> distinct_cache;
  auto is_distinct = [&](std::uint64_t m) {
    auto it = distinct_cache.find(m);
    if (it != distinct_cache.end()) return it->second;
    bool d = detail::distinct_columns_over(g, detail::mask_to_items(m));
    distinct_cache.emplace(m, d);
    return d;
  };

  constexpr std::size_t kPairBudget = 4'000'000;
  std::size_t examined = 0;
  // sizes ascending via total |S1|+|S2|, then lexicographic mask order
  for (int total = 2; total <= 2 * max_subset_size; ++total) {
    for (auto m1 : masks) {
      const int sz1 = __builtin_popcountll(m1);
      const int sz2 = total - sz1;
      if (sz2 < 1 || sz2 > max_subset_size) continue;
      if (!is_distinct(m1)) continue;
      for (auto m2 : masks) {
        if (__builtin_popcountll(m2) != sz2 || (m1 & m2)) continue;
        if (++examined > kPairBudget) {
          if (exhaustive) *exhaustive = false;
          return std::nullopt;
        }
        if (!is_distinct(m2)) continue;
        auto s1 = detail::mask_to_items(m1);
        auto s2 = detail::mask_to_items(m2);
        if (orders_equal(g, s1, s2)) return ConditionAWitness{s1, s2};
      }
    }
  }
  return std::nullopt;
}

// Condition B given a witness: every ordered pair of distinct patterns that is
// comparable under S1 or S2 must be separated by some item outside S1 u S2.
inline bool check_condition_B(const GammaMatrix& g, const std::vector<int>& s1,
                              const std::vector<int>& s2) {
  std::unordered_set<int> inside(s1.begin(), s1.end());
  for (int j : s2) {
    if (inside.count(j))
      throw std::invalid_argument("check_condition_B: S1 and S2 not disjoint");
    inside.insert(j);
  }
  std::vector<int> outside;
  for (int j = 0; j < g.J(); ++j)
    if (!inside.count(j)) outside.push_back(j);

  const std::size_t l = g.L();
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b) {
      if (a == b) continue;
      if (!detail::geq_over(g, s1, b, a) && !detail::geq_over(g, s2, b, a))
        continue;
      bool separated = false;
      for (int j : outside)
        if (g(j, a) != g(j, b)) { separated = true; break; }
      if (!separated) return false;
    }
  return true;
}

// Condition C: no Gamma column of A0 coincides with a Gamma column of any
// pattern outside A0. The complement is enumerated lazily; K <= 20 guard.
inline bool check_condition_C(const QMatrix& q, const PatternSet& a0) {
  if (q.K() != a0.K())
    throw std::invalid_argument("check_condition_C: dimension mismatch");
  if (q.K() > 20)
    throw std::invalid_argument("check_condition_C: K over guard limit 20");

  const int j = q.J();
  std::vector<AttributePattern> qrows;
  for (int r = 0; r < j; ++r) qrows.push_back(q.row(r));

  auto column_key = [&](const AttributePattern& alpha) {
    std::string key(static_cast<std::size_t>(j), '0');
    for (int r = 0; r < j; ++r)
      if (alpha.dominates(qrows[static_cast<std::size_t>(r)]))
        key[static_cast<std::size_t>(r)] = '1';
    return key;
  };

  std::unordered_set<std::string> a0_columns;
  for (const auto& alpha : a0) a0_columns.insert(column_key(alpha));

  for (std::uint64_t v = 0; v < (std::uint64_t(1) << q.K()); ++v) {
    AttributePattern beta(q.K(), v);
    if (a0.contains(beta)) continue;
    if (a0_columns.count(column_key(beta))) return false;
  }
  return true;
}

// Composite strict-learnability check (Conditions A, B, C).
inline IdentifiabilityReport check_strict(const QMatrix& q, const PatternSet& a0,
                                          int max_subset_size = -1) {
  IdentifiabilityReport rep;
  rep.condition_c = check_condition_C(q, a0);
  if (!rep.condition_c) {
    rep.verdict = IdVerdict::fails_necessary;
    rep.notes = "Condition C fails: a true pattern shares its Gamma column with a pattern outside the set";
    return rep;
  }
  const GammaMatrix g = build_gamma(q, a0);
  rep.condition_a = check_condition_A(g, max_subset_size, &rep.search_exhaustive);
  if (!rep.condition_a) {
    rep.verdict = IdVerdict::unknown;
    rep.notes = rep.search_exhaustive
                    ? "no Condition A witness within subset-size bound"
                    : "Condition A search budget exhausted";
    return rep;
  }
  rep.condition_b = check_condition_B(g, rep.condition_a->s1, rep.condition_a->s2);
  rep.verdict = rep.condition_b ? IdVerdict::strict : IdVerdict::unknown;
  if (!rep.condition_b)
    rep.notes = "Condition B fails for the first Condition A witness";
  return rep;
}

namespace detail {

// Zero positions of Gamma within the given rows, as (row, col) pairs.
inline std::vector<std::pair<int, std::size_t>> zero_cells(
    const GammaMatrix& g, const std::vector<int>& rows) {
  std::vector<std::pair<int, std::size_t>> out;
  for (int j : rows)
    for (std::size_t l = 0; l < g.L(); ++l)
      if (!g(j, l)) out.emplace_back(j, l);
  return out;
}

inline GammaMatrix with_flips(const GammaMatrix& g,
                              const std::vector<std::pair<int, std::size_t>>& flips) {
  std::vector<std::uint8_t> e;
  e.reserve(static_cast<std::size_t>(g.J()) * g.L());
  for (int j = 0; j < g.J(); ++j)
    for (std::size_t l = 0; l < g.L(); ++l) e.push_back(g(j, l));
  for (auto [j, l] : flips)
    e[static_cast<std::size_t>(j) * g.L() + l] = 1;
  return GammaMatrix(g.J(), g.labels(), std::move(e));
}

// B-star: comparability from the ORIGINAL Gamma, separation from items
// outside S1 u S2 (where the flipped matrix equals the original).
inline bool condition_B_star(const GammaMatrix& original,
                             const std::vector<int>& s1,
                             const std::vector<int>& s2) {
  return check_condition_B(original, s1, s2);
}

}  // namespace detail

// Generic-identifiability search over 0->1 flips inside candidate S1 u S2 row
// pools (Conditions A-star / B-star). flip_budget bounds the total number of
// flipped entries; the search is exhaustive within that budget and the subset
// size bound, and non-exhaustive beyond.
inline bool check_generic_gamma(const GammaMatrix& g, const QMatrix& /*q*/,
                                const PatternSet& /*a0*/, int flip_budget = 2,
                                int max_subset_size = -1,
                                bool* exhaustive = nullptr) {
  const int j = g.J();
  if (exhaustive) *exhaustive = true;
  if (max_subset_size < 0) max_subset_size = std::max(1, std::min(j / 2, 8));

  // zero flips first: plain Condition A + B
  {
    bool ex = true;
    auto w = check_condition_A(g, max_subset_size, &ex);
    if (exhaustive) *exhaustive = ex;
    if (w && check_condition_B(g, w->s1, w->s2)) return true;
  }

  const auto masks = detail::subset_masks_by_size(j, max_subset_size);
  constexpr std::size_t kBudget = 2'000'000;
  std::size_t examined = 0;

  for (auto m1 : masks)
    for (auto m2 : masks) {
      if (m1 & m2) continue;
      auto s1 = detail::mask_to_items(m1);
      auto s2 = detail::mask_to_items(m2);
      std::vector<int> pool = s1;
      pool.insert(pool.end(), s2.begin(), s2.end());
      const auto zeros = detail::zero_cells(g, pool);

      // enumerate flip subsets up to flip_budget entries
      std::vector<std::size_t> pick;
      std::function<bool(std::size_t, int)> rec = [&](std::size_t start,
                                                      int remaining) -> bool {
        if (++examined > kBudget) {
          if (exhaustive) *exhaustive = false;
          return false;
        }
        {
          std::vector<std::pair<int, std::size_t>> flips;
          for (auto i : pick) flips.push_back(zeros[i]);
          const GammaMatrix flipped = detail::with_flips(g, flips);
          if (detail::distinct_columns_over(flipped, s1) &&
              detail::distinct_columns_over(flipped, s2) &&
              orders_equal(flipped, s1, s2) &&
              detail::condition_B_star(g, s1, s2))
            return true;
        }
        if (remaining == 0) return false;
        for (std::size_t i = start; i < zeros.size(); ++i) {
          pick.push_back(i);
          if (rec(i + 1, remaining - 1)) return true;
          pick.pop_back();
        }
        return false;
      };
      if (rec(0, flip_budget)) return true;
    }
  return false;
}

namespace detail {

// Augmenting-path matching of items (left) to attributes (right) along
// q_{item,attr} = 1 edges. Returns attribute -> item, or -1.
inline std::vector<int> bipartite_match(const QMatrix& q,
                                        const std::vector<int>& items) {
  std::vector<int> match_attr(static_cast<std::size_t>(q.K()), -1);
  std::vector<char> used;
  std::function<bool(int)> try_item = [&](int item) -> bool {
    for (int k = 0; k < q.K(); ++k) {
      if (!q(item, k) || used[static_cast<std::size_t>(k)]) continue;
      used[static_cast<std::size_t>(k)] = 1;
      if (match_attr[static_cast<std::size_t>(k)] == -1 ||
          try_item(match_attr[static_cast<std::size_t>(k)]))
        {
          match_attr[static_cast<std::size_t>(k)] = item;
          return true;
        }
    }
    return false;
  };
  for (int item : items) {
    used.assign(static_cast<std::size_t>(q.K()), 0);
    try_item(item);
  }
  return match_attr;
}

}  // namespace detail

// Q-level generic conditions: two disjoint K-item sets each admitting a
// perfect item-to-attribute matching (unit diagonals after row permutation),
// with the remaining items covering every attribute at least once.
inline bool check_generic_Q(const QMatrix& q) {
  const int k = q.K();
  if (q.J() < 2 * k + 1) return false;

  std::vector<int> all_items(static_cast<std::size_t>(q.J()));
  for (int j = 0; j < q.J(); ++j) all_items[static_cast<std::size_t>(j)] = j;

  const auto m1 = detail::bipartite_match(q, all_items);
  for (int a = 0; a < k; ++a)
    if (m1[static_cast<std::size_t>(a)] == -1) return false;

  std::unordered_set<int> used1(m1.begin(), m1.end());
  std::vector<int> rest;
  for (int j : all_items)
    if (!used1.count(j)) rest.push_back(j);

  const auto m2 = detail::bipartite_match(q, rest);
  for (int a = 0; a < k; ++a)
    if (m2[static_cast<std::size_t>(a)] == -1) return false;

  std::unordered_set<int> used2(m2.begin(), m2.end());
  std::vector<char> covered(static_cast<std::size_t>(k), 0);
  for (int j : rest) {
    if (used2.count(j)) continue;
    for (int a = 0; a < k; ++a)
      if (q(j, a)) covered[static_cast<std::size_t>(a)] = 1;
  }
  for (char c : covered)
    if (!c) return false;
  return true;
}

// Map from any pattern to its equivalence-class representative under the
// two-parameter model: the join of all q-rows the pattern dominates.
class EquivalenceMap {
 public:
  explicit EquivalenceMap(const QMatrix& q) : k_(q.K()) {
    for (int j = 0; j < q.J(); ++j) qrows_.push_back(q.row(j));
  }

  AttributePattern representative(const AttributePattern& alpha) const {
    AttributePattern rep = AttributePattern::zeros(k_);
    for (const auto& qj : qrows_)
      if (alpha.dominates(qj)) rep = rep.join(qj);
    return rep;
  }

 private:
  int k_;
  std::vector<AttributePattern> qrows_;
};

// A_Q: closure of {0_K} u {q_j} under coordinatewise max, in canonical order.
inline PatternSet equivalence_classes(const QMatrix& q) {
  PatternSet closure(q.K());
  closure.add_unique(AttributePattern::zeros(q.K()));
  for (int j = 0; j < q.J(); ++j) closure.add_unique(q.row(j));
  bool grew = true;
  while (grew) {
    grew = false;
    const auto snapshot = closure.members();
    for (std::size_t a = 0; a < snapshot.size(); ++a)
      for (std::size_t b = a + 1; b < snapshot.size(); ++b)
        if (closure.add_unique(snapshot[a].join(snapshot[b]))) grew = true;
  }
  return closure.sorted();
}

// Partial identifiability up to equivalence: Conditions A and B on the Gamma
// matrix of the representative patterns; Condition C holds automatically for
// representatives under the two-parameter model.
inline IdentifiabilityReport check_partial(const QMatrix& q,
                                           const PatternSet& a_rep,
                                           int max_subset_size = -1) {
  const EquivalenceMap em(q);
  for (const auto& alpha : a_rep)
    if (!(em.representative(alpha) == alpha))
      throw std::invalid_argument("check_partial: " + alpha.to_string() +
                                  " is not an equivalence-class representative");
  IdentifiabilityReport rep;
  rep.condition_c = true;
  const GammaMatrix g = build_gamma(q, a_rep);
  rep.condition_a = check_condition_A(g, max_subset_size, &rep.search_exhaustive);
  if (!rep.condition_a) {
    rep.verdict = IdVerdict::unknown;
    rep.notes = "no Condition A witness for the representative set";
    return rep;
  }
  rep.condition_b = check_condition_B(g, rep.condition_a->s1, rep.condition_a->s2);
  rep.verdict = rep.condition_b ? IdVerdict::partial_only : IdVerdict::unknown;
  return rep;
}

}  // namespace slam
