#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "slam/patterns.hpp"

namespace slam {

struct AccuracyRecord {
  double tpr = 0.0;
  double one_minus_fdr = 0.0;
  double coverage = 0.0;  // alias of tpr, reported against screening sets
  std::size_t support_size = 0;
};

// TPR = |A0 ∩ Â|/|A0|, 1-FDR = |A0 ∩ Â|/|Â|. Conventions for empty sets:
// both empty -> 1, only Â empty -> 0.
inline AccuracyRecord selection_metrics(const PatternSet& a0,
                                        const PatternSet& a_hat) {
  if (a0.K() != a_hat.K())
    throw std::invalid_argument("selection_metrics: K mismatch");
  AccuracyRecord rec;
  rec.support_size = a_hat.size();
  const std::size_t hits = a0.intersection_size(a_hat);
  if (a0.empty() && a_hat.empty()) {
    rec.tpr = rec.one_minus_fdr = 1.0;
  } else if (a_hat.empty()) {
    rec.tpr = rec.one_minus_fdr = 0.0;
  } else if (a0.empty()) {
    rec.tpr = 1.0;
    rec.one_minus_fdr = 0.0;
  } else {
    rec.tpr = double(hits) / double(a0.size());
    rec.one_minus_fdr = double(hits) / double(a_hat.size());
  }
  rec.coverage = rec.tpr;
  return rec;
}

// Per-pattern root mean square error of proportion estimates across
// replicates; estimates must be aligned to A0 (missing pattern -> 0).
inline std::vector<double> rmse_proportions(
    const std::vector<double>& truth,
    const std::vector<std::vector<double>>& estimates) {
  if (estimates.empty())
    throw std::invalid_argument("rmse_proportions: no replicates");
  for (const auto& e : estimates)
    if (e.size() != truth.size())
      throw std::invalid_argument("rmse_proportions: replicate length mismatch");
  std::vector<double> out(truth.size(), 0.0);
  for (const auto& e : estimates)
    for (std::size_t l = 0; l < truth.size(); ++l) {
      const double d = e[l] - truth[l];
      out[l] += d * d;
    }
  for (auto& v : out) v = std::sqrt(v / double(estimates.size()));
  return out;
}

struct HierarchyGraph {
  std::vector<std::vector<int>> groups;      // attribute indices per group
  std::vector<std::pair<int, int>> edges;    // (prerequisite group, dependent group)
};

namespace detail {

inline bool reachable(const std::vector<std::vector<int>>& adj, int from, int to) {
  std::vector<int> stack{from};
  std::vector<char> seen(adj.size(), 0);
  seen[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (u == to) return true;
    for (int v : adj[static_cast<std::size_t>(u)])
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
  }
  return false;
}

}  // namespace detail

// Groups attributes whose columns of the |Â| x K membership matrix coincide,
// draws a prerequisite edge when one group's column entrywise dominates
// another's with a strict gap, then reduces transitively for display.
inline HierarchyGraph extract_hierarchy(const PatternSet& a_hat) {
  if (a_hat.empty())
    throw std::invalid_argument("extract_hierarchy: empty pattern set");
  const int k = a_hat.K();
  std::vector<std::vector<char>> col(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    col[static_cast<std::size_t>(a)].reserve(a_hat.size());
    for (const auto& pat : a_hat)
      col[static_cast<std::size_t>(a)].push_back(pat.get(a) ? 1 : 0);
  }

  HierarchyGraph g;
  std::map<std::vector<char>, int> group_of_col;
  std::vector<int> group_of(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    auto [it, inserted] =
        group_of_col.emplace(col[static_cast<std::size_t>(a)],
                             static_cast<int>(g.groups.size()));
    if (inserted) g.groups.push_back({});
    g.groups[static_cast<std::size_t>(it->second)].push_back(a);
    group_of[static_cast<std::size_t>(a)] = it->second;
  }

  const int ngroups = static_cast<int>(g.groups.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(ngroups));
  std::vector<std::pair<int, int>> full_edges;
  for (int g1 = 0; g1 < ngroups; ++g1)
    for (int g2 = 0; g2 < ngroups; ++g2) {
      if (g1 == g2) continue;
      const auto& c1 = col[static_cast<std::size_t>(g.groups[static_cast<std::size_t>(g1)][0])];
      const auto& c2 = col[static_cast<std::size_t>(g.groups[static_cast<std::size_t>(g2)][0])];
      bool dominates = true, strict = false;
      for (std::size_t r = 0; r < c1.size(); ++r) {
        if (c1[r] < c2[r]) { dominates = false; break; }
        if (c1[r] > c2[r]) strict = true;
      }
      if (dominates && strict) {
        full_edges.emplace_back(g1, g2);
        adj[static_cast<std::size_t>(g1)].push_back(g2);
      }
    }

  // transitive reduction: keep (u,v) only when no alternative path exists
  for (const auto& [u, v] : full_edges) {
    bool redundant = false;
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (w == v) continue;
      if (detail::reachable(adj, w, v)) {
        redundant = true;
        break;
      }
    }
    if (!redundant) g.edges.emplace_back(u, v);
  }
  return g;
}

struct ReplicateSummary {
  double mean_tpr = 0.0, sd_tpr = 0.0;
  double mean_one_minus_fdr = 0.0, sd_one_minus_fdr = 0.0;
  double mean_support = 0.0;
};

inline ReplicateSummary summarize(const std::vector<AccuracyRecord>& recs) {
  if (recs.empty()) throw std::invalid_argument("summarize: no replicates");
  ReplicateSummary s;
  for (const auto& r : recs) {
    s.mean_tpr += r.tpr;
    s.mean_one_minus_fdr += r.one_minus_fdr;
    s.mean_support += double(r.support_size);
  }
  const double n = double(recs.size());
  s.mean_tpr /= n;
  s.mean_one_minus_fdr /= n;
  s.mean_support /= n;
  for (const auto& r : recs) {
    s.sd_tpr += (r.tpr - s.mean_tpr) * (r.tpr - s.mean_tpr);
    s.sd_one_minus_fdr += (r.one_minus_fdr - s.mean_one_minus_fdr) *
                          (r.one_minus_fdr - s.mean_one_minus_fdr);
  }
  s.sd_tpr = recs.size() > 1 ? std::sqrt(s.sd_tpr / (n - 1.0)) : 0.0;
  s.sd_one_minus_fdr =
      recs.size() > 1 ? std::sqrt(s.sd_one_minus_fdr / (n - 1.0)) : 0.0;
  return s;
}

}  // namespace slam
