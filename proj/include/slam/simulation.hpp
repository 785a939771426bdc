#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "slam/patterns.hpp"
#include "slam/response_models.hpp"
#include "slam/rng.hpp"

namespace slam {

enum class SimModel { two_param, all_effect };

struct SimDesign {
  int k = 10;
  int n = 500;
  SimModel model = SimModel::two_param;
  double noise = 0.1;   // two-param: theta_minus = noise, theta_plus = 1 - noise
  double base = 0.1;    // all-effect: empty-cell probability
  double top = 0.9;     // all-effect: full-cell probability
  int a0_size = 10;
  std::uint64_t seed = 0;

  int j() const { return 3 * k; }

  void validate() const {
    if (k < 3) throw std::invalid_argument("SimDesign: K must be at least 3");
    if (n < 1) throw std::invalid_argument("SimDesign: N must be positive");
    if (model == SimModel::two_param && !(noise > 0.0 && noise < 0.5))
      throw std::invalid_argument("SimDesign: noise must be in (0, 0.5)");
    if (model == SimModel::all_effect && !(base < top))
      throw std::invalid_argument("SimDesign: need base < top");
    if (a0_size < 1 ||
        (k <= 62 && static_cast<std::uint64_t>(a0_size) > (std::uint64_t(1) << k)))
      throw std::invalid_argument("SimDesign: |A0| out of range");
  }
};

// Three stacked K-by-K bands: identity, identity plus superdiagonal, and the
// tridiagonal block, giving J = 3K items.
inline QMatrix build_q_blocks(int k) {
  if (k < 3) throw std::invalid_argument("build_q_blocks: K must be at least 3");
  std::vector<std::vector<int>> rows;
  rows.reserve(static_cast<std::size_t>(3 * k));
  for (int i = 0; i < k; ++i) {
    std::vector<int> r(static_cast<std::size_t>(k), 0);
    r[static_cast<std::size_t>(i)] = 1;
    rows.push_back(std::move(r));
  }
  for (int i = 0; i < k; ++i) {
    std::vector<int> r(static_cast<std::size_t>(k), 0);
    r[static_cast<std::size_t>(i)] = 1;
    if (i + 1 < k) r[static_cast<std::size_t>(i + 1)] = 1;
    rows.push_back(std::move(r));
  }
  for (int i = 0; i < k; ++i) {
    std::vector<int> r(static_cast<std::size_t>(k), 0);
    if (i > 0) r[static_cast<std::size_t>(i - 1)] = 1;
    r[static_cast<std::size_t>(i)] = 1;
    if (i + 1 < k) r[static_cast<std::size_t>(i + 1)] = 1;
    rows.push_back(std::move(r));
  }
  return QMatrix::from_rows(rows);
}

// m distinct patterns sampled uniformly without replacement from {0,1}^K.
inline PatternSet gen_true_patterns(int k, int m, std::uint64_t seed) {
  if (k < 1 || k > 62) throw std::invalid_argument("gen_true_patterns: K out of range");
  const std::uint64_t space = std::uint64_t(1) << k;
  if (m < 0 || static_cast<std::uint64_t>(m) > space)
    throw std::invalid_argument("gen_true_patterns: m exceeds 2^K");
  Rng rng = Rng(seed).substream_named("patterns");
  std::unordered_set<std::uint64_t> seen;
  PatternSet out(k);
  while (out.size() < static_cast<std::size_t>(m)) {
    const std::uint64_t bits = rng.below(space);
    if (seen.insert(bits).second) out.add(AttributePattern(k, bits));
  }
  return out;
}

struct GeneratedData {
  Eigen::MatrixXd responses;  // N x J in {0,1}
  std::vector<int> assignments;  // index into theta.labels
};

// Subjects drawn from p, responses as independent Bernoulli draws; theta may
// contain exact 0/1 entries here since nothing takes a log.
inline GeneratedData gen_responses(const ThetaMatrix& theta,
                                   const ProportionVector& p, int n,
                                   std::uint64_t seed) {
  if (p.size() != theta.L())
    throw std::invalid_argument("gen_responses: proportion length mismatch");
  if (n < 1) throw std::invalid_argument("gen_responses: N must be positive");
  for (Eigen::Index j = 0; j < theta.values.rows(); ++j)
    for (Eigen::Index l = 0; l < theta.values.cols(); ++l)
      if (theta.values(j, l) < 0.0 || theta.values(j, l) > 1.0)
        throw std::invalid_argument("gen_responses: theta outside [0,1]");

  Rng assign_rng = Rng(seed).substream_named("assignments");
  Rng resp_rng = Rng(seed).substream_named("responses");
  const int j = static_cast<int>(theta.values.rows());
  GeneratedData out;
  out.responses.resize(n, j);
  out.assignments.resize(static_cast<std::size_t>(n));
  std::vector<double> probs(p.size());
  for (std::size_t l = 0; l < p.size(); ++l) probs[l] = p[l];
  for (int i = 0; i < n; ++i) {
    const int l = static_cast<int>(assign_rng.categorical(probs));
    out.assignments[static_cast<std::size_t>(i)] = l;
    for (int r = 0; r < j; ++r)
      out.responses(i, r) = resp_rng.bernoulli(theta.values(r, l)) ? 1.0 : 0.0;
  }
  return out;
}

struct Scenario {
  QMatrix q;
  PatternSet a0;
  ProportionVector p0;
  ThetaMatrix theta;
  GeneratedData data;

  Scenario()
      : q(QMatrix::from_rows({{1}})), a0(1),
        p0(Eigen::VectorXd::Ones(1)),
        theta(Eigen::MatrixXd(1, 0), PatternSet(1)) {}
};

// One full draw of a block-design scenario: Q, true pattern set, uniform
// proportions, model parameters, and an N x J response matrix.
inline Scenario make_scenario(const SimDesign& d) {
  d.validate();
  Scenario s;
  s.q = build_q_blocks(d.k);
  s.a0 = gen_true_patterns(d.k, d.a0_size, d.seed);
  s.p0 = ProportionVector(
      Eigen::VectorXd::Constant(d.a0_size, 1.0 / double(d.a0_size)));
  if (d.model == SimModel::two_param) {
    std::vector<double> tp(static_cast<std::size_t>(d.j()), 1.0 - d.noise);
    std::vector<double> tm(static_cast<std::size_t>(d.j()), d.noise);
    s.theta = theta_two_param(build_gamma(s.q, s.a0),
                              TwoParamItemParams(std::move(tp), std::move(tm)));
  } else {
    s.theta = theta_all_effect(
        s.q, AllEffectItemParams::equal_effects(s.q, d.base, d.top), s.a0);
  }
  s.data = gen_responses(s.theta, s.p0, d.n, d.seed);
  return s;
}

}  // namespace slam
