#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "slam/patterns.hpp"
#include "slam/rng.hpp"

namespace slam {

inline constexpr double kThetaClampLo = 1e-6;
inline constexpr double kThetaClampHi = 1.0 - 1e-6;

// Two levels of item parameters per item: theta+ for capable patterns,
// theta- for the rest. Monotonicity 0 < theta- < theta+ < 1 enforced.
struct TwoParamItemParams {
  std::vector<double> theta_plus;
  std::vector<double> theta_minus;

  TwoParamItemParams(std::vector<double> tp, std::vector<double> tm)
      : theta_plus(std::move(tp)), theta_minus(std::move(tm)) {
    if (theta_plus.size() != theta_minus.size())
      throw std::invalid_argument("TwoParamItemParams: length mismatch");
    if (theta_plus.empty())
      throw std::invalid_argument("TwoParamItemParams: no items");
    for (std::size_t j = 0; j < theta_plus.size(); ++j) {
      if (!(0.0 < theta_minus[j] && theta_minus[j] < theta_plus[j] &&
            theta_plus[j] < 1.0))
        throw std::invalid_argument(
            "TwoParamItemParams: need 0 < theta- < theta+ < 1 at item " +
            std::to_string(j));
    }
  }

  // Uniform noise setting 1-theta+ = theta- = noise across items.
  static TwoParamItemParams uniform_noise(int j, double noise) {
    return TwoParamItemParams(std::vector<double>(j, 1.0 - noise),
                              std::vector<double>(j, noise));
  }

  int J() const { return static_cast<int>(theta_plus.size()); }
};

// Identity-link all-effect parameters, stored per item as response
// probabilities indexed by the sub-profile of the required attribute set K_j
// (cell 0 is the empty profile, the top cell is the full K_j).
//
// The beta coefficients of the sum-over-subsets form relate to the cell
// values by the zeta transform theta_cell = sum_{S subset of cell} beta_S.
struct AllEffectItemParams {
  struct Item {
    std::vector<int> required;      // attribute indices in K_j, ascending
    std::vector<double> theta_cell;  // size 2^|K_j|
  };
  std::vector<Item> items;

  explicit AllEffectItemParams(std::vector<Item> its) : items(std::move(its)) {
    if (items.empty()) throw std::invalid_argument("AllEffectItemParams: no items");
    for (std::size_t j = 0; j < items.size(); ++j) validate_item(j);
  }

  int J() const { return static_cast<int>(items.size()); }

  // Coefficients beta_S given per item, indexed by subset mask of K_j.
  static AllEffectItemParams from_beta(
      const QMatrix& q, const std::vector<std::vector<double>>& beta) {
    if (static_cast<int>(beta.size()) != q.J())
      throw std::invalid_argument("from_beta: item count mismatch");
    std::vector<Item> items;
    for (int j = 0; j < q.J(); ++j) {
      Item it;
      it.required = q.required_attributes(j);
      const std::size_t ncell = std::size_t(1) << it.required.size();
      if (beta[j].size() != ncell)
        throw std::invalid_argument("from_beta: coefficient set does not match K_j at item " +
                                    std::to_string(j));
      it.theta_cell.assign(ncell, 0.0);
      for (std::size_t cell = 0; cell < ncell; ++cell)
        for (std::size_t s = 0; s < ncell; ++s)
          if ((s & cell) == s) it.theta_cell[cell] += beta[j][s];
      items.push_back(std::move(it));
    }
    return AllEffectItemParams(std::move(items));
  }

  // Equal main and interaction effects: baseline at the empty profile, `top`
  // at the full profile, every nonempty effect coefficient identical.
  static AllEffectItemParams equal_effects(const QMatrix& q, double base,
                                           double top) {
    std::vector<std::vector<double>> beta(q.J());
    for (int j = 0; j < q.J(); ++j) {
      const std::size_t m = q.required_attributes(j).size();
      const std::size_t ncell = std::size_t(1) << m;
      beta[j].assign(ncell, 0.0);
      beta[j][0] = base;
      if (ncell > 1) {
        const double each = (top - base) / static_cast<double>(ncell - 1);
        for (std::size_t s = 1; s < ncell; ++s) beta[j][s] = each;
      }
      // an all-zero q-row yields a single cell; its value is `base`
    }
    return from_beta(q, beta);
  }

  // Cell index of a pattern at item j: bit i set when the pattern possesses
  // required attribute i (bit 0 = first required attribute).
  std::size_t cell_of(int j, const AttributePattern& alpha) const {
    const auto& req = items[static_cast<std::size_t>(j)].required;
    std::size_t cell = 0;
    for (std::size_t i = 0; i < req.size(); ++i)
      if (alpha.get(req[i])) cell |= std::size_t(1) << i;
    return cell;
  }

 private:
  void validate_item(std::size_t j) const {
    const auto& it = items[j];
    const std::size_t ncell = std::size_t(1) << it.required.size();
    if (it.theta_cell.size() != ncell)
      throw std::invalid_argument("AllEffectItemParams: cell count mismatch at item " +
                                  std::to_string(j));
    for (double t : it.theta_cell)
      if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument(
            "AllEffectItemParams: implied probability outside (0,1) at item " +
            std::to_string(j));
    // monotonicity: the full-profile cell strictly exceeds every other cell
    if (ncell > 1) {
      const double topv = it.theta_cell[ncell - 1];
      for (std::size_t c = 0; c + 1 < ncell; ++c)
        if (!(topv > it.theta_cell[c]))
          throw std::invalid_argument(
              "AllEffectItemParams: monotonicity violated at item " +
              std::to_string(j));
    }
  }
};

// J x L item response probabilities over a PatternSet.
struct ThetaMatrix {
  Eigen::MatrixXd values;  // J x L
  PatternSet labels;

  ThetaMatrix(Eigen::MatrixXd v, PatternSet l)
      : values(std::move(v)), labels(std::move(l)) {
    if (values.cols() != static_cast<Eigen::Index>(labels.size()))
      throw std::invalid_argument("ThetaMatrix: label count mismatch");
  }

  int J() const { return static_cast<int>(values.rows()); }
  std::size_t L() const { return labels.size(); }
};

// Length-L mixture proportions on the simplex.
struct ProportionVector {
  Eigen::VectorXd p;

  explicit ProportionVector(Eigen::VectorXd v) : p(std::move(v)) {
    double sum = 0.0;
    for (Eigen::Index l = 0; l < p.size(); ++l) {
      if (p[l] < 0.0) throw std::invalid_argument("ProportionVector: negative entry");
      sum += p[l];
    }
    if (std::abs(sum - 1.0) > 1e-10)
      throw std::invalid_argument("ProportionVector: entries must sum to 1");
  }

  std::size_t size() const { return static_cast<std::size_t>(p.size()); }
  double operator[](std::size_t l) const { return p[static_cast<Eigen::Index>(l)]; }
};

inline ThetaMatrix theta_two_param(const GammaMatrix& g,
                                   const TwoParamItemParams& params) {
  if (params.J() != g.J())
    throw std::invalid_argument("theta_two_param: item count mismatch");
  Eigen::MatrixXd v(g.J(), static_cast<Eigen::Index>(g.L()));
  for (int j = 0; j < g.J(); ++j)
    for (std::size_t l = 0; l < g.L(); ++l)
      v(j, static_cast<Eigen::Index>(l)) =
          g(j, l) ? params.theta_plus[j] : params.theta_minus[j];
  return ThetaMatrix(std::move(v), g.labels());
}

inline ThetaMatrix theta_all_effect(const QMatrix& q,
                                    const AllEffectItemParams& params,
                                    const PatternSet& a) {
  if (params.J() != q.J())
    throw std::invalid_argument("theta_all_effect: item count mismatch");
  if (q.K() != a.K())
    throw std::invalid_argument("theta_all_effect: dimension mismatch");
  Eigen::MatrixXd v(q.J(), static_cast<Eigen::Index>(a.size()));
  for (int j = 0; j < q.J(); ++j)
    for (std::size_t l = 0; l < a.size(); ++l)
      v(j, static_cast<Eigen::Index>(l)) =
          params.items[j].theta_cell[params.cell_of(j, a[l])];
  return ThetaMatrix(std::move(v), a);
}

namespace detail {

inline void require_open_unit(const ThetaMatrix& theta) {
  for (int j = 0; j < theta.J(); ++j)
    for (Eigen::Index l = 0; l < theta.values.cols(); ++l) {
      double t = theta.values(j, l);
      if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("theta entry not in open (0,1)");
    }
}

// Per-pattern log P(R_i | alpha_l): LL = R * (log t - log(1-t)) + 1 * colsum log(1-t).
inline Eigen::MatrixXd per_pattern_loglik(const ThetaMatrix& theta,
                                          const Eigen::MatrixXd& responses) {
  const Eigen::MatrixXd logt = theta.values.array().log().matrix();
  const Eigen::MatrixXd log1mt = (1.0 - theta.values.array()).log().matrix();
  Eigen::MatrixXd ll = responses * (logt - log1mt);
  ll.rowwise() += log1mt.colwise().sum();
  return ll;  // N x L
}

}  // namespace detail

inline Eigen::MatrixXd to_matrix(const std::vector<std::vector<std::uint8_t>>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw std::invalid_argument("to_matrix: ragged rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

// Marginal log-likelihood, Eq-style sum over patterns with per-row log-sum-exp.
inline double log_likelihood(const ThetaMatrix& theta, const ProportionVector& p,
                             const Eigen::MatrixXd& responses) {
  if (p.size() != theta.L())
    throw std::invalid_argument("log_likelihood: proportion length mismatch");
  if (responses.cols() != theta.J())
    throw std::invalid_argument("log_likelihood: item count mismatch");
  detail::require_open_unit(theta);
  const Eigen::MatrixXd ll = detail::per_pattern_loglik(theta, responses);
  Eigen::VectorXd logp(p.p.size());
  for (Eigen::Index l = 0; l < p.p.size(); ++l)
    logp[l] = p.p[l] > 0.0 ? std::log(p.p[l])
                           : -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (Eigen::Index i = 0; i < ll.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < ll.cols(); ++l)
      mx = std::max(mx, ll(i, l) + logp[l]);
    double s = 0.0;
    for (Eigen::Index l = 0; l < ll.cols(); ++l)
      s += std::exp(ll(i, l) + logp[l] - mx);
    total += mx + std::log(s);
  }
  return total;
}

// P(R = r) for one response vector; brute-force-friendly helper.
inline double response_pmf(const ThetaMatrix& theta, const ProportionVector& p,
                           const std::vector<std::uint8_t>& r) {
  if (static_cast<int>(r.size()) != theta.J())
    throw std::invalid_argument("response_pmf: length mismatch");
  double total = 0.0;
  for (std::size_t l = 0; l < theta.L(); ++l) {
    double prod = p[l];
    for (int j = 0; j < theta.J(); ++j) {
      double t = theta.values(j, static_cast<Eigen::Index>(l));
      prod *= r[j] ? t : (1.0 - t);
    }
    total += prod;
  }
  return total;
}

// 2^J x L matrix with T_{r,alpha} = prod_{j: r_j=1} theta_{j,alpha}.
// Row index of r uses r_1 as the most significant bit.
inline Eigen::MatrixXd t_matrix(const ThetaMatrix& theta) {
  const int j = theta.J();
  if (j > 20) throw std::invalid_argument("t_matrix: J over guard limit 20");
  const std::size_t rows = std::size_t(1) << j;
  const std::size_t l = theta.L();
  Eigen::MatrixXd t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(l));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < l; ++c) {
      double prod = 1.0;
      for (int jj = 0; jj < j; ++jj)
        if ((r >> (j - 1 - jj)) & 1)
          prod *= theta.values(jj, static_cast<Eigen::Index>(c));
      t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = prod;
    }
  return t;
}

// Numerical stand-in for the full-column-rank requirement: samples valid
// two-parameter theta respecting the constraint structure and checks the
// T-matrix keeps full column rank in every trial.
inline bool t_rank_probe(const GammaMatrix& g, int trials, std::uint64_t seed) {
  if (g.L() > (std::size_t(1) << g.J())) return false;
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    std::vector<double> tp(static_cast<std::size_t>(g.J()));
    std::vector<double> tm(static_cast<std::size_t>(g.J()));
    for (int j = 0; j < g.J(); ++j) {
      tp[static_cast<std::size_t>(j)] = 0.55 + 0.4 * rng.uniform();
      tm[static_cast<std::size_t>(j)] = 0.05 + 0.4 * rng.uniform();
    }
    const ThetaMatrix theta =
        theta_two_param(g, TwoParamItemParams(std::move(tp), std::move(tm)));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(t_matrix(theta));
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return false;
    const double thresh = 1e-8 * sv[0];
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv[i] > thresh) ++rank;
    if (rank != static_cast<Eigen::Index>(g.L())) return false;
  }
  return true;
}

}  // namespace slam
