#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "slam/patterns.hpp"
#include "slam/response_models.hpp"
#include "slam/rng.hpp"

namespace slam {

struct ScreenConfig {
  int m_max = 20;   // Gibbs sweeps per subject per outer iteration
  int m_eff = 10;   // trailing sweeps averaged into the occupation estimate
  int max_outer = 100;
  double tol = 1e-3;  // convergence on max |change of a_ave|
  std::optional<int> enhance_period;  // snapshot-union period (off if empty)
  double delta_gap = 0.01;            // enforced theta_plus - theta_minus gap
  std::uint64_t seed = 0;

  void validate() const {
    if (m_max < 1 || m_eff < 1 || m_eff > m_max)
      throw std::invalid_argument("ScreenConfig: need 1 <= m_eff <= m_max");
    if (max_outer < 1) throw std::invalid_argument("ScreenConfig: max_outer < 1");
    if (!(tol > 0.0)) throw std::invalid_argument("ScreenConfig: tol must be positive");
    if (enhance_period && *enhance_period < 1)
      throw std::invalid_argument("ScreenConfig: enhance_period < 1");
    if (!(delta_gap >= 0.0 && delta_gap < 1.0))
      throw std::invalid_argument("ScreenConfig: delta_gap out of range");
  }
};

struct ScreenResult {
  PatternSet a_screen;     // union of binarized subject profiles (+ snapshots)
  Eigen::MatrixXd a_ave;   // N x K attribute occupation probabilities
  std::vector<double> theta_plus;
  std::vector<double> theta_minus;
  int outer_iterations = 0;
  bool converged = false;
  int snapshots_used = 0;

  ScreenResult() : a_screen(1) {}
};

// Full conditional of attribute k for one subject given the rest of the
// profile: logistic of the capability-gated log-likelihood-ratio sum over the
// items that require attribute k. `profile` may hold probabilities (the
// variational variant) or 0/1 samples.
inline double gibbs_conditional_prob(const QMatrix& q, int k,
                                     const Eigen::RowVectorXd& profile,
                                     const Eigen::RowVectorXd& responses,
                                     const std::vector<double>& theta_plus,
                                     const std::vector<double>& theta_minus) {
  double score = 0.0;
  for (int j = 0; j < q.J(); ++j) {
    if (!q(j, k)) continue;
    double gate = 1.0;
    for (int m = 0; m < q.K(); ++m)
      if (m != k && q(j, m)) gate *= profile[m];
    if (gate == 0.0) continue;
    const double tp = theta_plus[static_cast<std::size_t>(j)];
    const double tm = theta_minus[static_cast<std::size_t>(j)];
    const double llr = responses[j] * std::log(tp / tm) +
                       (1.0 - responses[j]) * std::log((1.0 - tp) / (1.0 - tm));
    score += gate * llr;
  }
  return 1.0 / (1.0 + std::exp(-score));
}

namespace detail {

// Capability probability of subject i for item j under independent attribute
// marginals: prod over required attributes of a_ave(i,k).
inline double capability(const QMatrix& q, int j, const Eigen::MatrixXd& a_ave, int i) {
  double xi = 1.0;
  for (int k = 0; k < q.K(); ++k)
    if (q(j, k)) xi *= a_ave(i, k);
  return xi;
}

inline void update_theta(const QMatrix& q, const Eigen::MatrixXd& responses,
                         const Eigen::MatrixXd& a_ave, double delta_gap,
                         std::vector<double>& theta_plus,
                         std::vector<double>& theta_minus) {
  const Eigen::Index n = responses.rows();
  for (int j = 0; j < q.J(); ++j) {
    double num_p = 0.0, den_p = 0.0, num_m = 0.0, den_m = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = capability(q, j, a_ave, static_cast<int>(i));
      num_p += xi * responses(i, j);
      den_p += xi;
      num_m += (1.0 - xi) * responses(i, j);
      den_m += 1.0 - xi;
    }
    double tp = den_p > 0.0 ? num_p / den_p : theta_plus[static_cast<std::size_t>(j)];
    double tm = den_m > 0.0 ? num_m / den_m : theta_minus[static_cast<std::size_t>(j)];
    tp = std::clamp(tp, kThetaClampLo, kThetaClampHi);
    tm = std::clamp(tm, kThetaClampLo, kThetaClampHi);
    if (tp - tm < delta_gap) {
      const double mid = 0.5 * (tp + tm);
      tp = std::min(kThetaClampHi, mid + 0.5 * delta_gap);
      tm = std::max(kThetaClampLo, mid - 0.5 * delta_gap);
    }
    theta_plus[static_cast<std::size_t>(j)] = tp;
    theta_minus[static_cast<std::size_t>(j)] = tm;
  }
}

inline PatternSet binarize(const Eigen::MatrixXd& a_ave, int k) {
  PatternSet out(k);
  for (Eigen::Index i = 0; i < a_ave.rows(); ++i) {
    AttributePattern pat = AttributePattern::zeros(k);
    for (int a = 0; a < k; ++a)
      if (a_ave(i, a) > 0.5) pat = pat.with(a, true);
    out.add_unique(pat);
  }
  return out;
}

inline ScreenResult screen_impl(const Eigen::MatrixXd& responses, const QMatrix& q,
                                const ScreenConfig& cfg, bool variational) {
  cfg.validate();
  if (responses.cols() != q.J())
    throw std::invalid_argument("screen: response item count mismatch");
  const int n = static_cast<int>(responses.rows());
  const int k = q.K();
  if (n < 1) throw std::invalid_argument("screen: empty response matrix");

  std::vector<double> theta_plus(static_cast<std::size_t>(q.J()), 0.8);
  std::vector<double> theta_minus(static_cast<std::size_t>(q.J()), 0.2);

  // per-subject chains persist across outer iterations
  Rng root(cfg.seed);
  std::vector<Rng> chains;
  chains.reserve(static_cast<std::size_t>(n));
  Eigen::MatrixXd state(n, k);  // current samples (or probabilities)
  for (int i = 0; i < n; ++i) {
    chains.push_back(root.substream(static_cast<std::uint64_t>(i)));
    for (int a = 0; a < k; ++a)
      state(i, a) = variational ? 0.5 : double(chains.back().bernoulli(0.5));
  }

  Eigen::MatrixXd a_ave = Eigen::MatrixXd::Constant(n, k, 0.5);
  PatternSet snapshots(k);
  int snaps = 0;

  ScreenResult res;
  int t = 0;
  for (t = 1; t <= cfg.max_outer; ++t) {
    Eigen::MatrixXd i_ave = Eigen::MatrixXd::Zero(n, k);
    for (int i = 0; i < n; ++i) {
      Eigen::RowVectorXd profile = state.row(i);
      Eigen::RowVectorXd tail = Eigen::RowVectorXd::Zero(k);
      for (int sweep = 0; sweep < cfg.m_max; ++sweep) {
        for (int a = 0; a < k; ++a) {
          const double p = gibbs_conditional_prob(q, a, profile, responses.row(i),
                                                  theta_plus, theta_minus);
          profile[a] = variational ? p : double(chains[static_cast<std::size_t>(i)].bernoulli(p));
        }
        if (sweep >= cfg.m_max - cfg.m_eff) tail += profile;
      }
      state.row(i) = profile;
      i_ave.row(i) = tail / double(cfg.m_eff);
    }

    // running 1/t blend keeps early noisy iterations from dominating
    const Eigen::MatrixXd a_prev = a_ave;
    a_ave = (1.0 - 1.0 / double(t)) * a_ave + (1.0 / double(t)) * i_ave;

    update_theta(q, responses, a_ave, cfg.delta_gap, theta_plus, theta_minus);

    if (cfg.enhance_period && t % *cfg.enhance_period == 0) {
      snapshots = snapshots.set_union(binarize(a_ave, k));
      ++snaps;
    }

    const double change = (a_ave - a_prev).cwiseAbs().maxCoeff();
    if (change < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.outer_iterations = std::min(t, cfg.max_outer);
  res.a_ave = a_ave;
  res.theta_plus = theta_plus;
  res.theta_minus = theta_minus;
  res.snapshots_used = snaps;
  res.a_screen = binarize(a_ave, k).set_union(snapshots).sorted();
  return res;
}

}  // namespace detail

inline ScreenResult gibbs_screen(const Eigen::MatrixXd& responses, const QMatrix& q,
                                 const ScreenConfig& cfg) {
  return detail::screen_impl(responses, q, cfg, /*variational=*/false);
}

// Deterministic variant: coordinate updates carry the conditional probability
// itself instead of a Bernoulli draw.
inline ScreenResult variational_screen(const Eigen::MatrixXd& responses,
                                       const QMatrix& q, const ScreenConfig& cfg) {
  return detail::screen_impl(responses, q, cfg, /*variational=*/true);
}

inline PatternSet enhance_union(const ScreenResult& base,
                                const std::vector<PatternSet>& extras) {
  PatternSet out = base.a_screen;
  for (const auto& e : extras) out = out.set_union(e);
  return out.sorted();
}

}  // namespace slam
