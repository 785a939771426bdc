#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slam/identifiability.hpp"
#include "slam/patterns.hpp"
#include "slam/response_models.hpp"

namespace slam {

enum class ModelKind { two_param, all_effect };
enum class Algo { pem, fpvem, em };

inline const char* to_string(ModelKind m) {
  return m == ModelKind::two_param ? "two-param" : "all-effect";
}
inline const char* to_string(Algo a) {
  switch (a) {
    case Algo::pem: return "pem";
    case Algo::fpvem: return "fpvem";
    case Algo::em: return "em";
  }
  return "?";
}

struct FitConfig {
  ModelKind model = ModelKind::two_param;
  Algo algo = Algo::pem;
  double lambda = -1.0;   // PEM tuning, < 0
  double upsilon = 1.0;   // FP-VEM fractional power, in (0,1]
  double beta = 0.01;     // FP-VEM Dirichlet hyperparameter, in (0,1)
  double c = 0.01;        // PEM clamp constant
  double rho = -1.0;      // selection threshold; <= 0 means 1/(2N)
  double ebic_gamma = 1.0;
  int max_iter = 1000;
  double tol = 1e-6;
  std::uint64_t seed = 0;

  double resolved_rho(int n) const { return rho > 0.0 ? rho : 1.0 / (2.0 * n); }

  void validate() const {
    if (c <= 0.0 || c > 0.1)
      throw std::invalid_argument("FitConfig: c must be in (0, 0.1]");
    if (algo == Algo::pem && !(lambda < 0.0))
      throw std::invalid_argument("FitConfig: PEM requires lambda < 0");
    if (algo == Algo::fpvem) {
      if (!(upsilon > 0.0 && upsilon <= 1.0))
        throw std::invalid_argument("FitConfig: upsilon must be in (0,1]");
      if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("FitConfig: beta must be in (0,1)");
    }
    if (!(ebic_gamma >= 0.0 && ebic_gamma <= 1.0))
      throw std::invalid_argument("FitConfig: gamma must be in [0,1]");
    if (max_iter < 1) throw std::invalid_argument("FitConfig: max_iter < 1");
    if (!(tol > 0.0)) throw std::invalid_argument("FitConfig: tol must be positive");
    if (rho > 0.0 && !(rho < 1.0))
      throw std::invalid_argument("FitConfig: rho must be in (0,1)");
  }
};

// Raw (un-invariant-checked) item-parameter iterate; M-step outputs can sit on
// the boundary before clamping.
struct ItemParamsRaw {
  ModelKind kind = ModelKind::two_param;
  std::vector<double> theta_plus;              // two-param
  std::vector<double> theta_minus;             // two-param
  std::vector<std::vector<double>> theta_cells;  // all-effect, per item by cell
};

struct FitResult {
  ModelKind model = ModelKind::two_param;
  Algo algo = Algo::pem;
  double tuning = 0.0;  // lambda or upsilon
  ItemParamsRaw theta_hat;
  Eigen::VectorXd p_hat;      // aligned with `input` order
  PatternSet input;           // A_input as fitted
  PatternSet selected;        // {alpha : p_hat > rho}, canonical order
  std::vector<double> p_selected;  // renormalized, aligned with `selected`
  double loglik = 0.0;           // unpenalized, over A_input
  double loglik_selected = 0.0;  // over selected set, renormalized p
  double objective = 0.0;        // penalized objective of the algorithm
  double ebic = 0.0;
  int iterations = 0;
  bool converged = false;
  long clamp_events = 0;     // theta clamps + Delta floor hits
  long mstep_fallbacks = 0;  // zero-denominator cells kept at previous value
  std::vector<std::string> warnings;

  FitResult() : input(1), selected(1) {}
};

// Digamma via upward recurrence to x >= 8 plus the asymptotic series.
inline double digamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("digamma: x must be positive");
  double result = 0.0;
  while (x < 8.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv;
  result -= inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 -
                                    inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
  return result;
}

// Extended BIC with log-binomial via log-gamma.
inline double ebic(double loglik, int k, int n, int l_input, double gamma) {
  if (k < 0 || k > l_input)
    throw std::invalid_argument("ebic: support size exceeds candidate count");
  const double log_binom = std::lgamma(double(l_input) + 1.0) -
                           std::lgamma(double(k) + 1.0) -
                           std::lgamma(double(l_input - k) + 1.0);
  return -2.0 * loglik + double(k) * std::log(double(n)) + 2.0 * gamma * log_binom;
}

// log_rho truncation: log p above the threshold, log rho below.
inline double log_trunc(double p, double rho) {
  return std::log(p > rho ? p : rho);
}

// Penalized likelihood value: l(Theta,p) + lambda * sum log_rho(p_alpha).
inline double penalized_objective(const ThetaMatrix& theta,
                                  const ProportionVector& p,
                                  const Eigen::MatrixXd& responses,
                                  double lambda, double rho) {
  double pen = 0.0;
  for (std::size_t l = 0; l < p.size(); ++l) pen += log_trunc(p[l], rho);
  return log_likelihood(theta, p, responses) + lambda * pen;
}

// Responsibility matrix: phi_{i,l} proportional to w_l * P(R_i | alpha_l),
// normalized per row in the log domain.
inline Eigen::MatrixXd e_step(const ThetaMatrix& theta,
                              const Eigen::VectorXd& weights,
                              const Eigen::MatrixXd& responses) {
  if (weights.size() != static_cast<Eigen::Index>(theta.L()))
    throw std::invalid_argument("e_step: weight length mismatch");
  for (Eigen::Index l = 0; l < weights.size(); ++l)
    if (!(weights[l] > 0.0))
      throw std::invalid_argument("e_step: weights must be positive");
  detail::require_open_unit(theta);
  Eigen::MatrixXd ll = detail::per_pattern_loglik(theta, responses);
  ll.rowwise() += weights.array().log().matrix().transpose();
  for (Eigen::Index i = 0; i < ll.rows(); ++i) {
    const double mx = ll.row(i).maxCoeff();
    ll.row(i) = (ll.row(i).array() - mx).exp();
    ll.row(i) /= ll.row(i).sum();
  }
  return ll;
}

// Closed-form two-parameter M-step: weighted positive-response rates over
// capable / incapable mass. Zero denominators fall back to `prev` if given.
inline TwoParamItemParams m_step_two_param(
    const Eigen::MatrixXd& phi, const GammaMatrix& g,
    const Eigen::MatrixXd& responses,
    const TwoParamItemParams* prev = nullptr, long* fallbacks = nullptr) {
  const int j = g.J();
  Eigen::MatrixXd gd(j, static_cast<Eigen::Index>(g.L()));
  for (int r = 0; r < j; ++r)
    for (std::size_t l = 0; l < g.L(); ++l)
      gd(r, static_cast<Eigen::Index>(l)) = g(r, l);
  const Eigen::MatrixXd b = phi * gd.transpose();  // N x J capable mass
  std::vector<double> tp(static_cast<std::size_t>(j)), tm(static_cast<std::size_t>(j));
  for (int r = 0; r < j; ++r) {
    const double dplus = b.col(r).sum();
    const double nplus = (responses.col(r).array() * b.col(r).array()).sum();
    const double dminus = double(phi.rows()) - dplus;
    const double nminus = responses.col(r).sum() - nplus;
    if (dplus > 0.0) {
      tp[static_cast<std::size_t>(r)] = nplus / dplus;
    } else {
      tp[static_cast<std::size_t>(r)] = prev ? prev->theta_plus[static_cast<std::size_t>(r)] : 0.75;
      if (fallbacks) ++*fallbacks;
    }
    if (dminus > 0.0) {
      tm[static_cast<std::size_t>(r)] = nminus / dminus;
    } else {
      tm[static_cast<std::size_t>(r)] = prev ? prev->theta_minus[static_cast<std::size_t>(r)] : 0.25;
      if (fallbacks) ++*fallbacks;
    }
    tp[static_cast<std::size_t>(r)] = std::clamp(tp[static_cast<std::size_t>(r)], kThetaClampLo, kThetaClampHi);
    tm[static_cast<std::size_t>(r)] = std::clamp(tm[static_cast<std::size_t>(r)], kThetaClampLo, kThetaClampHi);
    if (!(tm[static_cast<std::size_t>(r)] < tp[static_cast<std::size_t>(r)])) {
      // keep strict ordering for the validated return type
      const double mid = 0.5 * (tm[static_cast<std::size_t>(r)] + tp[static_cast<std::size_t>(r)]);
      tp[static_cast<std::size_t>(r)] = std::min(kThetaClampHi, mid + 1e-6);
      tm[static_cast<std::size_t>(r)] = std::max(kThetaClampLo, mid - 1e-6);
    }
  }
  return TwoParamItemParams(std::move(tp), std::move(tm));
}

// All-effect M-step: per item and per required-attribute sub-profile cell,
// the phi-weighted response rate over subjects x patterns in that cell.
inline std::vector<std::vector<double>> m_step_all_effect(
    const Eigen::MatrixXd& phi, const QMatrix& q, const PatternSet& a,
    const Eigen::MatrixXd& responses,
    const std::vector<std::vector<double>>* prev = nullptr,
    long* fallbacks = nullptr) {
  const int j = q.J();
  const Eigen::MatrixXd v = responses.transpose() * phi;  // J x L
  const Eigen::VectorXd w = phi.colwise().sum();          // L
  std::vector<std::vector<double>> out(static_cast<std::size_t>(j));
  for (int r = 0; r < j; ++r) {
    const auto req = q.required_attributes(r);
    const std::size_t ncell = std::size_t(1) << req.size();
    std::vector<double> num(ncell, 0.0), den(ncell, 0.0);
    for (std::size_t l = 0; l < a.size(); ++l) {
      std::size_t cell = 0;
      for (std::size_t i = 0; i < req.size(); ++i)
        if (a[l].get(req[i])) cell |= std::size_t(1) << i;
      num[cell] += v(r, static_cast<Eigen::Index>(l));
      den[cell] += w[static_cast<Eigen::Index>(l)];
    }
    out[static_cast<std::size_t>(r)].resize(ncell);
    for (std::size_t cdx = 0; cdx < ncell; ++cdx) {
      if (den[cdx] > 0.0) {
        out[static_cast<std::size_t>(r)][cdx] =
            std::clamp(num[cdx] / den[cdx], kThetaClampLo, kThetaClampHi);
      } else {
        out[static_cast<std::size_t>(r)][cdx] =
            prev ? (*prev)[static_cast<std::size_t>(r)][cdx] : 0.5;
        if (fallbacks) ++*fallbacks;
      }
    }
  }
  return out;
}

// Warm-start state carried along a solution path.
struct FitInit {
  std::optional<Eigen::VectorXd> delta;
  std::optional<ItemParamsRaw> theta;
};

namespace detail {

struct FitProblem {
  const Eigen::MatrixXd& responses;  // N x J
  const QMatrix& q;
  const PatternSet& a_input;
  GammaMatrix gamma;                      // used by the two-param model
  std::vector<std::vector<int>> cell_of;  // [j][l] all-effect cell index
  std::vector<std::vector<int>> required;

  FitProblem(const Eigen::MatrixXd& r, const QMatrix& qq, const PatternSet& a)
      : responses(r), q(qq), a_input(a), gamma(build_gamma(qq, a)) {
    cell_of.resize(static_cast<std::size_t>(q.J()));
    required.resize(static_cast<std::size_t>(q.J()));
    for (int j = 0; j < q.J(); ++j) {
      required[static_cast<std::size_t>(j)] = q.required_attributes(j);
      const auto& req = required[static_cast<std::size_t>(j)];
      auto& row = cell_of[static_cast<std::size_t>(j)];
      row.resize(a.size());
      for (std::size_t l = 0; l < a.size(); ++l) {
        int cell = 0;
        for (std::size_t i = 0; i < req.size(); ++i)
          if (a[l].get(req[i])) cell |= 1 << i;
        row[l] = cell;
      }
    }
  }
};

inline ItemParamsRaw default_theta(ModelKind kind, const FitProblem& prob) {
  ItemParamsRaw t;
  t.kind = kind;
  const int j = prob.q.J();
  if (kind == ModelKind::two_param) {
    t.theta_plus.assign(static_cast<std::size_t>(j), 0.75);
    t.theta_minus.assign(static_cast<std::size_t>(j), 0.25);
  } else {
    const auto params = AllEffectItemParams::equal_effects(prob.q, 0.25, 0.75);
    for (const auto& it : params.items) t.theta_cells.push_back(it.theta_cell);
  }
  return t;
}

// Fills log theta / log(1-theta) (J x L), counting clamps to the open unit
// interval.
inline void build_log_theta(const FitProblem& prob, const ItemParamsRaw& t,
                            Eigen::MatrixXd& logt, Eigen::MatrixXd& log1mt,
                            long& clamp_events) {
  const int j = prob.q.J();
  const std::size_t l = prob.a_input.size();
  auto clamped = [&](double v) {
    if (v < kThetaClampLo || v > kThetaClampHi) {
      ++clamp_events;
      return std::clamp(v, kThetaClampLo, kThetaClampHi);
    }
    return v;
  };
  for (int r = 0; r < j; ++r) {
    if (t.kind == ModelKind::two_param) {
      const double tp = clamped(t.theta_plus[static_cast<std::size_t>(r)]);
      const double tm = clamped(t.theta_minus[static_cast<std::size_t>(r)]);
      const double ltp = std::log(tp), l1tp = std::log1p(-tp);
      const double ltm = std::log(tm), l1tm = std::log1p(-tm);
      for (std::size_t c = 0; c < l; ++c) {
        const bool cap = prob.gamma(r, c);
        logt(r, static_cast<Eigen::Index>(c)) = cap ? ltp : ltm;
        log1mt(r, static_cast<Eigen::Index>(c)) = cap ? l1tp : l1tm;
      }
    } else {
      const auto& cells = t.theta_cells[static_cast<std::size_t>(r)];
      std::vector<double> lc(cells.size()), l1c(cells.size());
      for (std::size_t cdx = 0; cdx < cells.size(); ++cdx) {
        const double v = clamped(cells[cdx]);
        lc[cdx] = std::log(v);
        l1c[cdx] = std::log1p(-v);
      }
      const auto& row = prob.cell_of[static_cast<std::size_t>(r)];
      for (std::size_t c = 0; c < l; ++c) {
        logt(r, static_cast<Eigen::Index>(c)) = lc[static_cast<std::size_t>(row[c])];
        log1mt(r, static_cast<Eigen::Index>(c)) = l1c[static_cast<std::size_t>(row[c])];
      }
    }
  }
}

inline ItemParamsRaw m_step(const FitProblem& prob, const Eigen::MatrixXd& phi,
                            const ItemParamsRaw& prev, long& fallbacks) {
  ItemParamsRaw out;
  out.kind = prev.kind;
  const int j = prob.q.J();
  if (prev.kind == ModelKind::two_param) {
    Eigen::MatrixXd gd(j, static_cast<Eigen::Index>(prob.a_input.size()));
    for (int r = 0; r < j; ++r)
      for (std::size_t l = 0; l < prob.a_input.size(); ++l)
        gd(r, static_cast<Eigen::Index>(l)) = prob.gamma(r, l);
    const Eigen::MatrixXd b = phi * gd.transpose();
    out.theta_plus.resize(static_cast<std::size_t>(j));
    out.theta_minus.resize(static_cast<std::size_t>(j));
    for (int r = 0; r < j; ++r) {
      const double dplus = b.col(r).sum();
      const double nplus = (prob.responses.col(r).array() * b.col(r).array()).sum();
      const double dminus = double(phi.rows()) - dplus;
      const double nminus = prob.responses.col(r).sum() - nplus;
      if (dplus > 0.0) {
        out.theta_plus[static_cast<std::size_t>(r)] = nplus / dplus;
      } else {
        out.theta_plus[static_cast<std::size_t>(r)] = prev.theta_plus[static_cast<std::size_t>(r)];
        ++fallbacks;
      }
      if (dminus > 0.0) {
        out.theta_minus[static_cast<std::size_t>(r)] = nminus / dminus;
      } else {
        out.theta_minus[static_cast<std::size_t>(r)] = prev.theta_minus[static_cast<std::size_t>(r)];
        ++fallbacks;
      }
    }
  } else {
    const Eigen::MatrixXd v = prob.responses.transpose() * phi;
    const Eigen::VectorXd w = phi.colwise().sum();
    out.theta_cells.resize(static_cast<std::size_t>(j));
    for (int r = 0; r < j; ++r) {
      const std::size_t ncell = prev.theta_cells[static_cast<std::size_t>(r)].size();
      std::vector<double> num(ncell, 0.0), den(ncell, 0.0);
      const auto& row = prob.cell_of[static_cast<std::size_t>(r)];
      for (std::size_t l = 0; l < prob.a_input.size(); ++l) {
        num[static_cast<std::size_t>(row[l])] += v(r, static_cast<Eigen::Index>(l));
        den[static_cast<std::size_t>(row[l])] += w[static_cast<Eigen::Index>(l)];
      }
      auto& cells = out.theta_cells[static_cast<std::size_t>(r)];
      cells.resize(ncell);
      for (std::size_t cdx = 0; cdx < ncell; ++cdx) {
        if (den[cdx] > 0.0) {
          cells[cdx] = num[cdx] / den[cdx];
        } else {
          cells[cdx] = prev.theta_cells[static_cast<std::size_t>(r)][cdx];
          ++fallbacks;
        }
      }
    }
  }
  return out;
}

inline double max_param_change(const ItemParamsRaw& a, const ItemParamsRaw& b) {
  double mx = 0.0;
  if (a.kind == ModelKind::two_param) {
    for (std::size_t j = 0; j < a.theta_plus.size(); ++j) {
      mx = std::max(mx, std::abs(a.theta_plus[j] - b.theta_plus[j]));
      mx = std::max(mx, std::abs(a.theta_minus[j] - b.theta_minus[j]));
    }
  } else {
    for (std::size_t j = 0; j < a.theta_cells.size(); ++j)
      for (std::size_t c = 0; c < a.theta_cells[j].size(); ++c)
        mx = std::max(mx, std::abs(a.theta_cells[j][c] - b.theta_cells[j][c]));
  }
  return mx;
}

inline ThetaMatrix theta_from_raw(const FitProblem& prob, const ItemParamsRaw& t) {
  const int j = prob.q.J();
  const std::size_t l = prob.a_input.size();
  Eigen::MatrixXd v(j, static_cast<Eigen::Index>(l));
  for (int r = 0; r < j; ++r)
    for (std::size_t c = 0; c < l; ++c) {
      double val;
      if (t.kind == ModelKind::two_param)
        val = prob.gamma(r, c) ? t.theta_plus[static_cast<std::size_t>(r)]
                               : t.theta_minus[static_cast<std::size_t>(r)];
      else
        val = t.theta_cells[static_cast<std::size_t>(r)]
                           [static_cast<std::size_t>(prob.cell_of[static_cast<std::size_t>(r)][c])];
      v(r, static_cast<Eigen::Index>(c)) = std::clamp(val, kThetaClampLo, kThetaClampHi);
    }
  return ThetaMatrix(std::move(v), prob.a_input);
}

inline FitResult run_fit(const Eigen::MatrixXd& responses, const QMatrix& q,
                         const PatternSet& a_input, const FitConfig& cfg,
                         const FitInit& init) {
  cfg.validate();
  if (q.K() != a_input.K())
    throw std::invalid_argument("fit: Q and A_input dimension mismatch");
  if (responses.cols() != q.J())
    throw std::invalid_argument("fit: response item count mismatch");
  const int n = static_cast<int>(responses.rows());
  const int j = q.J();
  const std::size_t l = a_input.size();
  const double rho = cfg.resolved_rho(n);

  FitProblem prob(responses, q, a_input);

  FitResult res;
  res.model = cfg.model;
  res.algo = cfg.algo;
  res.tuning = cfg.algo == Algo::fpvem ? cfg.upsilon
               : cfg.algo == Algo::pem ? cfg.lambda
                                       : 0.0;
  res.input = a_input;
  if (rho * double(l) > 10.0)
    res.warnings.push_back("selection threshold rho is far above uniform mass 1/|A_input|");
  if (!q.zero_rows().empty())
    res.warnings.push_back("Q-matrix has all-zero rows (those items constrain nothing)");

  Eigen::VectorXd delta;
  if (init.delta) {
    if (init.delta->size() != static_cast<Eigen::Index>(l))
      throw std::invalid_argument("fit: warm-start delta length mismatch");
    delta = *init.delta;
    if (cfg.algo == Algo::fpvem)
      delta = delta.cwiseMax(cfg.beta);
    else
      delta = delta.cwiseMax(cfg.c);
  } else if (cfg.algo == Algo::fpvem) {
    delta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(l), cfg.beta);
  } else {
    delta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(l),
                                      double(n) / double(l) + cfg.c);
  }

  ItemParamsRaw theta = init.theta ? *init.theta : default_theta(cfg.model, prob);
  if ((cfg.model == ModelKind::two_param) != (theta.kind == ModelKind::two_param))
    throw std::invalid_argument("fit: warm-start theta model kind mismatch");

  Eigen::MatrixXd logt(j, static_cast<Eigen::Index>(l));
  Eigen::MatrixXd log1mt(j, static_cast<Eigen::Index>(l));
  Eigen::MatrixXd ll(n, static_cast<Eigen::Index>(l));
  Eigen::MatrixXd phi(n, static_cast<Eigen::Index>(l));
  Eigen::VectorXd p_prev = delta / delta.sum();

  int iter = 0;
  bool converged = false;
  for (iter = 1; iter <= cfg.max_iter; ++iter) {
    build_log_theta(prob, theta, logt, log1mt, res.clamp_events);
    ll.noalias() = responses * (logt - log1mt);
    ll.rowwise() += log1mt.colwise().sum();

    Eigen::VectorXd logw(static_cast<Eigen::Index>(l));
    if (cfg.algo == Algo::fpvem) {
      for (Eigen::Index c = 0; c < logw.size(); ++c) logw[c] = digamma(delta[c]);
      phi = cfg.upsilon * ll;
    } else {
      logw = delta.array().log().matrix();
      phi = ll;
    }
    phi.rowwise() += logw.transpose();
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
      const double mx = phi.row(i).maxCoeff();
      if (!std::isfinite(mx))
        throw std::runtime_error("fit: non-finite E-step row at iteration " +
                                 std::to_string(iter));
      phi.row(i) = (phi.row(i).array() - mx).exp();
      phi.row(i) /= phi.row(i).sum();
    }

    const Eigen::VectorXd sums = phi.colwise().sum();
    if (cfg.algo == Algo::pem) {
      for (Eigen::Index c = 0; c < delta.size(); ++c) {
        const double v = cfg.lambda + sums[c];
        if (v < cfg.c) ++res.clamp_events;
        delta[c] = std::max(cfg.c, v);
      }
    } else if (cfg.algo == Algo::fpvem) {
      delta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(l), cfg.beta) +
              cfg.upsilon * sums;
    } else {
      delta = sums;
    }

    const ItemParamsRaw theta_new = m_step(prob, phi, theta, res.mstep_fallbacks);
    const Eigen::VectorXd p_new = delta / delta.sum();

    const double change = std::max(max_param_change(theta, theta_new),
                                   (p_new - p_prev).cwiseAbs().maxCoeff());
    theta = theta_new;
    p_prev = p_new;
    if (change < cfg.tol) {
      converged = true;
      break;
    }
  }
  res.iterations = std::min(iter, cfg.max_iter);
  res.converged = converged;
  res.theta_hat = theta;
  res.p_hat = delta / delta.sum();

  // final selection and reporting
  const ThetaMatrix theta_mat = theta_from_raw(prob, theta);
  const ProportionVector p_full{res.p_hat};
  res.loglik = log_likelihood(theta_mat, p_full, responses);
  if (!std::isfinite(res.loglik))
    throw std::runtime_error("fit: non-finite objective after " +
                             std::to_string(res.iterations) + " iterations");

  std::vector<std::size_t> sel_idx;
  for (std::size_t c = 0; c < l; ++c)
    if (res.p_hat[static_cast<Eigen::Index>(c)] > rho) sel_idx.push_back(c);
  {
    PatternSet sel(a_input.K());
    for (auto c : sel_idx) sel.add(a_input[c]);
    res.selected = sel.sorted();
  }

  switch (cfg.algo) {
    case Algo::pem:
    case Algo::em: {
      double pen = 0.0;
      for (std::size_t c = 0; c < l; ++c)
        pen += log_trunc(res.p_hat[static_cast<Eigen::Index>(c)], rho);
      res.objective = res.loglik + (cfg.algo == Algo::pem ? cfg.lambda : 0.0) * pen;
      break;
    }
    case Algo::fpvem: {
      double pen = 0.0;
      for (std::size_t c = 0; c < l; ++c)
        pen += log_trunc(res.p_hat[static_cast<Eigen::Index>(c)], rho);
      res.objective = cfg.upsilon * res.loglik + (cfg.beta - 1.0) * pen;
      break;
    }
  }

  if (sel_idx.empty()) {
    res.loglik_selected = -std::numeric_limits<double>::infinity();
    res.ebic = std::numeric_limits<double>::infinity();
  } else {
    // likelihood of the selected sub-model with renormalized proportions
    Eigen::MatrixXd theta_sel(j, static_cast<Eigen::Index>(sel_idx.size()));
    Eigen::VectorXd p_sel(static_cast<Eigen::Index>(sel_idx.size()));
    PatternSet labels(a_input.K());
    double mass = 0.0;
    for (auto c : sel_idx) mass += res.p_hat[static_cast<Eigen::Index>(c)];
    for (std::size_t t = 0; t < sel_idx.size(); ++t) {
      theta_sel.col(static_cast<Eigen::Index>(t)) =
          theta_mat.values.col(static_cast<Eigen::Index>(sel_idx[t]));
      p_sel[static_cast<Eigen::Index>(t)] =
          res.p_hat[static_cast<Eigen::Index>(sel_idx[t])] / mass;
      labels.add(a_input[sel_idx[t]]);
    }
    // renormalize exactly to the simplex to absorb rounding
    p_sel /= p_sel.sum();
    res.loglik_selected = log_likelihood(ThetaMatrix(theta_sel, labels),
                                         ProportionVector(p_sel), responses);
    res.ebic = ebic(res.loglik_selected, static_cast<int>(sel_idx.size()), n,
                    static_cast<int>(l), cfg.ebic_gamma);
    // expose selected proportions in the canonical (sorted) order of res.selected
    res.p_selected.resize(sel_idx.size());
    for (std::size_t t = 0; t < sel_idx.size(); ++t) {
      const auto pos = res.selected.index_of(labels[t]);
      res.p_selected[*pos] = p_sel[static_cast<Eigen::Index>(t)];
    }
  }
  return res;
}

}  // namespace detail

inline FitResult pem_fit(const Eigen::MatrixXd& responses, const QMatrix& q,
                         const PatternSet& a_input, const FitConfig& cfg,
                         const FitInit& init = {}) {
  FitConfig c = cfg;
  c.algo = Algo::pem;
  return detail::run_fit(responses, q, a_input, c, init);
}

inline FitResult fpvem_fit(const Eigen::MatrixXd& responses, const QMatrix& q,
                           const PatternSet& a_input, const FitConfig& cfg,
                           const FitInit& init = {}) {
  FitConfig c = cfg;
  c.algo = Algo::fpvem;
  return detail::run_fit(responses, q, a_input, c, init);
}

inline FitResult em_fit(const Eigen::MatrixXd& responses, const QMatrix& q,
                        const PatternSet& a_input, const FitConfig& cfg,
                        const FitInit& init = {}) {
  FitConfig c = cfg;
  c.algo = Algo::em;
  return detail::run_fit(responses, q, a_input, c, init);
}

struct SolutionPath {
  std::vector<double> tuning;
  std::vector<FitResult> fits;
  std::size_t chosen = 0;

  const FitResult& best() const { return fits[chosen]; }
};

inline std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 20; ++i) g.push_back(-0.2 * i);
  return g;
}

inline std::vector<double> default_upsilon_grid() {
  std::vector<double> g;
  for (int i = 10; i >= 3; --i) g.push_back(0.1 * i);
  return g;
}

// Sequential fits over a strictly descending tuning grid with warm starts;
// the chosen entry minimizes EBIC, ties broken toward the sparser model and
// then the earlier grid position.
inline SolutionPath solution_path(const Eigen::MatrixXd& responses,
                                  const QMatrix& q, const PatternSet& a_input,
                                  const std::vector<double>& grid,
                                  const FitConfig& cfg) {
  if (grid.empty()) throw std::invalid_argument("solution_path: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] < grid[i - 1]))
      throw std::invalid_argument("solution_path: grid must be strictly descending");

  SolutionPath path;
  path.tuning = grid;
  FitInit init;
  for (std::size_t b = 0; b < grid.size(); ++b) {
    FitConfig c = cfg;
    if (cfg.algo == Algo::fpvem)
      c.upsilon = grid[b];
    else
      c.lambda = grid[b];
    FitResult fit;
    try {
      fit = detail::run_fit(responses, q, a_input, c, init);
    } catch (const std::exception& ex) {
      throw std::runtime_error("solution_path: fit failed at grid position " +
                               std::to_string(b) + " (tuning " +
                               std::to_string(grid[b]) + "): " + ex.what());
    }
    init.delta = fit.p_hat * double(responses.rows());
    init.theta = fit.theta_hat;
    path.fits.push_back(std::move(fit));
  }
  path.chosen = 0;
  for (std::size_t b = 1; b < path.fits.size(); ++b) {
    const auto& cur = path.fits[b];
    const auto& best = path.fits[path.chosen];
    if (cur.ebic < best.ebic ||
        (cur.ebic == best.ebic && cur.selected.size() < best.selected.size()))
      path.chosen = b;
  }
  return path;
}

// PEM over the Q-induced equivalence classes: A_input = A_Q, proportions are
// class masses, selected members are class representatives.
inline FitResult pem_fit_equiv(const Eigen::MatrixXd& responses, const QMatrix& q,
                               const FitConfig& cfg, const FitInit& init = {}) {
  if (cfg.model != ModelKind::two_param)
    throw std::invalid_argument("pem_fit_equiv: two-parameter model only");
  return pem_fit(responses, q, equivalence_classes(q), cfg, init);
}

}  // namespace slam
