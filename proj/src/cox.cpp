#include "cif/cox.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cif/errors.hpp"
#include "cif/kernels.hpp"

namespace cif {

namespace {

// Covariates centered at their column means. The partial likelihood depends on
// covariate differences only, so centering changes nothing but rounding.
struct CenteredDesign {
  std::vector<std::vector<double>> columns;
  std::vector<bool> varies;
};

CenteredDesign center(const RiskSetData& data) {
  const std::size_t n = data.size();
  CenteredDesign out;
  out.columns.resize(data.covariate_dim());
  out.varies.resize(data.covariate_dim());
  for (std::size_t c = 0; c < data.covariate_dim(); ++c) {
    auto col = data.column(c);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    out.varies[c] = n > 0 && *lo != *hi;
    const double mean = n > 0 ? std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n) : 0.0;
    out.columns[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) out.columns[c][i] = col[i] - mean;
  }
  return out;
}

PartialLikelihood evaluate(const RiskSetData& data, const CenteredDesign& x, int cause, std::span<const double> beta) {
  const std::size_t n = data.size();
  const std::size_t d = x.columns.size();
  PartialLikelihood out;
  out.score = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  out.hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  if (n == 0) return out;

  std::vector<double> eta(n, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    if (beta[c] != 0.0) kernels::axpy(beta[c], x.columns[c], eta);
  }
  const double shift = kernels::max_value(eta);
  std::vector<double> theta(n);
  kernels::scaled_exp(eta, data.weights(), shift, theta);

  const auto events = data.events();
  const auto weights = data.weights();
  const auto start = data.risk_start();

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::VectorXd xi(static_cast<Eigen::Index>(d));

  std::size_t group_end = n;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t c = 0; c < d; ++c) xi[static_cast<Eigen::Index>(c)] = x.columns[c][i];
    s0 += theta[i];
    if (d > 0) {
      s1.noalias() += theta[i] * xi;
      s2.noalias() += theta[i] * xi * xi.transpose();
    }
    if (start[i] != i) continue;
    // [i, group_end) share one time; everyone in it is at risk there.
    const double log_s0 = std::log(s0) + shift;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    bool have_moments = false;
    for (std::size_t e = i; e < group_end; ++e) {
      if (events[e] != cause) continue;
      const double w = weights[e];
      out.loglik += w * (eta[e] - log_s0);
      if (d == 0) continue;
      if (!have_moments) {
        mean = s1 / s0;
        cov = s2 / s0 - mean * mean.transpose();
        have_moments = true;
      }
      for (std::size_t c = 0; c < d; ++c) xi[static_cast<Eigen::Index>(c)] = x.columns[c][e];
      out.score.noalias() += w * (xi - mean);
      out.hessian.noalias() -= w * cov;
    }
    group_end = i;
  }
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  return out;
}

double max_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double max_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void store(CoxFit& fit, const PartialLikelihood& pl) {
  fit.loglik = pl.loglik;
  fit.score.assign(pl.score.data(), pl.score.data() + pl.score.size());
  fit.score_norm_at_opt = max_norm(pl.score);
  fit.hessian = pl.hessian;
}

}  // namespace

PartialLikelihood evaluate_partial_likelihood(const RiskSetData& data, int cause, std::span<const double> beta) {
  if (beta.size() != data.covariate_dim()) throw Error(ErrorCode::InvalidArgument, "beta length mismatch");
  return evaluate(data, center(data), cause, beta);
}

CoxFit fit_cause_specific(const RiskSetData& data, int cause, std::span<const double> init, const CoxOptions& options) {
  if (cause < 1 || cause > data.num_causes()) {
    throw Error(ErrorCode::InvalidArgument, "cause " + std::to_string(cause) + " out of range");
  }
  const std::size_t d = data.covariate_dim();
  if (!init.empty() && init.size() != d) throw Error(ErrorCode::InvalidArgument, "initial beta length mismatch");

  CoxFit fit;
  fit.cause = cause;
  fit.beta.assign(d, 0.0);

  const auto& index = data.index();
  const bool has_events = std::find(index.cause.begin(), index.cause.end(), cause) != index.cause.end();
  const CenteredDesign x = center(data);

  if (!has_events) {
    if (!options.allow_degenerate) {
      throw Error(ErrorCode::NoEventsForCause, "no events of cause " + std::to_string(cause));
    }
    store(fit, evaluate(data, x, cause, fit.beta));
    fit.converged = true;
    fit.degenerate = true;
    fit.diagnostic = "no events of this cause; beta fixed at 0";
    return fit;
  }

  std::vector<std::size_t> active;
  for (std::size_t c = 0; c < d; ++c) {
    if (x.varies[c]) active.push_back(c);
  }
  if (active.size() < d) {
    fit.degenerate = true;
    fit.diagnostic = "constant covariate column(s); their coefficients fixed at 0";
  }
  if (!init.empty()) {
    for (std::size_t c : active) fit.beta[c] = init[c];
  }

  PartialLikelihood cur = evaluate(data, x, cause, fit.beta);
  auto active_score = [&](const PartialLikelihood& pl) {
    double m = 0.0;
    for (std::size_t c : active) m = std::max(m, std::abs(pl.score[static_cast<Eigen::Index>(c)]));
    return m;
  };

  const auto na = static_cast<Eigen::Index>(active.size());
  bool stalled = false;
  const double tiny = 64 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(cur.loglik));
  while (fit.iterations < options.max_iter && active_score(cur) > options.score_tol && !active.empty()) {
    ++fit.iterations;
    Eigen::VectorXd u(na);
    Eigen::MatrixXd info(na, na);
    for (Eigen::Index a = 0; a < na; ++a) {
      u[a] = cur.score[static_cast<Eigen::Index>(active[a])];
      for (Eigen::Index b = 0; b < na; ++b) {
        info(a, b) = -cur.hessian(static_cast<Eigen::Index>(active[a]), static_cast<Eigen::Index>(active[b]));
      }
    }
    Eigen::VectorXd step = info.completeOrthogonalDecomposition().solve(u);

    std::vector<double> trial = fit.beta;
    PartialLikelihood next;
    bool improved = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      for (Eigen::Index a = 0; a < na; ++a) trial[active[a]] = fit.beta[active[a]] + step[a];
      next = evaluate(data, x, cause, trial);
      // Near the optimum the likelihood change drowns in rounding; a shrinking score still counts.
      const bool flat = std::abs(next.loglik - cur.loglik) <= tiny && active_score(next) < active_score(cur);
      if (std::isfinite(next.loglik) && (next.loglik >= cur.loglik || flat)) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      stalled = true;
      fit.diagnostic = "step halving failed to increase the partial likelihood";
      break;
    }
    const double change = std::abs(next.loglik - cur.loglik);
    const double prev_score = active_score(cur);
    fit.beta = trial;
    cur = std::move(next);
    if (max_norm(fit.beta) > options.divergence_bound) {
      fit.diagnostic = "coefficients diverging (monotone likelihood suspected)";
      store(fit, cur);
      fit.converged = false;
      return fit;
    }
    if (active_score(cur) <= options.score_tol) break;
    if (change <= options.loglik_rtol * std::max(1.0, std::abs(cur.loglik)) && active_score(cur) > 0.5 * prev_score) {
      stalled = true;
      fit.diagnostic = "log partial likelihood stopped changing";
      break;
    }
  }

  store(fit, cur);
  fit.converged = active_score(cur) <= options.score_tol;
  if (!fit.converged && !stalled && fit.diagnostic.empty()) fit.diagnostic = "iteration cap reached";

  // A flat-topped likelihood that keeps rising toward infinity still drives the
  // score to zero; probe along the coefficient ray to tell it from a true optimum.
  if (fit.converged && max_norm(fit.beta) > 5.0) {
    std::vector<double> doubled = fit.beta;
    for (double& b : doubled) b *= 2.0;
    const double far = evaluate(data, x, cause, doubled).loglik;
    if (far > cur.loglik - 1e-8) {
      fit.converged = false;
      fit.diagnostic = "partial likelihood increases without bound (monotone likelihood)";
    }
  }
  return fit;
}

CoxFit fit_cause_specific(const SurvivalDataset& data, int cause, std::span<const double> init,
                          const CoxOptions& options) {
  return fit_cause_specific(RiskSetData(data), cause, init, options);
}

std::vector<CoxFit> fit_all_causes(const RiskSetData& data, const CoxOptions& options, std::span<const CoxFit> warm) {
  std::vector<CoxFit> fits;
  fits.reserve(static_cast<std::size_t>(data.num_causes()));
  for (int j = 1; j <= data.num_causes(); ++j) {
    std::span<const double> init;
    if (!warm.empty()) init = warm[static_cast<std::size_t>(j - 1)].beta;
    fits.push_back(fit_cause_specific(data, j, init, options));
  }
  return fits;
}

double linear_predictor(const CoxFit& fit, std::span<const double> z) {
  if (z.size() != fit.beta.size()) throw Error(ErrorCode::InvalidArgument, "covariate vector length mismatch");
  double eta = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) eta += fit.beta[c] * z[c];
  return std::exp(eta);
}

}  // namespace cif
