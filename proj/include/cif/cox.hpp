#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "cif/dataset.hpp"

namespace cif {

struct CoxOptions {
  double score_tol = 1e-9;        // max-norm of the score
  double loglik_rtol = 1e-12;     // relative log-likelihood change that ends iterations
  int max_iter = 100;
  int max_halvings = 20;
  double divergence_bound = 50.0; // |beta|_inf above this is reported as monotone likelihood
  bool allow_degenerate = true;   // false: a cause without events throws NoEventsForCause
};

/// Cause-specific Cox fit; other causes are treated as censoring.
struct CoxFit {
  int cause = 1;
  std::vector<double> beta;
  double loglik = 0.0;
  double score_norm_at_opt = 0.0;
  std::vector<double> score;
  Eigen::MatrixXd hessian;  // second derivative of the log partial likelihood (negative information)
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;  // no events, or no covariate varies; beta fixed at 0 where unidentified
  std::string diagnostic;
};

/// Weighted log partial likelihood with its analytic score and Hessian.
struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian;
};

PartialLikelihood evaluate_partial_likelihood(const RiskSetData& data, int cause, std::span<const double> beta);

/// Newton-Raphson with step halving, started at `init` (zero when empty).
CoxFit fit_cause_specific(const RiskSetData& data, int cause, std::span<const double> init = {},
                          const CoxOptions& options = {});
CoxFit fit_cause_specific(const SurvivalDataset& data, int cause, std::span<const double> init = {},
                          const CoxOptions& options = {});

/// One fit per cause 1..J. `warm` (same length) supplies starting values.
std::vector<CoxFit> fit_all_causes(const RiskSetData& data, const CoxOptions& options = {},
                                   std::span<const CoxFit> warm = {});

/// exp(beta' z)
double linear_predictor(const CoxFit& fit, std::span<const double> z);

}  // namespace cif
