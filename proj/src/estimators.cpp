#include "cif/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cif/errors.hpp"
#include "cif/kernels.hpp"

namespace cif {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::M1: return "1";
    case Method::M2: return "2";
    case Method::M3: return "3";
  }
  return "?";
}

Method method_from_int(int m) {
  if (m < 1 || m > 3) throw Error(ErrorCode::InvalidArgument, "method must be 1, 2 or 3");
  return static_cast<Method>(m);
}

EventTerms compute_event_terms(const RiskSetData& data, std::span<const CoxFit> fits) {
  const std::size_t n = data.size();
  const std::size_t d = data.covariate_dim();
  const int J = data.num_causes();
  if (fits.size() != static_cast<std::size_t>(J)) {
    throw Error(ErrorCode::InvalidArgument, "need one Cox fit per cause");
  }
  const auto& index = data.index();
  const std::size_t K = index.size();

  EventTerms t;
  t.time = index.times;
  t.cause = index.cause;
  t.weight.resize(K);
  t.eta_failer.resize(K);
  t.failer_term.resize(K);
  t.risk.resize(K);
  t.shift.resize(K);

  const auto positions = data.event_position();
  const auto start = data.risk_start();
  const auto weights = data.weights();
  std::vector<double> eta(n);
  // Running suffix sums of w_i exp(eta_i) over subjects i..n-1, scaled by the suffix maximum.
  std::vector<double> suffix_max(n + 1);
  std::vector<double> suffix(n + 1);
  for (int j = 1; j <= J; ++j) {
    const CoxFit& fit = fits[static_cast<std::size_t>(j - 1)];
    if (fit.cause != j || fit.beta.size() != d) {
      throw Error(ErrorCode::InvalidArgument, "fit for cause " + std::to_string(j) + " does not match the data");
    }
    std::fill(eta.begin(), eta.end(), 0.0);
    for (std::size_t c = 0; c < d; ++c) kernels::axpy(fit.beta[c], data.column(c), eta);
    suffix_max[n] = -std::numeric_limits<double>::infinity();
    suffix[n] = 0.0;
    for (std::size_t i = n; i-- > 0;) {
      const double m = suffix_max[i + 1];
      if (eta[i] > m) {
        suffix_max[i] = eta[i];
        suffix[i] = weights[i] + suffix[i + 1] * std::exp(m - eta[i]);
      } else {
        suffix_max[i] = m;
        suffix[i] = suffix[i + 1] + weights[i] * std::exp(eta[i] - m);
      }
    }

    for (std::size_t k = 0; k < K; ++k) {
      if (index.cause[k] != j) continue;
      const std::size_t p = positions[k];
      const std::size_t s = start[p];
      t.weight[k] = weights[p];
      t.eta_failer[k] = eta[p];
      t.shift[k] = suffix_max[s];
      t.failer_term[k] = weights[p] * std::exp(eta[p] - suffix_max[s]);
      t.risk[k] = suffix[s];
    }
  }
  return t;
}

CifModel::CifModel(const RiskSetData& data, std::vector<CoxFit> fits)
    : fits_(std::move(fits)), terms_(compute_event_terms(data, fits_)), covariate_dim_(data.covariate_dim()) {}

double CifModel::theta_at(int cause, std::span<const double> z) const {
  if (z.size() != covariate_dim_) throw Error(ErrorCode::InvalidArgument, "covariate vector length mismatch");
  const CoxFit& fit = fits_[static_cast<std::size_t>(cause - 1)];
  double eta = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) eta += fit.beta[c] * z[c];
  return eta;
}

double CifModel::hazard_jump(std::size_t k, std::span<const double> z) const {
  const int j = terms_.cause[k];
  const double eta_z = theta_at(j, z);
  return std::exp(eta_z - terms_.shift[k]) * terms_.weight[k] / terms_.risk[k];
}

double CifModel::km_factor(std::size_t k, std::span<const double> z) const {
  const int j = terms_.cause[k];
  // 1 - gamma = {1 - w theta_j(Z_I) / A_j}^{theta_j(z) / theta_j(Z_I)}; the base is exactly 0
  // when the failer is alone in its risk set.
  double base = 1.0 - terms_.failer_term[k] / terms_.risk[k];
  if (base <= 0.0) return 0.0;  // 0^x = 0 even when x underflows
  const double exponent = std::exp(theta_at(j, z) - terms_.eta_failer[k]);
  return std::pow(base, exponent);
}

StepFunction CifModel::baseline_cumhaz(int cause) const {
  if (cause < 1 || cause > num_causes()) throw Error(ErrorCode::InvalidArgument, "cause out of range");
  const std::size_t K = terms_.time.size();
  std::vector<double> values(K);
  double cum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (terms_.cause[k] == cause) cum += std::exp(-terms_.shift[k]) * terms_.weight[k] / terms_.risk[k];
    values[k] = cum;
  }
  return StepFunction(terms_.time, std::move(values), 0.0);
}

std::vector<CifEstimate> CifModel::cif(Method method, std::span<const double> z) const {
  const std::size_t K = terms_.time.size();
  const auto J = static_cast<std::size_t>(num_causes());
  std::vector<std::vector<double>> values(J, std::vector<double>(K));
  std::vector<double> running(J, 0.0);

  switch (method) {
    case Method::M1: {
      double cumhaz = 0.0;  // sum over causes of Lambda_m(T_(k)- | z)
      for (std::size_t k = 0; k < K; ++k) {
        const double dl = hazard_jump(k, z);
        const double s = std::exp(-cumhaz);
        if (s > 0.0) running[static_cast<std::size_t>(terms_.cause[k] - 1)] += s * dl;
        cumhaz += dl;
        for (std::size_t j = 0; j < J; ++j) values[j][k] = running[j];
      }
      break;
    }
    case Method::M2: {
      double surv = 1.0;  // P(T_(k)- | z), positive part taken at every factor
      for (std::size_t k = 0; k < K; ++k) {
        const double dl = hazard_jump(k, z);
        if (surv > 0.0) running[static_cast<std::size_t>(terms_.cause[k] - 1)] += surv * dl;
        const double factor = 1.0 - dl;
        surv = factor > 0.0 ? surv * factor : 0.0;
        for (std::size_t j = 0; j < J; ++j) values[j][k] = running[j];
      }
      break;
    }
    case Method::M3: {
      double prefix = 1.0;  // prod_{r<k} (1 - gamma_r.(z))
      for (std::size_t k = 0; k < K; ++k) {
        const double keep = km_factor(k, z);
        running[static_cast<std::size_t>(terms_.cause[k] - 1)] += prefix * (1.0 - keep);
        prefix *= keep;
        if (prefix < 0.0) {
          if (prefix < -1e-12) {
            throw Error(ErrorCode::NegativePrefix, "survival prefix went negative at event " + std::to_string(k));
          }
          prefix = 0.0;
        }
        for (std::size_t j = 0; j < J; ++j) values[j][k] = running[j];
      }
      break;
    }
  }

  std::vector<CifEstimate> out;
  out.reserve(J);
  for (std::size_t j = 0; j < J; ++j) {
    out.push_back(CifEstimate{method, static_cast<int>(j + 1), std::vector<double>(z.begin(), z.end()),
                              StepFunction(terms_.time, std::move(values[j]), 0.0)});
  }
  return out;
}

StepFunction CifModel::survival(Method method, std::span<const double> z) const {
  if (num_causes() != 1) {
    throw Error(ErrorCode::InvalidArgument, "single-event survival estimators need exactly one cause");
  }
  const std::size_t K = terms_.time.size();
  std::vector<double> values(K);
  double s = 1.0;
  double cumhaz = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    switch (method) {
      case Method::M1:
        cumhaz += hazard_jump(k, z);
        s = std::exp(-cumhaz);
        break;
      case Method::M2: {
        const double factor = 1.0 - hazard_jump(k, z);
        s = factor > 0.0 ? s * factor : 0.0;
        break;
      }
      case Method::M3:
        s *= km_factor(k, z);
        break;
    }
    values[k] = s;
  }
  return StepFunction(terms_.time, std::move(values), 1.0);
}

StepFunction breslow_cumhaz(const RiskSetData& data, const CoxFit& fit) {
  // Only the requested cause's fit matters; the others are placeholders at beta = 0.
  std::vector<CoxFit> fits(static_cast<std::size_t>(data.num_causes()));
  for (int j = 1; j <= data.num_causes(); ++j) {
    auto& f = fits[static_cast<std::size_t>(j - 1)];
    f.cause = j;
    f.beta.assign(data.covariate_dim(), 0.0);
  }
  if (fit.cause < 1 || fit.cause > data.num_causes()) throw Error(ErrorCode::InvalidArgument, "cause out of range");
  fits[static_cast<std::size_t>(fit.cause - 1)] = fit;
  return CifModel(data, std::move(fits)).baseline_cumhaz(fit.cause);
}

namespace {

StepFunction single_survival(const RiskSetData& data, const CoxFit& fit, std::span<const double> z, Method m) {
  if (data.num_causes() != 1) {
    throw Error(ErrorCode::InvalidArgument, "single-event survival estimators need exactly one cause");
  }
  return CifModel(data, {fit}).survival(m, z);
}

}  // namespace

StepFunction survival_m1(const RiskSetData& data, const CoxFit& fit, std::span<const double> z) {
  return single_survival(data, fit, z, Method::M1);
}
StepFunction survival_m2(const RiskSetData& data, const CoxFit& fit, std::span<const double> z) {
  return single_survival(data, fit, z, Method::M2);
}
StepFunction survival_m3(const RiskSetData& data, const CoxFit& fit, std::span<const double> z) {
  return single_survival(data, fit, z, Method::M3);
}

std::vector<CifEstimate> cif_m1(const RiskSetData& data, std::span<const CoxFit> fits, std::span<const double> z) {
  return CifModel(data, {fits.begin(), fits.end()}).cif(Method::M1, z);
}
std::vector<CifEstimate> cif_m2(const RiskSetData& data, std::span<const CoxFit> fits, std::span<const double> z) {
  return CifModel(data, {fits.begin(), fits.end()}).cif(Method::M2, z);
}
std::vector<CifEstimate> cif_m3(const RiskSetData& data, std::span<const CoxFit> fits, std::span<const double> z) {
  return CifModel(data, {fits.begin(), fits.end()}).cif(Method::M3, z);
}

CifEstimate total_cif(std::span<const CifEstimate> estimates) {
  if (estimates.empty()) throw Error(ErrorCode::InvalidArgument, "no estimates to sum");
  CifEstimate total = estimates.front();
  total.cause = kTotalCause;
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    const auto& e = estimates[i];
    if (e.method != total.method) throw Error(ErrorCode::MixedMethods, "cannot sum estimates from different methods");
    if (e.z != total.z) throw Error(ErrorCode::InvalidArgument, "cannot sum estimates at different covariate values");
    total.curve += e.curve;
  }
  return total;
}

}  // namespace cif
