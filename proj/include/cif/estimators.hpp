#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "cif/cox.hpp"
#include "cif/dataset.hpp"
#include "cif/step_function.hpp"

namespace cif {

/// Method 1: exponential of the Breslow cumulative hazards.
/// Method 2: product integral (Aalen-Johansen type) with the positive-part fix.
/// Method 3: Kalbfleisch-Prentice type factors; the total CIF reaches 1 at the
///           last event time whenever that is the last follow-up time.
enum class Method { M1 = 1, M2 = 2, M3 = 3 };

inline constexpr int kTotalCause = 0;

std::string_view method_name(Method m);
Method method_from_int(int m);

struct CifEstimate {
  Method method = Method::M3;
  int cause = 1;  // kTotalCause for the sum over causes
  std::vector<double> z;
  StepFunction curve;  // jumps on the full event-time grid, initial value 0
};

/// Per-event quantities shared by every estimator. Each risk sum is stored
/// relative to the largest linear predictor in its own risk set, so extreme
/// coefficients neither overflow nor underflow; only ratios are used.
struct EventTerms {
  std::vector<double> time;
  std::vector<int> cause;
  std::vector<double> weight;      // w_I(k)
  std::vector<double> eta_failer;  // beta_{D(k)}' Z_I(k)
  std::vector<double> shift;       // max of beta_{D(k)}' Z_i over the risk set at T_(k)
  std::vector<double> failer_term; // w_I(k) * exp(eta_failer - shift), the failer's own share of `risk`
  std::vector<double> risk;        // A_{D(k)}(T_(k)) * exp(-shift)
};

/// Fitted cause-specific Cox models on one dataset, ready to evaluate at any z.
class CifModel {
 public:
  CifModel(const RiskSetData& data, std::vector<CoxFit> fits);

  int num_causes() const { return static_cast<int>(fits_.size()); }
  std::span<const CoxFit> fits() const { return fits_; }
  std::span<const double> event_times() const { return terms_.time; }
  const EventTerms& terms() const { return terms_; }

  /// Breslow estimate of the cumulative baseline hazard of `cause`.
  StepFunction baseline_cumhaz(int cause) const;

  /// One estimate per cause 1..J.
  std::vector<CifEstimate> cif(Method method, std::span<const double> z) const;

  /// Survival estimators; the model must have a single cause.
  StepFunction survival(Method method, std::span<const double> z) const;

 private:
  double theta_at(int cause, std::span<const double> z) const;  // beta' z
  /// Jump of the cause-specific cumulative hazard at z for event k.
  double hazard_jump(std::size_t k, std::span<const double> z) const;
  /// Method-3 factor 1 - gamma_k(z) for event k.
  double km_factor(std::size_t k, std::span<const double> z) const;

  std::vector<CoxFit> fits_;
  EventTerms terms_;
  std::size_t covariate_dim_ = 0;
};

EventTerms compute_event_terms(const RiskSetData& data, std::span<const CoxFit> fits);

StepFunction breslow_cumhaz(const RiskSetData& data, const CoxFit& fit);

StepFunction survival_m1(const RiskSetData& data, const CoxFit& fit, std::span<const double> z);
StepFunction survival_m2(const RiskSetData& data, const CoxFit& fit, std::span<const double> z);
StepFunction survival_m3(const RiskSetData& data, const CoxFit& fit, std::span<const double> z);

std::vector<CifEstimate> cif_m1(const RiskSetData& data, std::span<const CoxFit> fits, std::span<const double> z);
std::vector<CifEstimate> cif_m2(const RiskSetData& data, std::span<const CoxFit> fits, std::span<const double> z);
std::vector<CifEstimate> cif_m3(const RiskSetData& data, std::span<const CoxFit> fits, std::span<const double> z);

/// Pointwise sum over causes. All inputs must share method, z and grid.
CifEstimate total_cif(std::span<const CifEstimate> estimates);

}  // namespace cif
