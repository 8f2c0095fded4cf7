#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cif/dataset.hpp"
#include "cif/estimators.hpp"

namespace cif::sim {

enum class ShapeKind { Increasing, Decreasing, UpAndDown };
enum class CovariateLaw { Uniform, Normal };

std::string to_string(ShapeKind s);
std::string to_string(CovariateLaw c);
ShapeKind shape_from_string(const std::string& s);
CovariateLaw law_from_string(const std::string& s);

/// Baseline hazard sigma * p (t+a)^(p-1) / (1 + b (t+a)^p); b = 0 is the Weibull-type limit.
/// The cumulative hazard is offset so that it vanishes at t = 0.
struct HazardShape {
  double a = 0.0;
  double b = 0.0;
  double p = 1.0;
  double sigma = 1.0;

  static HazardShape of(ShapeKind kind, double sigma = 1.0);

  double hazard(double t) const;
  double cumhaz(double t) const;
};

/// Cause-specific Cox hazards lambda_j(t|z) = lambda_0j(t) exp(beta_j z), scalar covariate.
struct CompetingModel {
  std::vector<HazardShape> shapes;
  std::vector<double> betas;

  std::size_t num_causes() const { return shapes.size(); }
  double hazard(std::size_t j, double t, double z) const;
  double total_hazard(double t, double z) const;
  double total_cumhaz(double t, double z) const;
  double survival(double t, double z) const;
};

/// Per-cause scales giving the requested final-CIF split and F_total(horizon | z=0) = target_total.
std::pair<double, double> calibrate_sigmas(ShapeKind shape, std::pair<double, double> final_cifs, double horizon,
                                           double target_total = 0.99);

/// F_j(t|z) for every cause by adaptive Gauss-Kronrod quadrature of S(u|z) lambda_j(u|z).
std::vector<double> true_cif(const CompetingModel& model, double z, double t);

/// True CIFs of the law truncated to T <= truncation (the simulated law).
std::vector<double> truncated_true_cif(const CompetingModel& model, double z, double t, double truncation);

struct ScenarioConfig {
  std::string label;
  ShapeKind shape = ShapeKind::Increasing;
  int n = 75;
  double relative_risk = 3.0;
  double z_eval = 0.0;
  double censor_rate = 0.0;
  CovariateLaw covariate_law = CovariateLaw::Uniform;
  std::pair<double, double> final_cifs{0.65, 0.35};
  double horizon = 5.0;
  double target_total = 0.99;
  double truncation = 10.0;
  int replications = 1000;
  int bootstrap_B = 0;  // 0 disables bands
  double level = 0.95;
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  int grid_points = 200;

  void validate() const;
  CompetingModel model() const;
};

/// The 36 uniform-covariate cells in table order, and the 6 normal-covariate cells.
std::vector<ScenarioConfig> paper_grid();
std::vector<ScenarioConfig> normal_grid();

struct CensoringCalibration {
  double upper = 0.0;  // C ~ Uniform(0, upper)
  double achieved_rate = 0.0;
  int pilot_draws = 0;
};

CensoringCalibration calibrate_censoring(const ScenarioConfig& config, const CompetingModel& model,
                                         std::uint64_t seed, int pilot_draws = 200000);

/// Draw one dataset. Event times follow the model conditioned on T <= truncation.
SurvivalDataset sample_dataset(const ScenarioConfig& config, const CompetingModel& model,
                               std::optional<double> censor_upper, std::uint64_t seed);
SurvivalDataset sample_dataset(const ScenarioConfig& config, std::uint64_t seed);

struct MethodCauseMetrics {
  Method method = Method::M1;
  int cause = 1;
  double max_bias = 0.0;
  double end_sd = 0.0;
  double coverage = 0.0;  // NaN when bands are disabled
  double half_width_mean = 0.0;
};

inline constexpr std::array<double, 5> kTotalQuantileProbs{0.01, 0.10, 0.50, 0.90, 0.99};

struct ScenarioResult {
  ScenarioConfig config;
  double sigma_a = 0.0;
  double sigma_b = 0.0;
  std::optional<CensoringCalibration> censoring;
  double q90_last_event = 0.0;
  std::vector<MethodCauseMetrics> metrics;  // method-major, then cause
  /// Quantiles of the total CIF at the last event time, for Methods 1 and 2; uncensored cells only.
  std::optional<std::array<std::array<double, 5>, 2>> total_quantiles;
  double max_total_m3_deviation = 0.0;  // max over reps of |F_total^(3)(T_(K)) - 1|, uncensored cells
  int fit_failures = 0;
  int bootstrap_failed_refits = 0;
  double mean_censoring_fraction = 0.0;

  const MethodCauseMetrics& at(Method m, int cause) const;
};

ScenarioResult run_scenario(const ScenarioConfig& config);

/// Sample quantile with linear interpolation between order statistics (type 7).
double quantile_type7(std::vector<double> values, double prob);

}  // namespace cif::sim
