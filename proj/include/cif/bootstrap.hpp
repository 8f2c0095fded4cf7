#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cif/cox.hpp"
#include "cif/estimators.hpp"

namespace cif {

using WeightGenerator = std::function<std::vector<double>(std::size_t n, std::uint64_t seed)>;

struct BandOptions {
  int replications = 1000;
  double level = 0.95;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double max_redraw_fraction = 0.05;  // cap on redraws after failed refits, as a fraction of B
  CoxOptions cox;
  WeightGenerator weights;            // empty: normalized Exp(1) draws
};

/// Fixed-width simultaneous band: center +/- half_width over [0, last event time].
struct BandResult {
  Method method = Method::M3;
  int cause = 1;
  std::vector<double> z;
  double half_width = 0.0;
  StepFunction center;
  double level = 0.95;
  int replications = 0;      // effective B
  int failed_refits = 0;     // replications whose refit failed (redrawn or dropped)
  std::vector<double> sups;  // sorted sup deviations, one per effective replication

  double lower(double t) const { return center(t) - half_width; }
  double upper(double t) const { return center(t) + half_width; }
};

/// n i.i.d. Exp(1) draws divided by their mean.
std::vector<double> draw_weights(std::size_t n, std::uint64_t seed);

/// The ceil(level * B)-th order statistic (1-based) of `values`.
double ceiling_rank_quantile(std::vector<double> values, double level);

/// Bands for every (z, method, cause) from one shared set of bootstrap refits.
/// Results are ordered z-major, then method, then cause.
std::vector<BandResult> bootstrap_bands(const RiskSetData& data, std::span<const CoxFit> fits,
                                        std::span<const Method> methods, std::span<const std::vector<double>> zs,
                                        const BandOptions& options);

BandResult band_critical_value(const SurvivalDataset& data, Method method, int cause, std::span<const double> z,
                               int replications, double level, std::uint64_t seed);

}  // namespace cif
