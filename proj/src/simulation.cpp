#include "cif/simulation.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "cif/bootstrap.hpp"
#include "cif/cox.hpp"
#include "cif/errors.hpp"
#include "cif/parallel.hpp"
#include "cif/rng.hpp"

namespace cif::sim {

std::string to_string(ShapeKind s) {
  switch (s) {
    case ShapeKind::Increasing: return "increasing";
    case ShapeKind::Decreasing: return "decreasing";
    case ShapeKind::UpAndDown: return "up-and-down";
  }
  return "?";
}

std::string to_string(CovariateLaw c) { return c == CovariateLaw::Uniform ? "uniform" : "normal"; }

ShapeKind shape_from_string(const std::string& s) {
  if (s == "increasing") return ShapeKind::Increasing;
  if (s == "decreasing") return ShapeKind::Decreasing;
  if (s == "up-and-down" || s == "up_and_down" || s == "updown") return ShapeKind::UpAndDown;
  throw Error(ErrorCode::ConfigError, "unknown hazard shape '" + s + "'");
}

CovariateLaw law_from_string(const std::string& s) {
  if (s == "uniform") return CovariateLaw::Uniform;
  if (s == "normal") return CovariateLaw::Normal;
  throw Error(ErrorCode::ConfigError, "unknown covariate law '" + s + "'");
}

HazardShape HazardShape::of(ShapeKind kind, double sigma) {
  switch (kind) {
    case ShapeKind::Increasing: return {0.0, 0.0, 3.0, sigma};
    case ShapeKind::Decreasing: return {0.4, 0.0, 0.5, sigma};
    case ShapeKind::UpAndDown: return {0.0, 0.75, 3.0, sigma};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown shape");
}

double HazardShape::hazard(double t) const {
  const double u = t + a;
  const double up = std::pow(u, p);
  return sigma * p * std::pow(u, p - 1.0) / (1.0 + b * up);
}

double HazardShape::cumhaz(double t) const {
  const double up = std::pow(t + a, p);
  const double ap = std::pow(a, p);
  if (b > 0.0) return sigma / b * (std::log1p(b * up) - std::log1p(b * ap));
  return sigma * (up - ap);
}

double CompetingModel::hazard(std::size_t j, double t, double z) const {
  return shapes[j].hazard(t) * std::exp(betas[j] * z);
}

double CompetingModel::total_hazard(double t, double z) const {
  double s = 0.0;
  for (std::size_t j = 0; j < shapes.size(); ++j) s += hazard(j, t, z);
  return s;
}

double CompetingModel::total_cumhaz(double t, double z) const {
  double s = 0.0;
  for (std::size_t j = 0; j < shapes.size(); ++j) s += shapes[j].cumhaz(t) * std::exp(betas[j] * z);
  return s;
}

double CompetingModel::survival(double t, double z) const { return std::exp(-total_cumhaz(t, z)); }

std::pair<double, double> calibrate_sigmas(ShapeKind shape, std::pair<double, double> final_cifs, double horizon,
                                           double target_total) {
  const double total = final_cifs.first + final_cifs.second;
  if (std::abs(total - 1.0) > 1e-9 || final_cifs.first <= 0.0 || final_cifs.second <= 0.0) {
    throw Error(ErrorCode::CalibrationFailure, "final CIFs must be positive and sum to 1");
  }
  if (!(target_total > 0.0 && target_total < 1.0) || !(horizon > 0.0)) {
    throw Error(ErrorCode::CalibrationFailure, "target total CIF must lie in (0, 1) and horizon must be positive");
  }
  const HazardShape unit = HazardShape::of(shape, 1.0);
  // With a shared shape and shared beta, F_total(h|0) = 1 - exp(-s * Lambda_unit(h)) for total scale s.
  auto total_cif_at = [&](double s) { return -std::expm1(-s * unit.cumhaz(horizon)); };
  double lo = 1e-6;
  double hi = 1e6;
  if (total_cif_at(lo) > target_total || total_cif_at(hi) < target_total) {
    throw Error(ErrorCode::CalibrationFailure, "no scale in [1e-6, 1e6] reaches the target total CIF");
  }
  // Bisection in log scale down to a relative width of 1e-12.
  while (hi - lo > 1e-12 * hi) {
    const double mid = std::sqrt(lo * hi);
    (total_cif_at(mid) < target_total ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  return {s * final_cifs.first, s * final_cifs.second};
}

std::vector<double> true_cif(const CompetingModel& model, double z, double t) {
  std::vector<double> out(model.num_causes(), 0.0);
  if (t <= 0.0) return out;
  for (std::size_t j = 0; j < model.num_causes(); ++j) {
    auto integrand = [&](double u) { return model.survival(u, z) * model.hazard(j, u, z); };
    out[j] = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, t, 20, 1e-11);
  }
  return out;
}

std::vector<double> truncated_true_cif(const CompetingModel& model, double z, double t, double truncation) {
  auto f = true_cif(model, z, std::min(t, truncation));
  const double mass = -std::expm1(-model.total_cumhaz(truncation, z));
  for (double& v : f) v /= mass;
  return f;
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
  if (n < 2) fail("n must be at least 2");
  if (!(relative_risk > 0.0)) fail("relative_risk must be positive");
  if (!(censor_rate >= 0.0 && censor_rate < 1.0)) fail("censor_rate must lie in [0, 1)");
  if (!(truncation > 0.0)) fail("truncation must be positive");
  if (replications < 1) fail("replications must be at least 1");
  if (bootstrap_B < 0) fail("bootstrap_B must be non-negative");
  if (!(level > 0.0 && level < 1.0)) fail("level must lie in (0, 1)");
  if (grid_points < 2) fail("grid_points must be at least 2");
}

CompetingModel ScenarioConfig::model() const {
  const auto [sa, sb] = calibrate_sigmas(shape, final_cifs, horizon, target_total);
  const double beta = std::log(relative_risk);
  return CompetingModel{{HazardShape::of(shape, sa), HazardShape::of(shape, sb)}, {beta, beta}};
}

std::vector<ScenarioConfig> paper_grid() {
  std::vector<ScenarioConfig> grid;
  int id = 1;
  for (ShapeKind shape : {ShapeKind::Increasing, ShapeKind::Decreasing, ShapeKind::UpAndDown}) {
    for (double rr : {3.0, 6.0}) {
      for (double z : {-0.4, 0.0, 0.4}) {
        for (bool censored : {false, true}) {
          ScenarioConfig c;
          c.label = std::to_string(id++);
          c.shape = shape;
          c.relative_risk = rr;
          c.z_eval = z;
          c.n = censored ? 150 : 75;
          c.censor_rate = censored ? 0.5 : 0.0;
          grid.push_back(c);
        }
      }
    }
  }
  return grid;
}

std::vector<ScenarioConfig> normal_grid() {
  std::vector<ScenarioConfig> grid;
  int id = 1;
  for (double rr : {3.0, 6.0}) {
    for (double z : {-1.68, 0.0, 1.68}) {
      ScenarioConfig c;
      c.label = "N" + std::to_string(id++);
      c.covariate_law = CovariateLaw::Normal;
      c.relative_risk = rr;
      c.z_eval = z;
      grid.push_back(c);
    }
  }
  return grid;
}

namespace {

double draw_covariate(CovariateLaw law, Rng& rng) {
  // N(0,4): variance 4, so that +/-1.68 are the 20th/80th percentiles.
  return law == CovariateLaw::Uniform ? rng.uniform(-0.5, 0.5) : rng.normal(0.0, 2.0);
}

// Event time given z, conditioned on T <= truncation: invert the truncated
// exponential law of Lambda(T|z), then solve Lambda(T|z) = e.
double draw_event_time(const CompetingModel& model, double z, double truncation, Rng& rng) {
  const double mass = -std::expm1(-model.total_cumhaz(truncation, z));
  const double e = -std::log1p(-rng.uniform() * mass);
  auto f = [&](double t) {
    return std::make_pair(model.total_cumhaz(t, z) - e, model.total_hazard(t, z));
  };
  std::uintmax_t iters = 200;
  const double guess = 0.5 * truncation;
  const double t = boost::math::tools::newton_raphson_iterate(f, guess, 0.0, truncation, 40, iters);
  if (iters >= 200 || !std::isfinite(t)) throw Error(ErrorCode::RootFindFailure, "event time inversion failed");
  return std::clamp(t, std::numeric_limits<double>::min(), truncation);
}

struct Draw {
  double z;
  double t;
  int cause;
};

Draw draw_subject(const ScenarioConfig& config, const CompetingModel& model, Rng& rng) {
  Draw d;
  d.z = draw_covariate(config.covariate_law, rng);
  d.t = draw_event_time(model, d.z, config.truncation, rng);
  const double share = model.hazard(0, d.t, d.z) / model.total_hazard(d.t, d.z);
  d.cause = rng.uniform() < share ? 1 : 2;
  return d;
}

}  // namespace

CensoringCalibration calibrate_censoring(const ScenarioConfig& config, const CompetingModel& model,
                                         std::uint64_t seed, int pilot_draws) {
  CensoringCalibration out;
  out.pilot_draws = pilot_draws;
  if (config.censor_rate <= 0.0) return out;
  Rng rng(seed);
  std::vector<double> times(static_cast<std::size_t>(pilot_draws));
  for (double& t : times) t = draw_subject(config, model, rng).t;

  // P(C < T) = E[min(T, c) / c] for C ~ U(0, c); decreasing in c.
  auto rate = [&](double c) {
    double s = 0.0;
    for (double t : times) s += std::min(t, c);
    return s / (c * static_cast<double>(times.size()));
  };
  double lo = 1e-6;
  double hi = 1e6;
  if (rate(lo) < config.censor_rate || rate(hi) > config.censor_rate) {
    throw Error(ErrorCode::CalibrationFailure, "censoring bound not bracketed in [1e-6, 1e6]");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = std::sqrt(lo * hi);
    (rate(mid) > config.censor_rate ? lo : hi) = mid;
  }
  out.upper = 0.5 * (lo + hi);
  out.achieved_rate = rate(out.upper);
  return out;
}

SurvivalDataset sample_dataset(const ScenarioConfig& config, const CompetingModel& model,
                               std::optional<double> censor_upper, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SubjectRecord> subjects(static_cast<std::size_t>(config.n));
  for (auto& s : subjects) {
    const Draw d = draw_subject(config, model, rng);
    s.covariates = {d.z};
    s.time = d.t;
    s.event = d.cause;
    if (censor_upper) {
      const double c = rng.uniform(0.0, *censor_upper);
      if (c < d.t) {
        s.time = c;
        s.event = 0;
      }
    }
  }
  return SurvivalDataset(std::move(subjects), 2, 1);
}

SurvivalDataset sample_dataset(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const CompetingModel model = config.model();
  std::optional<double> upper;
  if (config.censor_rate > 0.0) upper = calibrate_censoring(config, model, derive_seed(seed, 0xC3)).upper;
  return sample_dataset(config, model, upper, seed);
}

double quantile_type7(std::vector<double> values, double prob) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

const MethodCauseMetrics& ScenarioResult::at(Method m, int cause) const {
  for (const auto& mc : metrics) {
    if (mc.method == m && mc.cause == cause) return mc;
  }
  throw Error(ErrorCode::InvalidArgument, "no metrics for that method and cause");
}

namespace {

constexpr std::array<Method, 3> kMethods{Method::M1, Method::M2, Method::M3};
constexpr std::size_t kCauses = 2;

struct RepRecord {
  std::vector<StepFunction> curves;  // method-major, then cause
  double last_event = 0.0;
  std::array<double, 3> total_at_last{};
  std::vector<char> covered;
  std::vector<double> half_width;
  bool fit_failed = false;
  int bootstrap_failed = 0;
  double censored_fraction = 0.0;
};

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  ScenarioResult result;
  result.config = config;
  std::tie(result.sigma_a, result.sigma_b) =
      calibrate_sigmas(config.shape, config.final_cifs, config.horizon, config.target_total);
  const CompetingModel model = config.model();
  std::optional<double> censor_upper;
  if (config.censor_rate > 0.0) {
    result.censoring = calibrate_censoring(config, model, derive_seed(config.seed, 0xC3));
    censor_upper = result.censoring->upper;
  }

  const auto R = static_cast<std::size_t>(config.replications);
  const std::vector<double> z{config.z_eval};
  const std::vector<std::vector<double>> zs{z};
  std::vector<RepRecord> reps(R);

  parallel_for(R, config.threads, [&](std::size_t r) {
    RepRecord& rec = reps[r];
    const std::uint64_t rep_seed = derive_seed(config.seed, r + 1);
    const SurvivalDataset data = sample_dataset(config, model, censor_upper, rep_seed);
    rec.censored_fraction = static_cast<double>(data.count_events(0)) / static_cast<double>(data.size());
    const RiskSetData prepared(data);
    auto fits = fit_all_causes(prepared);
    rec.fit_failed = std::any_of(fits.begin(), fits.end(), [](const CoxFit& f) { return !f.converged; });
    const CifModel cif_model(prepared, fits);
    const auto times = cif_model.event_times();
    rec.last_event = times.empty() ? 0.0 : times.back();
    for (std::size_t m = 0; m < kMethods.size(); ++m) {
      auto est = cif_model.cif(kMethods[m], z);
      rec.total_at_last[m] = total_cif(est).curve.final_value();
      for (auto& e : est) rec.curves.push_back(std::move(e.curve));
    }
    if (config.bootstrap_B > 0) {
      BandOptions opts;
      opts.replications = config.bootstrap_B;
      opts.level = config.level;
      opts.seed = derive_seed(rep_seed, 0xB007);
      opts.threads = 1;
      const auto bands = bootstrap_bands(prepared, fits, kMethods, zs, opts);
      std::vector<std::vector<double>> truth(times.size());
      for (std::size_t k = 0; k < times.size(); ++k) {
        truth[k] = truncated_true_cif(model, config.z_eval, times[k], config.truncation);
      }
      for (const auto& band : bands) {
        bool ok = true;
        const auto values = band.center.values();
        for (std::size_t k = 0; k < times.size() && ok; ++k) {
          ok = std::abs(truth[k][static_cast<std::size_t>(band.cause - 1)] - values[k]) <= band.half_width;
        }
        rec.covered.push_back(ok ? 1 : 0);
        rec.half_width.push_back(band.half_width);
      }
      rec.bootstrap_failed = bands.front().failed_refits;
    }
  });

  std::vector<double> last(R);
  for (std::size_t r = 0; r < R; ++r) {
    last[r] = reps[r].last_event;
    result.fit_failures += reps[r].fit_failed ? 1 : 0;
    result.bootstrap_failed_refits += reps[r].bootstrap_failed;
    result.mean_censoring_fraction += reps[r].censored_fraction / static_cast<double>(R);
  }
  const double q90 = quantile_type7(last, 0.9);
  result.q90_last_event = q90;

  const auto G = static_cast<std::size_t>(config.grid_points);
  std::vector<double> grid(G);
  std::vector<std::vector<double>> truth(G);
  for (std::size_t g = 0; g < G; ++g) {
    grid[g] = q90 * static_cast<double>(g) / static_cast<double>(G - 1);
    truth[g] = truncated_true_cif(model, config.z_eval, grid[g], config.truncation);
  }

  for (std::size_t m = 0; m < kMethods.size(); ++m) {
    for (std::size_t j = 0; j < kCauses; ++j) {
      const std::size_t slot = m * kCauses + j;
      MethodCauseMetrics mc;
      mc.method = kMethods[m];
      mc.cause = static_cast<int>(j + 1);
      for (std::size_t g = 0; g < G; ++g) {
        double mean = 0.0;
        for (const auto& rec : reps) mean += rec.curves[slot](grid[g]);
        mean /= static_cast<double>(R);
        mc.max_bias = std::max(mc.max_bias, std::abs(mean - truth[g][j]));
      }
      double mean_end = 0.0;
      for (const auto& rec : reps) mean_end += rec.curves[slot](q90);
      mean_end /= static_cast<double>(R);
      double ss = 0.0;
      for (const auto& rec : reps) ss += std::pow(rec.curves[slot](q90) - mean_end, 2);
      mc.end_sd = R > 1 ? std::sqrt(ss / static_cast<double>(R - 1)) : 0.0;
      if (config.bootstrap_B > 0) {
        double cov = 0.0;
        double hw = 0.0;
        for (const auto& rec : reps) {
          cov += rec.covered[slot];
          hw += rec.half_width[slot];
        }
        mc.coverage = cov / static_cast<double>(R);
        mc.half_width_mean = hw / static_cast<double>(R);
      } else {
        mc.coverage = std::numeric_limits<double>::quiet_NaN();
        mc.half_width_mean = std::numeric_limits<double>::quiet_NaN();
      }
      result.metrics.push_back(mc);
    }
  }

  if (config.censor_rate == 0.0) {
    std::array<std::array<double, 5>, 2> q{};
    for (std::size_t m = 0; m < 2; ++m) {
      std::vector<double> totals(R);
      for (std::size_t r = 0; r < R; ++r) totals[r] = reps[r].total_at_last[m];
      for (std::size_t p = 0; p < kTotalQuantileProbs.size(); ++p) q[m][p] = quantile_type7(totals, kTotalQuantileProbs[p]);
    }
    result.total_quantiles = q;
    for (const auto& rec : reps) {
      result.max_total_m3_deviation = std::max(result.max_total_m3_deviation, std::abs(rec.total_at_last[2] - 1.0));
    }
  }
  return result;
}

}  // namespace cif::sim
