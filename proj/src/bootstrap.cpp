#include "cif/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cif/errors.hpp"
#include "cif/kernels.hpp"
#include "cif/parallel.hpp"
#include "cif/rng.hpp"

namespace cif {

std::vector<double> draw_weights(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "need at least one weight");
  Rng rng(seed);
  std::vector<double> w(n);
  for (double& x : w) x = rng.exponential();
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
  for (double& x : w) x /= mean;
  return w;
}

double ceiling_rank_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0, 1)");
  const auto B = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(B) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, B);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

namespace {

struct ReplicationRecord {
  std::vector<double> sups;  // one per (z, method, cause)
  int failed_attempts = 0;
  bool ok = false;
};

}  // namespace

std::vector<BandResult> bootstrap_bands(const RiskSetData& data, std::span<const CoxFit> fits,
                                        std::span<const Method> methods, std::span<const std::vector<double>> zs,
                                        const BandOptions& options) {
  if (options.replications < 1) throw Error(ErrorCode::InvalidArgument, "need at least one bootstrap replication");
  if (!(options.level > 0.0 && options.level < 1.0)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0, 1)");
  const auto J = static_cast<std::size_t>(data.num_causes());
  const std::size_t n = data.size();

  const CifModel original(data, {fits.begin(), fits.end()});
  std::vector<CifEstimate> centers;
  for (const auto& z : zs) {
    for (Method m : methods) {
      auto est = original.cif(m, z);
      centers.insert(centers.end(), std::make_move_iterator(est.begin()), std::make_move_iterator(est.end()));
    }
  }

  const auto B = static_cast<std::size_t>(options.replications);
  const int cap = static_cast<int>(std::floor(options.max_redraw_fraction * static_cast<double>(B)));
  const WeightGenerator gen = options.weights ? options.weights : WeightGenerator(draw_weights);

  std::vector<ReplicationRecord> records(B);
  parallel_for(B, options.threads, [&](std::size_t m) {
    ReplicationRecord& rec = records[m];
    for (int attempt = 0; attempt <= cap; ++attempt) {
      const auto weights = gen(n, derive_seed(options.seed, m, static_cast<std::uint64_t>(attempt)));
      const RiskSetData boot = data.reweighted(weights);
      auto refits = fit_all_causes(boot, options.cox, fits);
      const bool ok = std::all_of(refits.begin(), refits.end(), [](const CoxFit& f) { return f.converged; });
      if (!ok) {
        ++rec.failed_attempts;
        continue;
      }
      const CifModel model(boot, std::move(refits));
      rec.sups.reserve(centers.size());
      std::size_t slot = 0;
      for (const auto& z : zs) {
        for (Method meth : methods) {
          const auto est = model.cif(meth, z);
          for (std::size_t j = 0; j < J; ++j, ++slot) {
            rec.sups.push_back(kernels::max_abs_diff(est[j].curve.values(), centers[slot].curve.values()));
          }
        }
      }
      rec.ok = true;
      return;
    }
  });

  // Redraws are charged against one shared budget in replication order, so the
  // outcome does not depend on scheduling.
  int budget = cap;
  int failed = 0;
  std::vector<std::vector<double>> sups(centers.size());
  for (const auto& rec : records) {
    failed += rec.failed_attempts;
    if (!rec.ok || rec.failed_attempts > budget) {
      budget = 0;
      continue;
    }
    budget -= rec.failed_attempts;
    for (std::size_t s = 0; s < centers.size(); ++s) sups[s].push_back(rec.sups[s]);
  }
  if (sups.empty() || sups.front().empty()) {
    throw Error(ErrorCode::BootstrapFitFailure,
                "all bootstrap refits failed (" + std::to_string(failed) + " failed attempts)");
  }

  std::vector<BandResult> out;
  out.reserve(centers.size());
  for (std::size_t s = 0; s < centers.size(); ++s) {
    BandResult r;
    r.method = centers[s].method;
    r.cause = centers[s].cause;
    r.z = centers[s].z;
    r.center = centers[s].curve;
    r.level = options.level;
    r.replications = static_cast<int>(sups[s].size());
    r.failed_refits = failed;
    r.half_width = ceiling_rank_quantile(sups[s], options.level);
    std::sort(sups[s].begin(), sups[s].end());
    r.sups = std::move(sups[s]);
    out.push_back(std::move(r));
  }
  return out;
}

BandResult band_critical_value(const SurvivalDataset& data, Method method, int cause, std::span<const double> z,
                               int replications, double level, std::uint64_t seed) {
  if (cause < 1 || cause > data.num_causes()) throw Error(ErrorCode::InvalidArgument, "cause out of range");
  const RiskSetData prepared(data);
  const auto fits = fit_all_causes(prepared);
  BandOptions options;
  options.replications = replications;
  options.level = level;
  options.seed = seed;
  const Method methods[] = {method};
  const std::vector<double> zv(z.begin(), z.end());
  const std::vector<std::vector<double>> zs{zv};
  auto bands = bootstrap_bands(prepared, fits, methods, zs, options);
  return std::move(bands[static_cast<std::size_t>(cause - 1)]);
}

}  // namespace cif
