#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cif/cox.hpp"
#include "cif/dataset.hpp"
#include "cif/rng.hpp"

namespace testing {

inline cif::SurvivalDataset make_data(const std::vector<double>& times, const std::vector<int>& events,
                                      const std::vector<std::vector<double>>& zs = {}, int J = 0) {
  std::vector<cif::SubjectRecord> s;
  const std::size_t d = zs.empty() ? 0 : zs.front().size();
  for (std::size_t i = 0; i < times.size(); ++i) {
    cif::SubjectRecord r;
    r.time = times[i];
    r.event = events[i];
    if (!zs.empty()) r.covariates = zs[i];
    s.push_back(r);
  }
  return cif::SurvivalDataset(std::move(s), J, d);
}

/// Continuous times (no ties), exponential cause-specific hazards, optional censoring.
inline cif::SurvivalDataset random_data(std::uint64_t seed, std::size_t n, int J, std::size_t d, double censor_prob,
                                        double beta_scale = 0.7) {
  cif::Rng rng(seed);
  std::vector<std::vector<double>> beta(static_cast<std::size_t>(J), std::vector<double>(d));
  for (auto& b : beta)
    for (double& x : b) x = rng.uniform(-beta_scale, beta_scale);
  std::vector<cif::SubjectRecord> subjects;
  for (std::size_t i = 0; i < n; ++i) {
    cif::SubjectRecord r;
    for (std::size_t c = 0; c < d; ++c) r.covariates.push_back(rng.uniform(-1.0, 1.0));
    double best = INFINITY;
    int cause = 0;
    for (int j = 0; j < J; ++j) {
      double eta = 0.0;
      for (std::size_t c = 0; c < d; ++c) eta += beta[static_cast<std::size_t>(j)][c] * r.covariates[c];
      const double t = rng.exponential() / std::exp(eta);
      if (t < best) {
        best = t;
        cause = j + 1;
      }
    }
    r.time = best;
    r.event = cause;
    if (rng.uniform() < censor_prob) {
      r.time = best * rng.uniform();
      r.event = 0;
    }
    subjects.push_back(r);
  }
  return cif::SurvivalDataset(std::move(subjects), J, d);
}

/// Explicit weighted log partial likelihood by double loop.
inline double brute_loglik(const cif::SurvivalDataset& data, int cause, const std::vector<double>& beta) {
  auto lp = [&](const cif::SubjectRecord& s) {
    double e = 0.0;
    for (std::size_t c = 0; c < beta.size(); ++c) e += beta[c] * s.covariates[c];
    return e;
  };
  double ll = 0.0;
  for (const auto& fi : data.subjects()) {
    if (fi.event != cause) continue;
    double denom = 0.0;
    for (const auto& r : data.subjects()) {
      if (r.time >= fi.time) denom += r.weight * std::exp(lp(r));
    }
    ll += fi.weight * (lp(fi) - std::log(denom));
  }
  return ll;
}

/// Covariate-free Aalen-Johansen CIFs at the sorted distinct event times.
struct AjResult {
  std::vector<double> times;
  std::vector<std::vector<double>> cif;  // [cause-1][k]
};

inline AjResult aalen_johansen(const cif::SurvivalDataset& data) {
  const int J = data.num_causes();
  std::vector<double> t;
  for (const auto& s : data.subjects())
    if (s.event != 0) t.push_back(s.time);
  std::sort(t.begin(), t.end());
  AjResult out;
  out.times = t;
  out.cif.assign(static_cast<std::size_t>(J), std::vector<double>(t.size(), 0.0));
  double surv = 1.0;
  std::vector<double> acc(static_cast<std::size_t>(J), 0.0);
  for (std::size_t k = 0; k < t.size(); ++k) {
    double at_risk = 0.0;
    std::vector<double> deaths(static_cast<std::size_t>(J), 0.0);
    for (const auto& s : data.subjects()) {
      if (s.time >= t[k]) at_risk += 1.0;
      if (s.time == t[k] && s.event > 0) deaths[static_cast<std::size_t>(s.event - 1)] += 1.0;
    }
    double all = 0.0;
    for (int j = 0; j < J; ++j) {
      acc[static_cast<std::size_t>(j)] += surv * deaths[static_cast<std::size_t>(j)] / at_risk;
      all += deaths[static_cast<std::size_t>(j)];
      out.cif[static_cast<std::size_t>(j)][k] = acc[static_cast<std::size_t>(j)];
    }
    surv *= 1.0 - all / at_risk;
  }
  return out;
}

inline std::vector<cif::CoxFit> zero_fits(const cif::SurvivalDataset& data) {
  std::vector<cif::CoxFit> fits;
  for (int j = 1; j <= data.num_causes(); ++j) {
    cif::CoxFit f;
    f.cause = j;
    f.beta.assign(data.covariate_dim(), 0.0);
    f.converged = true;
    fits.push_back(f);
  }
  return fits;
}

inline cif::CoxFit fixed_fit(int cause, std::vector<double> beta) {
  cif::CoxFit f;
  f.cause = cause;
  f.beta = std::move(beta);
  f.converged = true;
  return f;
}

}  // namespace testing
