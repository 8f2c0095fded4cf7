#include <doctest.h>

#include <cmath>

#include "../support.hpp"
#include "cif/cox.hpp"
#include "cif/errors.hpp"

using namespace cif;
using testing::make_data;

namespace {

double grid_argmax(const SurvivalDataset& d, int cause, double lo, double hi, double step) {
  double best = lo;
  double best_ll = -INFINITY;
  for (double b = lo; b <= hi + 1e-12; b += step) {
    const double ll = testing::brute_loglik(d, cause, {b});
    if (ll > best_ll) {
      best_ll = ll;
      best = b;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("constant covariates give beta = 0 and a degenerate flag") {
  const auto d = make_data({1, 2, 3, 4}, {1, 1, 0, 1}, {{2.0}, {2.0}, {2.0}, {2.0}});
  const auto fit = fit_cause_specific(d, 1);
  CHECK(fit.beta[0] == 0.0);
  CHECK(fit.degenerate);
  CHECK(fit.converged);
  CHECK(std::abs(fit.score[0]) <= 1e-12);
}

TEST_CASE("four-subject fit matches grid search") {
  const auto d = make_data({1, 2, 3, 4}, {1, 1, 1, 1}, {{0.0}, {1.0}, {0.0}, {1.0}});
  const auto fit = fit_cause_specific(d, 1);
  REQUIRE(fit.converged);
  CHECK(fit.score_norm_at_opt <= 1e-9);
  CHECK(std::abs(fit.beta[0] - grid_argmax(d, 1, -10.0, 10.0, 1e-4)) <= 1e-3);
  CHECK(fit.loglik == doctest::Approx(testing::brute_loglik(d, 1, fit.beta)).epsilon(1e-12));
}

TEST_CASE("scaling all weights leaves beta unchanged") {
  const auto d = testing::random_data(3, 60, 2, 2, 0.2);
  const auto base = fit_cause_specific(d, 1);
  const std::vector<double> w(d.size(), 3.7);
  const auto scaled = fit_cause_specific(d.with_weights(w), 1);
  for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(base.beta[c] - scaled.beta[c]) <= 1e-9);
}

TEST_CASE("analytic score and Hessian agree with finite differences") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t dim = 1 + seed % 3;
    auto d = testing::random_data(seed, 12 + seed, 2, dim, 0.25);
    std::vector<double> w(d.size());
    Rng rng(seed + 100);
    for (double& x : w) x = rng.uniform(0.3, 2.0);
    d = d.with_weights(w);
    const RiskSetData r(d);
    std::vector<double> beta(dim);
    for (double& b : beta) b = rng.uniform(-1.0, 1.0);
    const auto pl = evaluate_partial_likelihood(r, 1, beta);
    CHECK(pl.loglik == doctest::Approx(testing::brute_loglik(d, 1, beta)).epsilon(1e-12));
    const double h = 1e-6;
    for (std::size_t a = 0; a < dim; ++a) {
      auto up = beta, dn = beta;
      up[a] += h;
      dn[a] -= h;
      const auto pu = evaluate_partial_likelihood(r, 1, up);
      const auto pd = evaluate_partial_likelihood(r, 1, dn);
      const double fd = (pu.loglik - pd.loglik) / (2 * h);
      const auto ai = static_cast<Eigen::Index>(a);
      CHECK(std::abs(fd - pl.score[ai]) <= 1e-4 * std::max(1.0, std::abs(pl.score[ai])));
      for (std::size_t b = 0; b < dim; ++b) {
        const auto bi = static_cast<Eigen::Index>(b);
        const double fdh = (pu.score[bi] - pd.score[bi]) / (2 * h);
        CHECK(std::abs(fdh - pl.hessian(ai, bi)) <= 1e-3 * std::max(1.0, std::abs(pl.hessian(ai, bi))));
        CHECK(pl.hessian(ai, bi) == pl.hessian(bi, ai));
      }
    }
  }
}

TEST_CASE("shifting a covariate column does not move beta") {
  const auto d = testing::random_data(21, 80, 2, 2, 0.3);
  std::vector<SubjectRecord> shifted(d.subjects().begin(), d.subjects().end());
  for (auto& s : shifted) s.covariates[0] += 25.0;
  const SurvivalDataset d2(shifted, 2, 2);
  for (int j = 1; j <= 2; ++j) {
    const auto a = fit_cause_specific(d, j);
    const auto b = fit_cause_specific(d2, j);
    for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(a.beta[c] - b.beta[c]) <= 1e-6);
  }
}

TEST_CASE("fits converge to a zero score on random data") {
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    const auto d = testing::random_data(seed, 100, 2, 3, 0.3);
    for (const auto& f : fit_all_causes(RiskSetData(d))) {
      CHECK(f.converged);
      CHECK(f.score_norm_at_opt <= 1e-9);
    }
  }
}

TEST_CASE("no events for a cause") {
  const auto d = make_data({1, 2, 3}, {1, 1, 0}, {{0.0}, {1.0}, {0.5}}, 2);
  const auto f = fit_cause_specific(d, 2);
  CHECK(f.degenerate);
  CHECK(f.beta[0] == 0.0);
  CoxOptions strict;
  strict.allow_degenerate = false;
  try {
    fit_cause_specific(d, 2, {}, strict);
    FAIL("expected NoEventsForCause");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoEventsForCause);
  }
  CHECK_THROWS_AS(fit_cause_specific(d, 3), Error);
}

TEST_CASE("monotone likelihood is reported, not hidden") {
  const auto d = make_data({1, 2, 3, 4}, {1, 1, 1, 1}, {{0.0}, {0.0}, {1.0}, {1.0}});
  const auto f = fit_cause_specific(d, 1);
  CHECK_FALSE(f.converged);
  CHECK_FALSE(f.diagnostic.empty());
}

TEST_CASE("linear predictor examples") {
  const auto f = testing::fixed_fit(1, {std::log(3.0)});
  CHECK(linear_predictor(f, std::vector<double>{1.0}) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(linear_predictor(f, std::vector<double>{-0.4}) == doctest::Approx(0.6444).epsilon(1e-4));
  const auto zero = testing::fixed_fit(1, {0.0, 0.0});
  CHECK(linear_predictor(zero, std::vector<double>{5.0, -2.0}) == 1.0);
}

TEST_CASE("warm start reaches the same optimum") {
  const auto d = testing::random_data(44, 90, 1, 2, 0.2);
  const RiskSetData r(d);
  const auto cold = fit_cause_specific(r, 1);
  const std::vector<double> init{0.3, -0.2};
  const auto warm = fit_cause_specific(r, 1, init);
  for (std::size_t c = 0; c < 2; ++c) CHECK(warm.beta[c] == doctest::Approx(cold.beta[c]).epsilon(1e-8));
}
