#include <doctest.h>

#include <cmath>

#include "../support.hpp"
#include "cif/errors.hpp"
#include "cif/estimators.hpp"

using namespace cif;
using testing::fixed_fit;
using testing::make_data;

namespace {

std::vector<double> z1(double v) { return {v}; }

/// Kalbfleisch-Prentice survival by the direct alpha formula, evaluated at each event time.
std::vector<double> direct_km_m3(const SurvivalDataset& d, double beta, double z) {
  std::vector<std::size_t> failers;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i].event == 1) failers.push_back(i);
  std::sort(failers.begin(), failers.end(), [&](auto a, auto b) { return d[a].time < d[b].time; });
  std::vector<double> out;
  double s = 1.0;
  for (std::size_t i : failers) {
    double A = 0.0;
    for (const auto& r : d.subjects())
      if (r.time >= d[i].time) A += std::exp(beta * r.covariates[0]);
    const double th = std::exp(beta * d[i].covariates[0]);
    const double alpha = std::pow(std::max(0.0, 1.0 - th / A), 1.0 / th);
    s *= std::pow(alpha, std::exp(beta * z));
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("Breslow examples") {
  const auto d = make_data({1, 2}, {1, 1}, {{0.0}, {0.0}});
  const RiskSetData r(d);
  const auto L = breslow_cumhaz(r, fixed_fit(1, {0.0}));
  CHECK(L.jump(1.0) == doctest::Approx(0.5));
  CHECK(L.jump(2.0) == doctest::Approx(1.0));

  const auto d3 = make_data({1, 2, 3}, {1, 1, 1}, {{0.0}, {1.0}, {0.0}});
  const auto L3 = breslow_cumhaz(RiskSetData(d3), fixed_fit(1, {std::log(2.0)}));
  CHECK(L3.jump(1.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(L3.jump(2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(L3.jump(3.0) == doctest::Approx(1.0).epsilon(1e-14));

  const auto dj = make_data({1, 2, 3}, {1, 1, 0}, {{0.0}, {1.0}, {0.5}}, 2);
  const RiskSetData rj(dj);
  const CifModel m(rj, {fixed_fit(1, {0.2}), fixed_fit(2, {0.0})});
  const auto L2 = m.baseline_cumhaz(2);
  for (double t : {0.5, 1.0, 2.0, 10.0}) CHECK(L2(t) == 0.0);
}

TEST_CASE("Breslow matches direct summation on random weighted data") {
  auto d = testing::random_data(5, 50, 2, 2, 0.3);
  std::vector<double> w(d.size());
  Rng rng(6);
  for (double& x : w) x = rng.uniform(0.2, 3.0);
  d = d.with_weights(w);
  const RiskSetData r(d);
  const auto fit = fixed_fit(2, {0.4, -0.9});
  const auto L = breslow_cumhaz(r, fit);
  double acc = 0.0;
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return d[a].time < d[b].time; });
  for (std::size_t i : order) {
    if (d[i].event != 2) continue;
    double A = 0.0;
    for (const auto& s : d.subjects())
      if (s.time >= d[i].time) A += s.weight * std::exp(0.4 * s.covariates[0] - 0.9 * s.covariates[1]);
    acc += d[i].weight / A;
    CHECK(L(d[i].time) == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("single-event survival examples") {
  const auto one = make_data({1}, {1}, {{0.0}});
  const RiskSetData r1(one);
  CHECK(survival_m1(r1, fixed_fit(1, {0.0}), z1(0))(1.0) == doctest::Approx(std::exp(-1.0)));

  const auto two = make_data({1, 2}, {1, 1}, {{0.0}, {0.0}});
  const RiskSetData r2(two);
  const auto f0 = fixed_fit(1, {0.0});
  CHECK(survival_m1(r2, f0, z1(0))(2.0) == doctest::Approx(std::exp(-1.5)));
  CHECK(survival_m1(r2, f0, z1(0))(0.5) == 1.0);
  CHECK(survival_m2(r2, f0, z1(0))(1.0) == doctest::Approx(0.5));
  CHECK(survival_m2(r2, f0, z1(0))(2.0) == 0.0);
  CHECK(survival_m2(r2, f0, z1(0))(0.5) == 1.0);

  const auto pair = make_data({1, 2}, {1, 1}, {{0.0}, {1.0}});
  const auto s3 = survival_m3(RiskSetData(pair), fixed_fit(1, {std::log(2.0)}), z1(0));
  CHECK(s3(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(s3(2.0) == 0.0);
}

TEST_CASE("Method 2 positive-part clamp is sticky") {
  const auto d = make_data({1, 2, 3, 4}, {1, 1, 1, 1}, {{0.0}, {0.0}, {0.0}, {0.0}});
  const RiskSetData r(d);
  // theta(z) = e^3: the first factor 1 - 20/4 is negative.
  const auto s = survival_m2(r, fixed_fit(1, {1.0}), z1(3.0));
  CHECK(s(1.0) == 0.0);
  CHECK(s(4.0) == 0.0);
  const CifModel m(r, {fixed_fit(1, {1.0})});
  const auto f = m.cif(Method::M2, z1(3.0));
  CHECK(f[0].curve(1.0) > 0.0);
  CHECK(f[0].curve(4.0) == f[0].curve(1.0));
}

TEST_CASE("Method 3 at beta = 0 is Kaplan-Meier and equals Method 2") {
  const auto d = testing::random_data(9, 40, 1, 1, 0.3);
  const RiskSetData r(d);
  const auto f = fixed_fit(1, {0.0});
  const auto a = survival_m2(r, f, z1(0.3));
  const auto b = survival_m3(r, f, z1(0.3));
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.values()[k] == doctest::Approx(b.values()[k]).epsilon(1e-13));
}

TEST_CASE("Method 3 matches the direct alpha formula") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto d = testing::random_data(seed, 30, 1, 1, 0.2);
    const RiskSetData r(d);
    const double beta = 0.8;
    const double z = -0.3;
    const auto s = survival_m3(r, fixed_fit(1, {beta}), z1(z));
    const auto oracle = direct_km_m3(d, beta, z);
    REQUIRE(oracle.size() == s.size());
    for (std::size_t k = 0; k < s.size(); ++k) CHECK(s.values()[k] == doctest::Approx(oracle[k]).epsilon(1e-12));
  }
}

TEST_CASE("last follow-up is an event: Method 3 survival reaches 0") {
  const auto d = testing::random_data(12, 25, 1, 2, 0.0);
  const RiskSetData r(d);
  const auto fit = fit_cause_specific(r, 1);
  CHECK(survival_m3(r, fit, std::vector<double>{0.1, 0.2}).final_value() == 0.0);
}

TEST_CASE("two-subject competing-risks examples") {
  const auto d = make_data({1, 2}, {1, 2}, {{0.0}, {0.0}});
  const RiskSetData r(d);
  const CifModel m(r, testing::zero_fits(d));
  const auto e1 = m.cif(Method::M1, z1(0));
  CHECK(e1[0].curve(2.0) == doctest::Approx(0.5));
  CHECK(e1[1].curve(2.0) == doctest::Approx(std::exp(-0.5)));
  CHECK(total_cif(e1).curve(2.0) == doctest::Approx(1.1065).epsilon(1e-4));
  for (const auto& e : e1) CHECK(e.curve(0.5) == 0.0);

  for (Method meth : {Method::M2, Method::M3}) {
    const auto e = m.cif(meth, z1(0));
    CHECK(e[0].curve(2.0) == doctest::Approx(0.5));
    CHECK(e[1].curve(2.0) == doctest::Approx(0.5));
    const auto tot = total_cif(e);
    CHECK(tot.cause == kTotalCause);
    CHECK(tot.curve(2.0) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("cause without events has a zero CIF") {
  const auto d = make_data({1, 2, 3}, {1, 1, 0}, {{0.0}, {1.0}, {0.5}}, 2);
  const RiskSetData r(d);
  const CifModel m(r, fit_all_causes(r));
  for (Method meth : {Method::M1, Method::M2, Method::M3}) CHECK(m.cif(meth, z1(0.2))[1].curve.final_value() == 0.0);
}

TEST_CASE("exponent identity: z equal to the failer's covariate") {
  const auto d = testing::random_data(14, 20, 2, 1, 0.2);
  const RiskSetData r(d);
  const std::vector<CoxFit> fits{fixed_fit(1, {0.7}), fixed_fit(2, {-0.4})};
  const CifModel m(r, fits);
  const auto& t = m.terms();
  for (std::size_t k = 0; k < t.time.size(); ++k) {
    const auto& failer = d[r.index().failer[k]];
    const auto est = m.cif(Method::M3, failer.covariates);
    // The prefix product equals 1 - F_total just before T_(k); gamma = jump / prefix.
    const auto all = total_cif(est);
    const double prefix = 1.0 - (k == 0 ? 0.0 : all.curve.values()[k - 1]);
    const int j = failer.event;
    const double jump = est[static_cast<std::size_t>(j - 1)].curve.jump(t.time[k]);
    const double beta = fits[static_cast<std::size_t>(j - 1)].beta[0];
    double A = 0.0;
    for (const auto& s : d.subjects())
      if (s.time >= failer.time) A += std::exp(beta * s.covariates[0]);
    if (prefix > 1e-8) CHECK(jump / prefix == doctest::Approx(std::exp(beta * failer.covariates[0]) / A).epsilon(1e-10));
  }
}

TEST_CASE("single-cause consistency: 1 - F equals S for Methods 2 and 3") {
  const auto d = testing::random_data(15, 60, 1, 2, 0.3);
  const RiskSetData r(d);
  const auto fit = fit_cause_specific(r, 1);
  const CifModel m(r, {fit});
  const std::vector<double> z{0.3, -0.2};
  const StepFunction s2 = survival_m2(r, fit, z), s3 = survival_m3(r, fit, z);
  const StepFunction* ss[] = {&s2, &s3};
  int i = 0;
  for (Method meth : {Method::M2, Method::M3}) {
    const auto f = m.cif(meth, z)[0].curve;
    const auto& s = *ss[i++];
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (s.values()[k] > 0.0) {
        CHECK(std::abs(1.0 - f.values()[k] - s.values()[k]) <= 1e-12);
      } else {
        // Method 2 past its clamp: S is 0, but the CIF jump P(T-) dLambda is not truncated.
        CHECK(f.values()[k] >= 1.0 - 1e-12);
      }
    }
    CHECK(m.survival(meth, z).final_value() == s.final_value());
  }
  // Method 1 integrates exp(-Lambda(s-)) against dLambda, a left Riemann sum of
  // 1 - exp(-Lambda): F = sum_k S(T_(k)-) dLambda_k, and 1 - F <= S.
  const auto f1 = m.cif(Method::M1, z)[0].curve;
  const auto s1 = survival_m1(r, fit, z);
  const auto L = breslow_cumhaz(r, fit);
  const double theta = linear_predictor(fit, z);
  double sum = 0.0, prev_s = 1.0, prev_l = 0.0;
  for (std::size_t k = 0; k < f1.size(); ++k) {
    const double dl = theta * (L.values()[k] - prev_l);
    sum += prev_s * dl;
    CHECK(std::abs(f1.values()[k] - sum) <= 1e-12);
    CHECK(1.0 - f1.values()[k] <= s1.values()[k] + 1e-15);
    prev_s = s1.values()[k];
    prev_l = L.values()[k];
  }
}

TEST_CASE("monotonicity of CIFs and survival curves") {
  for (std::uint64_t seed = 20; seed < 25; ++seed) {
    const auto d = testing::random_data(seed, 50, 3, 2, 0.3, 1.2);
    const RiskSetData r(d);
    const CifModel m(r, fit_all_causes(r));
    for (Method meth : {Method::M1, Method::M2, Method::M3}) {
      for (const auto& e : m.cif(meth, std::vector<double>{0.9, -0.9})) {
        CHECK(e.curve.initial_value() == 0.0);
        const auto v = e.curve.values();
        for (std::size_t k = 0; k < v.size(); ++k) CHECK(v[k] >= (k ? v[k - 1] : 0.0));
      }
    }
  }
  const auto d1 = testing::random_data(26, 40, 1, 1, 0.3);
  const RiskSetData r1(d1);
  const auto fit = fit_cause_specific(r1, 1);
  for (const auto& s : {survival_m1(r1, fit, z1(1)), survival_m2(r1, fit, z1(1)), survival_m3(r1, fit, z1(1))}) {
    double prev = 1.0;
    for (double v : s.values()) {
      CHECK(v <= prev);
      CHECK(v >= 0.0);
      prev = v;
    }
  }
  const auto s1 = survival_m1(r1, fit, z1(1));
  for (double v : s1.values()) CHECK(v > 0.0);
}

TEST_CASE("Methods 2 and 3 reduce to Aalen-Johansen at beta = 0") {
  const auto d = testing::random_data(31, 70, 2, 2, 0.4);
  const RiskSetData r(d);
  const CifModel m(r, testing::zero_fits(d));
  const auto aj = testing::aalen_johansen(d);
  for (Method meth : {Method::M2, Method::M3}) {
    const auto e = m.cif(meth, std::vector<double>{0.5, 0.5});
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < aj.times.size(); ++k) CHECK(std::abs(e[j].curve(aj.times[k]) - aj.cif[j][k]) <= 1e-12);
  }
}

TEST_CASE("end-of-study total is exactly 1 for Method 3") {
  const auto d = testing::random_data(40, 50, 2, 3, 0.0, 1.5);
  const RiskSetData r(d);
  const CifModel m(r, fit_all_causes(r));
  for (double z : {-2.0, 0.0, 3.0}) {
    const auto tot = total_cif(m.cif(Method::M3, std::vector<double>{z, -z, z / 2}));
    CHECK(std::abs(tot.curve.final_value() - 1.0) <= 1e-12);
  }
}

TEST_CASE("total_cif input checks") {
  const auto d = make_data({1, 2, 3}, {1, 2, 1}, {{0.0}, {1.0}, {0.5}});
  const RiskSetData r(d);
  const CifModel m(r, fit_all_causes(r));
  auto a = m.cif(Method::M1, z1(0));
  const auto b = m.cif(Method::M3, z1(0));
  std::vector<CifEstimate> mixed{a[0], b[1]};
  try {
    total_cif(mixed);
    FAIL("expected MixedMethods");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MixedMethods);
  }
  const auto other_z = m.cif(Method::M1, z1(1));
  std::vector<CifEstimate> mixed_z{a[0], other_z[1]};
  CHECK_THROWS_AS(total_cif(mixed_z), Error);
  const std::vector<CifEstimate> single{a[0]};
  const auto t = total_cif(single);
  for (std::size_t k = 0; k < t.curve.size(); ++k) CHECK(t.curve.values()[k] == a[0].curve.values()[k]);
}

TEST_CASE("extreme linear predictors: Method 3 stays finite, nothing turns NaN") {
  const auto d = make_data({1, 2, 3, 4, 5}, {1, 2, 1, 2, 1}, {{-30.0}, {10.0}, {25.0}, {-5.0}, {0.0}});
  const RiskSetData r(d);
  const CifModel m(r, {fixed_fit(1, {30.0}), fixed_fit(2, {-30.0})});
  for (double z : {-20.0, 0.0, 20.0}) {
    for (Method meth : {Method::M1, Method::M2, Method::M3})
      for (const auto& e : m.cif(meth, z1(z)))
        for (double v : e.curve.values()) {
          CHECK_FALSE(std::isnan(v));
          if (meth == Method::M3) CHECK(std::isfinite(v));
        }
    CHECK(std::abs(total_cif(m.cif(Method::M3, z1(z))).curve.final_value() - 1.0) <= 1e-12);
  }
}
