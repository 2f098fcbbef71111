#include <doctest.h>

#include <cmath>

#include "sieveprior/sieve.hpp"

using namespace sieveprior;

namespace {

// independent bisection oracle for coef*g/sqrt(1-4g) = rho
double gamma_oracle(double coef, double rho) {
  double lo = 1e-15, hi = 0.25 - 1e-15;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (coef * mid / std::sqrt(1.0 - 4.0 * mid) < rho ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("gamma roots") {
  // 0.1975 is the root of the 0.056 version of the coupling equation
  CHECK(gamma_for_density(0.056) == doctest::Approx(0.1975).epsilon(5e-3));
  CHECK(std::abs(gamma_for_density(0.056) - 0.1975) < 5e-4);
  CHECK(gamma_for_density(0.056) ==
        doctest::Approx(gamma_oracle(0.13, 0.056)).epsilon(1e-9));
  CHECK(std::abs(gamma_for_density(0.0056) - gamma_oracle(0.13, 0.0056)) < 1e-6);

  RegressionParams rp;
  rp.M = 1.0;
  rp.sigma = 1.0;
  rp.c0 = 2.0;
  CHECK(c1_constant(1.0, 1.0) ==
        doctest::Approx((1.0 - std::exp(-0.5)) / 2.0).epsilon(1e-12));
  CHECK(c2_constant(2.0, 1.0) == doctest::Approx(8.0));
  const double coef = 0.13 / (8.0 * std::sqrt(c1_constant(1.0, 1.0)));
  CHECK(gamma_for_regression(rp) ==
        doctest::Approx(gamma_oracle(coef, 0.0056)).epsilon(1e-9));
  CHECK(gamma_for_regression(rp) == doctest::Approx(0.113).epsilon(5e-3));

  CHECK_THROWS_AS(gamma_for_density(0.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_for_density(1e9), std::invalid_argument);
}

TEST_CASE("constants_for the three families") {
  ModelIndex sd;
  sd.family = Family::spline_density;
  sd.k = 0;
  sd.q = 1;
  sd.L = 1;
  const FamilyConstants a = constants_for(sd);
  CHECK(a.A == doctest::Approx(19.28 * 3.0 * 2.0 * std::exp(0.5) + 0.06)
                   .epsilon(1e-12));
  CHECK(a.A == doctest::Approx(190.79).epsilon(1e-3));
  CHECK(a.m == 1);
  CHECK(a.C == 2.0);

  ModelIndex hd;
  hd.family = Family::haar_density;
  hd.level = 0;
  hd.L = 1;
  const FamilyConstants b = constants_for(hd);
  CHECK(b.A ==
        doctest::Approx(19.28 * std::sqrt(2.0) * 3.0 * M_E + 0.06).epsilon(1e-12));
  CHECK(b.A == doctest::Approx(222.41).epsilon(1e-3));
  CHECK(b.m == 2);
  CHECK(b.C == 3.0);

  ModelIndex sr;
  sr.family = Family::spline_regression;
  sr.k = 3;
  sr.q = 1;
  sr.L = 1;
  const FamilyConstants c = constants_for(sr);
  CHECK(c.A == doctest::Approx(9.64 * 3.0 + 0.06).epsilon(1e-12));
  CHECK(c.m == 4);
  CHECK(c.C == 5.0);
}

TEST_CASE("eta examples at gamma = 0.1975") {
  SieveOptions opt;
  ModelIndex sd;
  sd.family = Family::spline_density;
  sd.k = 0;
  sd.q = 1;
  sd.L = 1;
  const double gamma = 0.1975;
  const double om4g = 1.0 - 4.0 * gamma;
  const double A = constants_for(sd).A;
  const double expected =
      4.0 / om4g * std::log(46.2 * A * std::sqrt(om4g) / gamma) + 8.0 * 2.0 / om4g;
  CHECK(eta_for(sd, gamma, opt) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(eta_for(sd, gamma, opt) == doctest::Approx(265.3).epsilon(2e-3));

  ModelIndex hd;
  hd.family = Family::haar_density;
  hd.level = 0;
  hd.L = 1;
  CHECK(eta_for(hd, gamma, opt) == doctest::Approx(498.3).epsilon(2e-3));

  // the floor is a summand
  for (const ModelIndex& m : enumerate_models(Family::spline_density, opt)) {
    const FamilyConstants fc = constants_for(m);
    const double floor =
        4.0 * fc.m / om4g * std::log(46.2 * fc.A * std::sqrt(om4g) / gamma);
    CHECK(eta_for(m, gamma, opt) >= floor - 1e-12);
  }
}

TEST_CASE("kappa values") {
  CHECK(kappa_density(0.1975) == doctest::Approx(1.02625).epsilon(1e-12));
  CHECK(kappa_regression(1.0) == doctest::Approx(1.5056).epsilon(1e-12));
}

TEST_CASE("enumeration and the Sum e^{-C} constant") {
  SieveOptions single;
  single.k_max = 0;
  single.q_max = 1;
  single.L_max = 1;
  CHECK(enumerate_models(Family::spline_density, single).size() == 1);

  SieveOptions haar;
  haar.l_max = 2;
  haar.L_max = 2;
  CHECK(enumerate_models(Family::haar_density, haar).size() == 6);

  SieveOptions t30;
  t30.k_max = 30;
  t30.q_max = 30;
  t30.L_max = 30;
  double sum = 0.0;
  for (const ModelIndex& m : enumerate_models(Family::spline_density, t30))
    sum += std::exp(-constants_for(m).C);
  CHECK(sum == doctest::Approx(spline_lattice_weight_sum()).epsilon(1e-9));
  CHECK(sum < 1.0);
}

TEST_CASE("build_sieve: weights normalize and tail bound is tiny") {
  SieveOptions opt;
  opt.k_max = 6;
  opt.q_max = 2;
  opt.L_max = 2;
  const SieveSpec spec = build_sieve(Family::spline_density, opt);
  double sum = 0.0;
  for (const SieveModel& m : spec.models) sum += std::exp(m.constants.log_a);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spec.sum_exp_neg_c <= 1.0);
  CHECK(spec.weight_tail_bound < 1e-15);
  CHECK(spec.gamma == doctest::Approx(gamma_for_density(0.056)).epsilon(1e-12));

  // log a decreasing in eta
  for (std::size_t i = 1; i < spec.models.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (spec.models[i].constants.eta > spec.models[j].constants.eta)
        CHECK(spec.models[i].constants.log_a < spec.models[j].constants.log_a);
}

TEST_CASE("weight ratios are truncation invariant") {
  SieveOptions small;
  small.k_max = 2;
  small.q_max = 2;
  small.L_max = 2;
  SieveOptions big;
  big.k_max = 5;
  big.q_max = 3;
  big.L_max = 3;
  const SieveSpec a = build_sieve(Family::spline_density, small);
  const SieveSpec b = build_sieve(Family::spline_density, big);
  // (k=0,q=1,L=1) vs (k=1,q=1,L=1) ratio must agree
  auto find = [](const SieveSpec& s, int k, int q, int L) {
    for (const SieveModel& m : s.models)
      if (m.index.k == k && m.index.q == q && m.index.L == L)
        return m.constants.log_a;
    FAIL("model not found");
    return 0.0;
  };
  const double ra = find(a, 0, 1, 1) - find(a, 1, 1, 1);
  const double rb = find(b, 0, 1, 1) - find(b, 1, 1, 1);
  CHECK(ra == doctest::Approx(rb).epsilon(1e-12));
}

TEST_CASE("proof-of-theorem inequalities hold on enumerated models") {
  SieveOptions opt;
  opt.k_max = 10;
  opt.q_max = 3;
  opt.L_max = 3;
  opt.l_max = 4;
  const double gd = gamma_for_density(0.056);
  for (Family fam : {Family::spline_density, Family::haar_density}) {
    for (const ModelIndex& m : enumerate_models(fam, opt)) {
      const FamilyConstants fc = constants_for(m);
      const double eta = eta_for(m, gd, opt);
      CHECK(eta / fc.m >= std::max(1.0, std::log(fc.A)) - 1e-12);
    }
  }
  RegressionParams rp;
  const double gr = gamma_for_regression(rp);
  const double c1 = c1_constant(rp.M, rp.sigma);
  for (const ModelIndex& m : enumerate_models(Family::spline_regression, opt)) {
    const FamilyConstants fc = constants_for(m);
    const double eta = eta_for(m, gr, opt, rp);
    CHECK(c1 * eta / fc.m >= std::max(1.0, std::log(fc.A)) - 1e-12);
  }
}

TEST_CASE("regression eta modes") {
  SieveOptions lit;
  SieveOptions lem;
  lem.eta_mode = EtaMode::generic;
  RegressionParams rp;
  ModelIndex sr;
  sr.family = Family::spline_regression;
  sr.k = 2;
  sr.q = 1;
  sr.L = 1;
  const double g = gamma_for_regression(rp);
  const double e_lit = eta_for(sr, g, lit, rp);
  const double e_lem = eta_for(sr, g, lem, rp);
  CHECK(e_lit != doctest::Approx(e_lem));
  CHECK(e_lem > 0.0);
}

TEST_CASE("min-bound truncation") {
  SieveOptions opt;
  opt.k_min = 2;
  opt.k_max = 4;
  opt.q_min = 2;
  opt.q_max = 2;
  opt.L_min = 1;
  opt.L_max = 1;
  const auto models = enumerate_models(Family::spline_density, opt);
  CHECK(models.size() == 3);
  for (const ModelIndex& m : models) {
    CHECK(m.k >= 2);
    CHECK(m.q == 2);
  }
  CHECK_THROWS_AS(enumerate_models(Family::spline_density,
                                   [] {
                                     SieveOptions o;
                                     o.k_min = 5;
                                     o.k_max = 2;
                                     return o;
                                   }()),
                  std::invalid_argument);
}
