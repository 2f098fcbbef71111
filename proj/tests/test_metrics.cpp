#include <doctest.h>

#include <cmath>

#include "sieveprior/metrics.hpp"
#include "sieveprior/quadrature.hpp"
#include "sieveprior/rng.hpp"

using namespace sieveprior;

namespace {

ExpFamDensity random_spline_density(Rng& rng, int k, int q, double amp) {
  SplineBasis sb(k, q);
  std::vector<double> theta(sb.size());
  for (double& c : theta) c = rng.uniform(-amp, amp);
  return ExpFamDensity(ModelBasis(sb), theta);
}

}  // namespace

TEST_CASE("divergences: identical densities give zeros") {
  Rng rng(2);
  const ExpFamDensity f = random_spline_density(rng, 2, 2, 1.0);
  const DivergenceReport rep = divergences(view(f), view(f));
  CHECK(rep.hellinger == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.kl_d == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.v == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.v_centered == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.l2 == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.sup_log_ratio == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("divergences: uniform vs two-cell closed forms") {
  SplineBasis s11(1, 1);
  ExpFamDensity uni(ModelBasis(s11), {0.0, 0.0});
  ExpFamDensity g(ModelBasis(s11), {std::log(2.0), 0.0});  // (4/3, 2/3)
  const DivergenceReport rep = divergences(view(uni), view(g));

  const double dh =
      std::sqrt(2.0 - std::sqrt(4.0 / 3) - std::sqrt(2.0 / 3));
  const double d = 0.5 * std::log(9.0 / 8.0);
  const double v = 0.5 * (std::pow(std::log(0.75), 2) + std::pow(std::log(1.5), 2));
  CHECK(rep.hellinger == doctest::Approx(dh).epsilon(1e-9));
  CHECK(rep.kl_d == doctest::Approx(d).epsilon(1e-9));
  CHECK(rep.v == doctest::Approx(v).epsilon(1e-9));
  CHECK(rep.v_centered == doctest::Approx(v - d * d).epsilon(1e-9));
  // six-decimal reference values
  CHECK(rep.hellinger == doctest::Approx(0.169714).epsilon(1e-5));
  CHECK(rep.kl_d == doctest::Approx(0.058891).epsilon(1e-4));
  CHECK(rep.v == doctest::Approx(0.123581).epsilon(1e-5));
}

TEST_CASE("report invariants on random pairs") {
  Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    const ExpFamDensity f = random_spline_density(rng, 3, 2, 1.5);
    const ExpFamDensity g = random_spline_density(rng, 2, 3, 1.5);
    MetricOptions mo;
    mo.sup_grid_pts = 257;
    const DivergenceReport rep = divergences(view(f), view(g), mo);
    CHECK(rep.hellinger <= std::sqrt(2.0) + 1e-12);
    CHECK(rep.kl_d >= -1e-12);
    // D <= sup log ratio (coefficient-safe sup would only be larger)
    CHECK(rep.kl_d <= rep.sup_log_ratio + 1e-9);
    CHECK(rep.v_centered <= rep.v + 1e-12);
  }
}

TEST_CASE("hellinger symmetry and triangle inequality") {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const ExpFamDensity a = random_spline_density(rng, 2, 2, 1.0);
    const ExpFamDensity b = random_spline_density(rng, 2, 2, 1.0);
    const ExpFamDensity c = random_spline_density(rng, 2, 2, 1.0);
    const double ab = divergences(view(a), view(b)).hellinger;
    const double ba = divergences(view(b), view(a)).hellinger;
    const double ac = divergences(view(a), view(c)).hellinger;
    const double cb = divergences(view(c), view(b)).hellinger;
    CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
    CHECK(ab <= ac + cb + 1e-12);
  }
}

TEST_CASE("l2_distance examples") {
  std::vector<double> brk{0.0, 1.0};
  CHECK(l2_distance([](double x) { return x; }, [](double x) { return x; }, brk) ==
        doctest::Approx(0.0));
  CHECK(l2_distance([](double) { return 2.5; }, [](double) { return 1.0; }, brk) ==
        doctest::Approx(1.5).epsilon(1e-12));
  CHECK(l2_distance([](double x) { return x; }, [](double) { return 0.0; }, brk) ==
        doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-10));
}

TEST_CASE("gaussian closed forms: constant gap") {
  std::vector<double> brk{0.0, 1.0};
  auto fo = [](double) { return 0.5; };
  auto f = [](double) { return -0.5; };  // gap 1
  const GaussianDivergences gd = gaussian_closed_forms(fo, f, 1.0, brk);
  CHECK(gd.kl_d == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(gd.v == doctest::Approx(1.25).epsilon(1e-10));
  CHECK(gd.hellinger_sq ==
        doctest::Approx(2.0 * (1.0 - std::exp(-0.125))).epsilon(1e-10));
  CHECK(gd.hellinger_sq == doctest::Approx(0.235006).epsilon(1e-5));
  CHECK(gaussian_closed_forms(fo, fo, 1.0, brk).kl_d == doctest::Approx(0.0));
  CHECK_THROWS_AS(gaussian_closed_forms(fo, f, 0.0, brk), std::invalid_argument);
}

TEST_CASE("gaussian closed forms vs Monte Carlo") {
  std::vector<double> brk{0.0, 1.0};
  auto fo = [](double x) { return 0.5 * std::sin(2.0 * M_PI * x); };
  auto f = [](double x) { return 0.3 * x - 0.1; };
  const double sigma = 0.7;
  const GaussianDivergences gd = gaussian_closed_forms(fo, f, sigma, brk);
  Rng rng(99);
  const long n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double x = rng.uniform01();
    const double y = fo(x) + sigma * rng.normal();
    const double lr = (std::pow(y - f(x), 2) - std::pow(y - fo(x), 2)) /
                      (2.0 * sigma * sigma);
    sum += lr;
    sum2 += lr * lr;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double se = std::sqrt(var / n);
  CHECK(std::abs(mean - gd.kl_d) < 4.0 * se);
  // V = E[lr^2]
  const double m2 = sum2 / n;
  CHECK(std::abs(m2 - gd.v) < 4.0 * se * 4.0);  // rough se for the 2nd moment
}

TEST_CASE("Barron-Sheu inequality on random spline pairs") {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const ExpFamDensity f = random_spline_density(rng, 2, 2, 1.0);
    const ExpFamDensity g = random_spline_density(rng, 2, 2, 1.0);
    MetricOptions mo;
    mo.sup_grid_pts = 513;
    const DivergenceReport rep = divergences(view(f), view(g), mo);
    const double rhs = 0.5 * std::exp(rep.sup_log_ratio) * rep.v;
    CHECK(rep.kl_d <= rhs + 1e-12);
  }
}

TEST_CASE("gaussian hellinger lower bound with c_{0,M,sigma}") {
  Rng rng(13);
  std::vector<double> brk{0.0, 1.0};
  for (int t = 0; t < 200; ++t) {
    const double M = 1.0;
    const double sigma = rng.uniform(0.4, 1.5);
    const double a = rng.uniform(-0.9, 0.9), b = rng.uniform(-0.9, 0.9);
    const double c = rng.uniform(-0.9, 0.9);
    auto fo = [&](double x) { return a * x + 0.5 * b * (1 - x); };
    auto f = [&](double) { return 0.9 * c; };
    const GaussianDivergences gd = gaussian_closed_forms(fo, f, sigma, brk);
    const double l2sq = std::pow(l2_distance(fo, f, brk), 2);
    CHECK(gd.hellinger_sq >= hellinger_l2_constant(M, sigma) * l2sq - 1e-12);
  }
}

TEST_CASE("elementary exponential z-inequality on a grid") {
  for (int i = 0; i <= 2000; ++i) {
    const double z = -10.0 + 20.0 * i / 2000.0;
    const double mid = std::expm1(z) - z;
    const double lo = 0.5 * z * z * std::exp(-std::max(-z, 0.0));
    const double hi = 0.5 * z * z * std::exp(std::max(z, 0.0));
    CHECK(lo <= mid + 1e-12);
    CHECK(mid <= hi + 1e-12);
  }
}

TEST_CASE("measured sup-log-ratio bound chains into D <= (K3/2) V") {
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const ExpFamDensity fo = random_spline_density(rng, 1, 2, 0.8);
    const ExpFamDensity f = random_spline_density(rng, 1, 2, 0.8);
    MetricOptions mo;
    mo.sup_grid_pts = 257;
    const DivergenceReport rep = divergences(view(fo), view(f), mo);
    const double k3 = std::exp(rep.sup_log_ratio);  // (34) with measured sup
    CHECK(rep.kl_d <= 0.5 * k3 * rep.v + 1e-12);
  }
}

TEST_CASE("divergence rejects non-finite log densities") {
  DensityView bad{[](double x) { return x < 0.5 ? 0.0 : -INFINITY; }, {0.0, 1.0}};
  DensityView uni{[](double) { return 0.0; }, {0.0, 1.0}};
  CHECK_THROWS(divergences(bad, uni));
}
