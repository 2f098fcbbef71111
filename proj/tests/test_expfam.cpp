#include <doctest.h>

#include <cmath>

#include "sieveprior/expfam.hpp"
#include "sieveprior/quadrature.hpp"

using namespace sieveprior;

TEST_CASE("psi closed-form examples") {
  SplineBasis s11(1, 1);
  CHECK(psi(ModelBasis(s11), std::vector<double>{0.0, 0.0}) ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK(psi(ModelBasis(s11), std::vector<double>{std::log(2.0), 0.0}) ==
        doctest::Approx(std::log(1.5)).epsilon(1e-12));

  SplineBasis s20(0, 2);
  // theta'B = 4x-2: psi = log((e^2 - e^-2)/4)
  CHECK(psi(ModelBasis(s20), std::vector<double>{-2.0, 2.0}) ==
        doctest::Approx(std::log((std::exp(2.0) - std::exp(-2.0)) / 4.0))
            .epsilon(1e-12));
  CHECK_THROWS_AS(
      psi(ModelBasis(s20), std::vector<double>{1.0, std::nan("")}),
      std::invalid_argument);
}

TEST_CASE("psi shift identity (partition of unity)") {
  Rng rng(41);
  SplineBasis sb(3, 3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> theta(sb.size()), shifted(sb.size());
    const double c = rng.uniform(-4.0, 4.0);
    for (int i = 0; i < sb.size(); ++i) {
      theta[i] = rng.uniform(-2.0, 2.0);
      shifted[i] = theta[i] + c;
    }
    CHECK(psi(ModelBasis(sb), shifted) ==
          doctest::Approx(psi(ModelBasis(sb), theta) + c).epsilon(1e-10));
  }
}

TEST_CASE("PsiEvaluator agrees with adaptive psi") {
  Rng rng(43);
  SplineBasis sb(2, 3);
  PsiEvaluator pe((ModelBasis(sb)));
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd theta(sb.size());
    std::vector<double> tv(sb.size());
    for (int i = 0; i < sb.size(); ++i) {
      theta[i] = rng.uniform(-3.0, 3.0);
      tv[i] = theta[i];
    }
    CHECK(pe.psi(theta) == doctest::Approx(psi(ModelBasis(sb), tv)).epsilon(1e-11));
  }
  // gradient = E[B] sums to 1 for spline bases (partition of unity)
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  Eigen::VectorXd th = Eigen::VectorXd::Zero(sb.size());
  pe.psi_grad_hess(th, g, h);
  CHECK(g.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // Cov(B) annihilates the ones vector
  CHECK((h * Eigen::VectorXd::Ones(sb.size())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log_density and normalization") {
  SplineBasis s11(1, 1);
  ExpFamDensity uni(ModelBasis(s11), {0.0, 0.0});
  CHECK(uni.log_density(0.3) == doctest::Approx(0.0));

  ExpFamDensity d(ModelBasis(s11), {std::log(2.0), 0.0});
  CHECK(d.density(0.2) == doctest::Approx(4.0 / 3).epsilon(1e-12));
  CHECK(d.density(0.8) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK_THROWS_AS(d.log_density(1.2), std::invalid_argument);

  Rng rng(47);
  SplineBasis sb(4, 2);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> theta(sb.size());
    for (double& c : theta) c = rng.uniform(-2.0, 2.0);
    ExpFamDensity f(ModelBasis(sb), theta);
    const double mass = integrate_adaptive(
        [&](double x) { return f.density(x); }, f.breakpoints(), 1e-12);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("haar density model") {
  HaarBasis hb(1);
  std::vector<double> theta(hb.wavelet_count(), 0.0);
  theta[0] = 0.5;  // psi_{0,0}
  ExpFamDensity d(ModelBasis(hb), theta);
  const double mass = integrate_adaptive(
      [&](double x) { return d.density(x); }, d.breakpoints(), 1e-12);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("sampling: uniform case KS and cell mass") {
  SplineBasis s11(1, 1);
  ExpFamDensity uni(ModelBasis(s11), {0.0, 0.0});
  const auto xs = uni.sample(42, 10000);
  // KS statistic against the uniform CDF
  std::vector<double> sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    ks = std::max(ks, std::abs(sorted[i] - (i + 1.0) / sorted.size()));
    ks = std::max(ks, std::abs(sorted[i] - static_cast<double>(i) / sorted.size()));
  }
  CHECK(ks < 1.63 / std::sqrt(10000.0));  // 1% critical value

  ExpFamDensity d(ModelBasis(s11), {std::log(2.0), 0.0});
  const auto ys = d.sample(7, 20000);
  long below = 0;
  for (double y : ys)
    if (y < 0.5) ++below;
  const double p = static_cast<double>(below) / ys.size();
  CHECK(std::abs(p - 2.0 / 3) < 4.0 * std::sqrt(2.0 / 9 / ys.size()));
  // determinism
  CHECK(d.sample(7, 10) == d.sample(7, 10));
}

TEST_CASE("sampling matches quadrature mean") {
  Rng rng(51);
  SplineBasis sb(2, 2);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> theta(sb.size());
    for (double& c : theta) c = rng.uniform(-1.5, 1.5);
    ExpFamDensity f(ModelBasis(sb), theta);
    const double mean_quad = integrate_adaptive(
        [&](double x) { return x * f.density(x); }, f.breakpoints(), 1e-12);
    const double var_quad =
        integrate_adaptive(
            [&](double x) { return x * x * f.density(x); }, f.breakpoints(),
            1e-12) -
        mean_quad * mean_quad;
    const int n = 20000;
    const auto xs = f.sample(100 + t, n);
    double m = 0.0;
    for (double x : xs) m += x;
    m /= n;
    CHECK(std::abs(m - mean_quad) < 4.0 * std::sqrt(var_quad / n));
  }
}

TEST_CASE("empirical CDF converges: KS at n = 10^5 below 0.01") {
  SplineBasis sb(2, 2);
  std::vector<double> theta{0.8, -0.3, 0.1, -0.6};
  ExpFamDensity f(ModelBasis(sb), theta);
  const int n = 100000;
  auto xs = f.sample(2024, n);
  std::sort(xs.begin(), xs.end());
  // true CDF by cumulative quadrature on a fine grid
  const int cells = 4096;
  std::vector<double> cdf(cells + 1, 0.0);
  for (int c = 0; c < cells; ++c) {
    const double a = static_cast<double>(c) / cells;
    const double b = static_cast<double>(c + 1) / cells;
    std::vector<double> panel{a, b};
    cdf[c + 1] = cdf[c] + integrate_panels(
                              [&](double x) { return f.density(x); }, panel, 16);
  }
  for (double& c : cdf) c /= cdf.back();
  auto true_cdf = [&](double x) {
    const double pos = x * cells;
    const int c = std::min(cells - 1, static_cast<int>(pos));
    // linear interpolation is ~1e-8 accurate at this resolution
    return cdf[c] + (cdf[c + 1] - cdf[c]) * (pos - c);
  };
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    const double fx = true_cdf(xs[i]);
    ks = std::max(ks, std::abs(fx - (i + 1.0) / n));
    ks = std::max(ks, std::abs(fx - static_cast<double>(i) / n));
  }
  CHECK(ks < 0.01);
}

TEST_CASE("membership: trivial and closed-form cases") {
  // theta = 0 in every family
  {
    auto rep = check_membership(std::vector<double>(3, 0.0),
                                ConstraintSpec::spline_density(1, 2, 1));
    CHECK(rep.inside);
    for (const auto& c : rep.checks) CHECK(c.value == doctest::Approx(0.0));
  }
  {
    auto rep = check_membership(std::vector<double>(3, 0.0),
                                ConstraintSpec::haar_density(1, 1));
    CHECK(rep.inside);
  }
  {
    auto rep = check_membership(std::vector<double>(2, 0.0),
                                ConstraintSpec::spline_regression(0, 2, 1, 1));
    CHECK(rep.inside);
  }

  // closed-form reject: q=2, k=0, L=1, theta=(-2,2)
  {
    auto rep = check_membership(std::vector<double>{-2.0, 2.0},
                                ConstraintSpec::spline_density(0, 2, 1));
    CHECK_FALSE(rep.inside);
    const double psi_v = std::log((std::exp(2.0) - std::exp(-2.0)) / 4.0);
    CHECK(rep.checks[1].value == doctest::Approx(2.0 + psi_v).epsilon(1e-10));
  }

  // zero-sum violation
  {
    auto rep = check_membership(std::vector<double>{1.0, 0.0, 0.0},
                                ConstraintSpec::spline_density(1, 2, 5));
    CHECK_FALSE(rep.inside);
    CHECK_FALSE(rep.checks[0].ok);
  }

  CHECK_THROWS_AS(check_membership(std::vector<double>{1.0},
                                   ConstraintSpec::spline_density(1, 2, 1)),
                  std::invalid_argument);
}

TEST_CASE("|psi(theta)-psi(beta)| <= sup |theta'B - beta'B|") {
  Rng rng(53);
  SplineBasis sb(3, 2);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(sb.size()), b(sb.size());
    double dmax = 0.0;
    for (int i = 0; i < sb.size(); ++i) {
      a[i] = rng.uniform(-2.0, 2.0);
      b[i] = rng.uniform(-2.0, 2.0);
      dmax = std::max(dmax, std::abs(a[i] - b[i]));
    }
    const double da =
        std::abs(psi(ModelBasis(sb), a) - psi(ModelBasis(sb), b));
    // coefficient bound dominates the sup of the difference
    CHECK(da <= dmax + 1e-10);
  }
}

TEST_CASE("haar log-density sup is at most twice the expansion sup") {
  Rng rng(57);
  HaarBasis hb(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> theta(hb.wavelet_count());
    for (double& c : theta) c = rng.uniform(-0.8, 0.8);
    const double sup_tb = hb.wavelet_sup(theta);
    ExpFamDensity d(ModelBasis(hb), theta);
    const double sup_logf = sup_on_grid(
        [&](double x) { return d.log_density(x); }, d.breakpoints(), 3);
    CHECK(sup_logf <= 2.0 * sup_tb + 1e-10);
  }
}
