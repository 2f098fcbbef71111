#include "sieveprior/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "sieveprior/quadrature.hpp"
#include "sieveprior/rng.hpp"

namespace sieveprior {

TruthSpec TruthSpec::uniform() { return TruthSpec{}; }

TruthSpec TruthSpec::logspline(std::vector<double> theta, int q, int k) {
  TruthSpec t;
  t.kind = Kind::logspline;
  t.theta = std::move(theta);
  t.q = q;
  t.k = k;
  return t;
}

TruthSpec TruthSpec::smooth(std::string name, double s) {
  TruthSpec t;
  t.kind = Kind::smooth;
  t.name = std::move(name);
  t.declared_s = s;
  return t;
}

TruthSpec TruthSpec::besov(double alpha, double H0, std::uint64_t seed) {
  TruthSpec t;
  t.kind = Kind::besov;
  t.besov_alpha = alpha;
  t.H0 = H0;
  t.coef_seed = seed;
  return t;
}

TruthSpec TruthSpec::regression(std::string name, double M, double sigma) {
  TruthSpec t;
  t.kind = Kind::regression;
  t.name = std::move(name);
  t.M = M;
  t.sigma = sigma;
  return t;
}

std::function<double(double)> named_function(const std::string& name) {
  if (name == "sin2pi") return [](double x) { return std::sin(2.0 * M_PI * x); };
  if (name == "sin2pi-half")
    return [](double x) { return 0.5 * std::sin(2.0 * M_PI * x); };
  if (name == "abs-half") return [](double x) { return std::abs(x - 0.5); };
  if (name == "cos-bump")
    return [](double x) { return 0.3 * std::cos(2.0 * M_PI * x) + 0.2 * x; };
  throw std::invalid_argument("named_function: unknown name '" + name + "'");
}

namespace {

// crude measured sup of |D^r g| by nested central differences on a grid
double measured_derivative_sup(const std::function<double(double)>& g, int r,
                               std::span<const double> breaks) {
  const double h = 1e-4;
  auto deriv = [&](double x) {
    // r-th central difference, clamped to [0,1]
    double acc = 0.0;
    for (int i = 0; i <= r; ++i) {
      const double c = std::pow(-1.0, i) * std::tgamma(r + 1.0) /
                       (std::tgamma(i + 1.0) * std::tgamma(r - i + 1.0));
      double xx = x + (r / 2.0 - i) * h;
      xx = std::min(1.0, std::max(0.0, xx));
      acc += c * g(xx);
    }
    return acc / std::pow(h, r);
  };
  return sup_on_grid(deriv, breaks, 257);
}

}  // namespace

Truth make_truth(const TruthSpec& spec) {
  Truth t;
  t.spec = spec;
  switch (spec.kind) {
    case TruthSpec::Kind::uniform: {
      t.fns = uniform_truth();
      t.M0 = 0.0;
      break;
    }
    case TruthSpec::Kind::logspline: {
      auto d = std::make_shared<ExpFamDensity>(
          ModelBasis(SplineBasis(spec.k, spec.q)), spec.theta);
      t.fns.is_density = true;
      t.fns.log_f = [d](double x) { return d->log_density(x); };
      t.fns.f = [d](double x) { return d->density(x); };
      t.fns.breaks = d->breakpoints();
      SplineBasis sb(spec.k, spec.q);
      double m0 = 0.0;
      for (int r = 0; r < spec.q; ++r) {
        const std::vector<double> dc = sb.derivative_coeffs(spec.theta, r);
        for (double c : dc) m0 = std::max(m0, std::abs(c));
      }
      t.M0 = m0;
      break;
    }
    case TruthSpec::Kind::smooth: {
      const auto g = named_function(spec.name);
      std::vector<double> breaks{0.0, 1.0};
      const double lz = log_integrate_exp(g, breaks, 1e-12);
      t.fns.is_density = true;
      t.fns.log_f = [g, lz](double x) { return g(x) - lz; };
      t.fns.f = [g, lz](double x) { return std::exp(g(x) - lz); };
      t.fns.breaks = breaks;
      double m0 = 0.0;
      const int smax = std::max(1, static_cast<int>(std::lround(spec.declared_s)));
      for (int r = 0; r <= smax; ++r)
        m0 = std::max(m0, measured_derivative_sup(
                              [&](double x) { return g(x) - lz; }, r, breaks));
      t.M0 = m0;
      break;
    }
    case TruthSpec::Kind::besov: {
      // level-geometric Haar coefficients scaled so the weighted sum equals
      // (0.9 H0)^2, which keeps the ball constraint satisfied by construction
      const int lmax = spec.max_level;
      HaarBasis hb(lmax);
      std::vector<double> coef(hb.wavelet_count());
      Rng rng(derive_seed(spec.coef_seed, 0xBE50));
      double weighted = 0.0;
      for (int j1 = 0; j1 <= lmax; ++j1) {
        const double lvl_weight = std::pow(std::exp2(j1 + 1) - 1.0, 2.0 * spec.besov_alpha);
        const double decay = std::pow(2.0, -j1 * (spec.besov_alpha + 0.5));
        for (int k1 = 0; k1 < (1 << j1); ++k1) {
          const double d = decay * rng.normal();
          coef[hb.flatten(j1, k1) - 1] = d;
          weighted += lvl_weight * d * d;
        }
      }
      const double target = 0.81 * spec.H0 * spec.H0;
      const double scale = std::sqrt(target / weighted);
      for (double& c : coef) c *= scale;
      t.besov_sum = target;
      auto d = std::make_shared<ExpFamDensity>(ModelBasis(hb), coef);
      t.fns.is_density = true;
      t.fns.log_f = [d](double x) { return d->log_density(x); };
      t.fns.f = [d](double x) { return d->density(x); };
      t.fns.breaks = hb.breakpoints();
      t.M0 = sup_on_grid(t.fns.log_f, t.fns.breaks, 2);
      break;
    }
    case TruthSpec::Kind::regression: {
      const auto g = named_function(spec.name);
      std::vector<double> breaks{0.0, 1.0};
      const double sup = sup_on_grid(g, breaks, 8193);
      if (sup >= spec.M)
        throw std::invalid_argument(
            "make_truth: regression truth violates ||f_o||_inf < M");
      t.fns.is_density = false;
      t.fns.f = g;
      t.fns.log_f = {};
      t.fns.breaks = breaks;
      const int smax = std::max(1, static_cast<int>(std::lround(spec.declared_s)));
      double m0 = 0.0;
      for (int r = 0; r <= smax; ++r)
        m0 = std::max(m0, measured_derivative_sup(g, r, breaks));
      t.M0 = m0;
      break;
    }
  }
  if (t.is_density())
    t.sampler = std::make_shared<DensitySampler>(t.fns.log_f, t.fns.breaks);
  return t;
}

Dataset simulate(const Truth& truth, long n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("simulate: n must be >= 0");
  Rng rng(seed);
  std::vector<double> xs(n);
  for (long i = 0; i < n; ++i)
    xs[i] = truth.is_density() ? truth.sampler->draw(rng) : rng.uniform01();
  if (truth.is_density()) return density_data(std::move(xs));
  std::vector<double> ys(n);
  for (long i = 0; i < n; ++i)
    ys[i] = truth.fns.f(xs[i]) + truth.spec.sigma * rng.normal();
  return regression_data(std::move(xs), std::move(ys), truth.spec.sigma);
}

ApproximationTarget best_spline_fit(const Truth& truth, int q, int k,
                                    const FitOptions& opt) {
  const bool density = truth.is_density();
  const auto target = density ? truth.fns.log_f : truth.fns.f;
  SplineBasis sb(k, q);
  const int m = sb.size();
  if (opt.grid < 2 * m)
    throw std::invalid_argument("best_spline_fit: grid too coarse for k (ill-conditioned fit)");
  Eigen::MatrixXd design(opt.grid, m);
  Eigen::VectorXd rhs(opt.grid);
  std::vector<double> row(m);
  for (int i = 0; i < opt.grid; ++i) {
    const double x = static_cast<double>(i) / (opt.grid - 1);
    sb.eval(x, row);
    for (int j = 0; j < m; ++j) design(i, j) = row[j];
    rhs[i] = target(x);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < m)
    throw std::invalid_argument("best_spline_fit: ill-conditioned normal equations (k too large for grid)");
  Eigen::VectorXd beta = qr.solve(rhs);

  ApproximationTarget at;
  at.index.family = density ? Family::spline_density : Family::spline_regression;
  at.index.k = k;
  at.index.q = q;

  std::vector<double> bvec(beta.data(), beta.data() + m);
  const std::vector<double> breaks =
      merge_breakpoints(sb.breakpoints(), truth.fns.breaks);
  if (density) {
    const double mean = beta.mean();
    for (double& b : bvec) b -= mean;  // zero-sum shift, absorbed by psi
    beta.array() -= mean;
    auto fitted = std::make_shared<ExpFamDensity>(ModelBasis(sb), bvec);
    at.sup_error = sup_on_grid(
        [&](double x) { return truth.fns.log_f(x) - fitted->log_density(x); },
        breaks, 513);
    at.l2_error = l2_distance(truth.fns.log_f,
                              [&](double x) { return fitted->log_density(x); },
                              breaks);
    DensityView tv{truth.fns.log_f, truth.fns.breaks};
    MetricOptions mo;
    mo.sup_grid_pts = 513;
    const DivergenceReport rep = divergences(tv, view(*fitted), mo);
    at.kl_d = rep.kl_d;
    at.v = rep.v;
  } else {
    at.sup_error = sup_on_grid(
        [&](double x) { return truth.fns.f(x) - sb.value(bvec, x); }, breaks, 513);
    at.l2_error = l2_distance(truth.fns.f,
                              [&](double x) { return sb.value(bvec, x); }, breaks);
    const double sigma = truth.spec.sigma;
    const GaussianDivergences gd = gaussian_closed_forms(
        truth.fns.f, [&](double x) { return sb.value(bvec, x); }, sigma, breaks);
    at.kl_d = gd.kl_d;
    at.v = gd.v;
  }
  at.beta = beta;

  const double M = opt.M > 0.0 ? opt.M : truth.spec.M;
  auto check_at = [&](int L) {
    const ConstraintSpec cs =
        density ? ConstraintSpec::spline_density(k, q, L)
                : ConstraintSpec::spline_regression(k, q, L, M);
    return check_membership(bvec, cs);
  };
  if (opt.L > 0) {
    at.index.L = opt.L;
    at.membership = check_at(opt.L);
  } else {
    for (int L = 1; L <= 64; ++L) {
      at.index.L = L;
      at.membership = check_at(L);
      if (at.membership.inside) break;
    }
  }
  return at;
}

ApproximationTarget best_haar_fit(const Truth& truth, int level,
                                  const FitOptions& opt) {
  if (!truth.is_density())
    throw std::invalid_argument("best_haar_fit: density truths only");
  HaarBasis hb(level);
  const int dim = hb.wavelet_count();
  const std::vector<double> breaks =
      merge_breakpoints(hb.breakpoints(), truth.fns.breaks);
  // wavelet coefficients by orthonormal projection; the integrand is smooth
  // (or constant) per merged panel
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(dim);
  const GaussRule& rule = gauss_rule(4);
  std::vector<double> row(dim);
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p], b = breaks[p + 1];
    if (!(b > a)) continue;
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double x = c + h * rule.nodes[i];
      const double w = h * rule.weights[i] * truth.fns.log_f(x);
      hb.eval_wavelets(x, row);
      for (int d = 0; d < dim; ++d) beta[d] += w * row[d];
    }
  }
  std::vector<double> bvec(beta.data(), beta.data() + dim);
  auto fitted = std::make_shared<ExpFamDensity>(ModelBasis(hb), bvec);

  ApproximationTarget at;
  at.index.family = Family::haar_density;
  at.index.level = level;
  at.beta = beta;
  at.sup_error = sup_on_grid(
      [&](double x) { return truth.fns.log_f(x) - fitted->log_density(x); },
      breaks, 65);
  // L2 error of the projection itself (constant component removed): the
  // fitted log-density differs from it by the scalar beta0 + psi(beta)
  const double beta0 =
      integrate_panels([&](double x) { return truth.fns.log_f(x); }, breaks, 4);
  at.l2_error = l2_distance(
      [&](double x) { return truth.fns.log_f(x) - beta0; },
      [&](double x) { return hb.wavelet_value(bvec, x); }, breaks);
  DensityView tv{truth.fns.log_f, truth.fns.breaks};
  MetricOptions mo;
  mo.sup_grid_pts = 65;
  const DivergenceReport rep = divergences(tv, view(*fitted), mo);
  at.kl_d = rep.kl_d;
  at.v = rep.v;
  if (opt.L > 0) {
    at.index.L = opt.L;
    at.membership = check_membership(bvec, ConstraintSpec::haar_density(level, opt.L));
  } else {
    for (int L = 1; L <= 64; ++L) {
      at.index.L = L;
      at.membership = check_membership(bvec, ConstraintSpec::haar_density(level, L));
      if (at.membership.inside) break;
    }
  }
  return at;
}

SieveSpec build_sieve_for(const ExperimentConfig& cfg) {
  return build_sieve(cfg.family, cfg.sieve, cfg.reg);
}

ExperimentResult contraction_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_grid.empty())
    throw std::invalid_argument("contraction_experiment: empty n grid");
  if (cfg.replicates < 1)
    throw std::invalid_argument("contraction_experiment: replicates must be >= 1");
  const Truth truth = make_truth(cfg.truth);
  const bool regression = cfg.family == Family::spline_regression;
  if (regression == truth.is_density())
    throw std::invalid_argument("contraction_experiment: truth kind does not match family");
  const SieveSpec sieve = build_sieve_for(cfg);
  ExperimentResult res;
  res.config = cfg;
  res.metric = cfg.metric.value_or(regression ? DistanceMetric::l2
                                              : DistanceMetric::hellinger);

  std::vector<long> ns = cfg.n_grid;
  std::sort(ns.begin(), ns.end());
  for (std::size_t ni = 0; ni < ns.size(); ++ni) {
    const long n = ns[ni];
    const double rule = cfg.radius_coef *
                        std::pow(static_cast<double>(n), cfg.radius_exponent) *
                        std::pow(std::log(static_cast<double>(n)),
                                 cfg.radius_log_power);
    std::vector<double> radii;
    for (double f : cfg.radius_factors) radii.push_back(f * rule);
    std::sort(radii.begin(), radii.end());

    std::vector<std::vector<double>> log_tails(radii.size());
    std::map<std::string, double> wsum;
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      const Dataset data =
          simulate(truth, n, derive_seed(cfg.seed, ni * 4096 + rep));
      const PosteriorEstimate post = posterior_tail_mass(
          sieve, data, truth.fns, radii, res.metric, cfg.mc_draws,
          derive_seed(cfg.seed, 0xE0000 + ni * 4096 + rep), cfg.mc);
      res.cross_check_ok = res.cross_check_ok && post.cross_check_ok;
      for (std::size_t r = 0; r < radii.size(); ++r) {
        ExperimentRow row;
        row.n = n;
        row.replicate = rep;
        row.radius = radii[r];
        row.tail_mass = post.radii[r].tail_mass;
        row.log_tail_mass = post.radii[r].log_tail_mass;
        row.se_log = post.radii[r].se_log;
        res.rows.push_back(row);
        log_tails[r].push_back(row.log_tail_mass);
      }
      for (const ModelRow& mr : post.models)
        wsum[mr.index.label()] += mr.weight / cfg.replicates;
    }
    for (std::size_t r = 0; r < radii.size(); ++r) {
      std::vector<double> v = log_tails[r];
      std::sort(v.begin(), v.end());
      const std::size_t mid = v.size() / 2;
      const double med_log =
          v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
      MedianRow mrow;
      mrow.n = n;
      mrow.radius = radii[r];
      mrow.median_log_tail = med_log;
      mrow.median_tail = std::exp(med_log);
      res.medians.push_back(mrow);
    }
    for (const auto& [label, w] : wsum)
      res.model_weights.emplace_back(n, label, w);
  }
  return res;
}

SlopeFit fit_log_slope(const std::vector<std::pair<long, double>>& points) {
  SlopeFit fit;
  fit.points = points;
  if (points.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  const int k = static_cast<int>(points.size());
  double sx = 0, sy = 0;
  for (const auto& [n, y] : points) {
    if (!(y > 0.0)) {
      fit.degenerate = true;
      return fit;
    }
    sx += std::log(static_cast<double>(n));
    sy += std::log(y);
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [n, y] : points) {
    const double dx = std::log(static_cast<double>(n)) - mx;
    const double dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) {
    fit.degenerate = true;
    return fit;
  }
  if (syy == 0.0) {
    fit.slope = 0.0;
    fit.ci_half_width = 0.0;
    return fit;
  }
  fit.slope = sxy / sxx;
  const double rss = std::max(0.0, syy - fit.slope * sxy);
  const double sigma2 = (k > 2) ? rss / (k - 2) : 0.0;
  fit.ci_half_width = 1.96 * std::sqrt(sigma2 / sxx);
  return fit;
}

SlopeFit rate_slope(const ExperimentResult& result, SlopeStatistic stat) {
  std::vector<std::pair<long, double>> pts;
  std::vector<long> ns;
  for (const MedianRow& m : result.medians)
    if (ns.empty() || ns.back() != m.n) ns.push_back(m.n);

  for (long n : ns) {
    double value = std::numeric_limits<double>::quiet_NaN();
    if (stat == SlopeStatistic::half_mass_radius) {
      // smallest radius whose median tail mass is < 0.5
      for (const MedianRow& m : result.medians)
        if (m.n == n && m.median_tail < 0.5) {
          value = m.radius;
          break;
        }
    } else {
      // per-replicate half-mass radius, then the median across replicates
      std::map<int, double> per_rep;
      for (const ExperimentRow& r : result.rows) {
        if (r.n != n) continue;
        if (r.tail_mass < 0.5 && per_rep.find(r.replicate) == per_rep.end())
          per_rep[r.replicate] = r.radius;
      }
      std::vector<double> v;
      for (const auto& [rep, rad] : per_rep) v.push_back(rad);
      if (!v.empty()) {
        std::sort(v.begin(), v.end());
        value = v[v.size() / 2];
      }
    }
    if (std::isnan(value)) {
      SlopeFit fit;
      fit.degenerate = true;
      return fit;
    }
    pts.emplace_back(n, value);
  }
  return fit_log_slope(pts);
}

double xi_floor_density(double A, int m, double gamma) {
  const double om4g = 1.0 - 4.0 * gamma;
  return m * 4.0 / om4g * std::log(46.2 * A * std::sqrt(om4g) / gamma);
}

double xi_floor_regression(double A, int m, double gamma, double c1) {
  const double om4g = 1.0 - 4.0 * gamma;
  return m * 4.0 / (c1 * om4g) * std::log(1072.5 * A);
}

TailBoundResult tail_bound_mc(const TailBoundConfig& cfg) {
  const bool regression = cfg.model.family == Family::spline_regression;
  double gamma = cfg.gamma;
  if (gamma < 0.0)
    gamma = regression ? gamma_for_regression(cfg.reg, 0.0056)
                       : gamma_for_density(cfg.rho);
  else if (!(gamma > 0.0 && gamma < 0.25))
    throw std::invalid_argument("tail_bound_mc: gamma must be in (0, 0.25)");
  if (cfg.replicates < 1 || cfg.n < 1)
    throw std::invalid_argument("tail_bound_mc: n and replicates must be >= 1");

  ModelGeometry geom(cfg.model, cfg.nodes_per_panel);
  if (geom.free_dim() < 1 || geom.free_dim() > 2)
    throw std::invalid_argument("tail_bound_mc: model must have 1 or 2 free parameters");
  const Truth truth = make_truth(cfg.truth);
  if (truth.is_density() == regression)
    throw std::invalid_argument("tail_bound_mc: truth kind does not match model family");

  ModelIndex mi;
  mi.family = cfg.model.family;
  mi.k = cfg.model.k;
  mi.q = cfg.model.q;
  mi.level = cfg.model.level;
  mi.L = static_cast<int>(cfg.model.L);
  const FamilyConstants fc = constants_for(mi);
  const double c1 = regression ? c1_constant(cfg.reg.M, cfg.reg.sigma) : 0.0;

  TailBoundResult out;
  out.gamma = gamma;
  out.A = fc.A;
  out.m = fc.m;
  out.xi_floor = regression ? xi_floor_regression(fc.A, fc.m, gamma, c1)
                            : xi_floor_density(fc.A, fc.m, gamma);

  std::vector<double> xis = cfg.xi;
  if (xis.empty())
    for (double mult : {0.25, 0.5, 1.0, 1.5, 2.0, 3.0})
      xis.push_back(mult * out.xi_floor);
  std::sort(xis.begin(), xis.end());

  // theta grid over the free coordinates, filtered by membership
  const double hw = geom.box_half_width();
  std::vector<Eigen::VectorXd> grid_theta;
  std::vector<double> grid_psi, grid_d2;
  std::vector<Eigen::VectorXd> grid_u;
  const Eigen::VectorXd truth_nodes =
      geom.tabulate(regression ? truth.fns.f : truth.fns.log_f);
  auto push_point = [&](const Eigen::VectorXd& u) {
    const Eigen::VectorXd theta = geom.to_theta(u);
    const Eigen::VectorXd v = geom.node_values(theta);
    const double psi =
        regression ? 0.0 : geom.psi_eval().psi_from_values(v);
    if (!geom.inside_given(theta, v, psi)) return;
    const double d = geom.distance_to_fn(
        regression ? DistanceMetric::l2 : DistanceMetric::hellinger, v, psi,
        truth_nodes);
    grid_theta.push_back(theta);
    grid_psi.push_back(psi);
    grid_d2.push_back(d * d);
    grid_u.push_back(u);
  };
  if (geom.free_dim() == 1) {
    for (int i = 0; i < cfg.theta_grid; ++i) {
      Eigen::VectorXd u(1);
      u[0] = -hw + 2.0 * hw * (i + 0.5) / cfg.theta_grid;
      push_point(u);
    }
  } else {
    const int side = std::max(2, static_cast<int>(std::sqrt(static_cast<double>(cfg.theta_grid))));
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) {
        Eigen::VectorXd u(2);
        u[0] = -hw + 2.0 * hw * (i + 0.5) / side;
        u[1] = -hw + 2.0 * hw * (j + 0.5) / side;
        push_point(u);
      }
  }
  if (grid_theta.empty())
    throw std::runtime_error("tail_bound_mc: no grid point inside Theta_j");

  const long n = cfg.n;
  const int dim = geom.theta_dim();
  const ModelBasis& basis = geom.psi_eval().basis();
  std::vector<long> events(xis.size(), 0);

  std::vector<double> row(dim);
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    Rng rng(derive_seed(cfg.seed, 0x7A11 + rep));
    if (!regression) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(dim);
      double llo = 0.0;
      for (long i = 0; i < n; ++i) {
        const double x = truth.sampler->draw(rng);
        eval_coef_fns(basis, x, row);
        for (int d = 0; d < dim; ++d) s[d] += row[d];
        llo += truth.fns.log_f(x);
      }
      double tmax = -std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < grid_theta.size(); ++g) {
        const double t = (grid_theta[g].dot(s) - n * grid_psi[g] - llo) / n +
                         gamma * grid_d2[g];
        tmax = std::max(tmax, t);
      }
      for (std::size_t xi_i = 0; xi_i < xis.size(); ++xi_i)
        if (tmax >= xis[xi_i] / n) ++events[xi_i];
    } else {
      const double c0 = cfg.reg.c0;
      Eigen::VectorXd s_eps = Eigen::VectorXd::Zero(dim);
      Eigen::VectorXd b_fo = Eigen::VectorXd::Zero(dim);
      Eigen::MatrixXd g_mat = Eigen::MatrixXd::Zero(dim, dim);
      double ce = 0.0, cf = 0.0, se = 0.0, sabs = 0.0, se2 = 0.0;
      for (long i = 0; i < n; ++i) {
        const double x = rng.uniform01();
        const double eps = cfg.reg.sigma * rng.normal();
        const double fo = truth.fns.f(x);
        eval_coef_fns(basis, x, row);
        Eigen::Map<const Eigen::VectorXd> bi(row.data(), dim);
        s_eps += eps * bi;
        b_fo += fo * bi;
        g_mat.selfadjointView<Eigen::Lower>().rankUpdate(bi, 1.0);
        ce += eps * fo;
        cf += fo * fo;
        se += eps;
        sabs += std::abs(eps);
        se2 += eps * eps;
      }
      const bool cond = (sabs / n <= c0) && (se2 / n <= c0 * c0);
      if (!cond) continue;
      Eigen::MatrixXd gm = g_mat.selfadjointView<Eigen::Lower>();
      double tmax = -std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < grid_theta.size(); ++g) {
        const Eigen::VectorXd& th = grid_theta[g];
        const double sum_eps_g = th.dot(s_eps) - ce;
        const double sum_g2 = th.dot(gm * th) - 2.0 * th.dot(b_fo) + cf;
        const double t =
            (2.0 * sum_eps_g - sum_g2) / n + gamma * grid_d2[g];
        tmax = std::max(tmax, t);
      }
      const double eps_term = 0.0224 * std::abs(se / n);
      for (std::size_t xi_i = 0; xi_i < xis.size(); ++xi_i)
        if (tmax >= xis[xi_i] / n + eps_term * std::sqrt(xis[xi_i] / n))
          ++events[xi_i];
    }
  }

  const double env_coef = regression ? c1 * (1.0 - 4.0 * gamma) / 8.0
                                     : (1.0 - 4.0 * gamma) / 8.0;
  for (std::size_t i = 0; i < xis.size(); ++i) {
    TailBoundRow r;
    r.xi = xis[i];
    r.envelope = 15.1 * std::exp(-env_coef * xis[i]);
    r.events = events[i];
    r.frequency = static_cast<double>(events[i]) / cfg.replicates;
    r.informative = r.envelope <= 1.0;
    r.meets_floor = xis[i] >= out.xi_floor - 1e-9;
    out.rows.push_back(r);
  }
  return out;
}

EvidenceFloorResult evidence_floor_check(const EvidenceFloorConfig& cfg) {
  ModelGeometry geom(cfg.model, 16);
  if (geom.free_dim() != 1)
    throw std::invalid_argument("evidence_floor_check: needs a 1-D model");
  const Truth truth = make_truth(cfg.truth);
  if (!truth.is_density())
    throw std::invalid_argument("evidence_floor_check: density models only");
  if (!(cfg.t_n > 0.0)) throw std::invalid_argument("evidence_floor_check: t_n must be > 0");

  const Eigen::VectorXd log_fo = geom.tabulate(truth.fns.log_f);
  const Eigen::VectorXd fo = log_fo.array().exp();
  const Eigen::VectorXd& w = geom.node_weights();
  const double hw = geom.box_half_width();

  // prior mass of {D <= t_n, V' <= t_n} by bounding-box Monte Carlo
  Rng prior_rng(derive_seed(cfg.seed, 0xB));
  long hits = 0;
  for (long i = 0; i < cfg.prior_mc; ++i) {
    Eigen::VectorXd u(1);
    u[0] = prior_rng.uniform(-hw, hw);
    const Eigen::VectorXd theta = geom.to_theta(u);
    const Eigen::VectorXd v = geom.node_values(theta);
    const double psi = geom.psi_eval().psi_from_values(v);
    if (!geom.inside_given(theta, v, psi)) continue;
    const Eigen::ArrayXd lr = log_fo.array() - (v.array() - psi);
    const double d = (w.array() * fo.array() * lr).sum();
    if (d > cfg.t_n) continue;
    const double vv = (w.array() * fo.array() * lr.square()).sum();
    const double v_centered = std::max(0.0, vv - d * d);
    if (v_centered <= cfg.t_n) ++hits;
  }
  EvidenceFloorResult out;
  out.t_n = cfg.t_n;
  out.replicates = cfg.replicates;
  out.prior_mass =
      geom.box_volume() * static_cast<double>(hits) / cfg.prior_mc;
  out.bound = 2.0 / (cfg.n * cfg.t_n);
  if (out.prior_mass <= 0.0)
    throw std::runtime_error("evidence_floor_check: B~_D(t_n) received no prior mass samples");
  out.threshold_log =
      std::log(0.5 * out.prior_mass) - 2.0 * cfg.n * cfg.t_n;

  // V_n by midpoint quadrature over the free coordinate
  const int dim = geom.theta_dim();
  const ModelBasis& basis = geom.psi_eval().basis();
  std::vector<double> row(dim);
  const int G = cfg.quad_points;
  std::vector<Eigen::VectorXd> thetas(G);
  std::vector<double> psis(G);
  std::vector<bool> ok(G);
  for (int g = 0; g < G; ++g) {
    Eigen::VectorXd u(1);
    u[0] = -hw + 2.0 * hw * (g + 0.5) / G;
    thetas[g] = geom.to_theta(u);
    const Eigen::VectorXd v = geom.node_values(thetas[g]);
    psis[g] = geom.psi_eval().psi_from_values(v);
    ok[g] = geom.inside_given(thetas[g], v, psis[g]);
  }
  const double du = 2.0 * hw / G;

  for (int rep = 0; rep < cfg.replicates; ++rep) {
    Rng rng(derive_seed(cfg.seed, 0x5E00 + rep));
    Eigen::VectorXd s = Eigen::VectorXd::Zero(dim);
    double llo = 0.0;
    for (long i = 0; i < cfg.n; ++i) {
      const double x = truth.sampler->draw(rng);
      eval_coef_fns(basis, x, row);
      for (int d = 0; d < dim; ++d) s[d] += row[d];
      llo += truth.fns.log_f(x);
    }
    LogSum vsum;
    for (int g = 0; g < G; ++g) {
      if (!ok[g]) continue;
      vsum.add(thetas[g].dot(s) - cfg.n * psis[g] - llo + std::log(du));
    }
    if (vsum.log() < out.threshold_log) ++out.failures;
  }
  out.failure_freq = static_cast<double>(out.failures) / cfg.replicates;
  return out;
}

UnEnvelopeResult un_envelope_check(const UnEnvelopeConfig& cfg) {
  const SieveSpec sieve = build_sieve(Family::spline_density, cfg.sieve);
  const Truth truth = make_truth(cfg.truth);
  if (!truth.is_density())
    throw std::invalid_argument("un_envelope_check: density truths only");
  if (!(cfg.s_n > 0.0))
    throw std::invalid_argument("un_envelope_check: s_n must be > 0");

  UnEnvelopeResult out;
  out.gamma = sieve.gamma;
  out.replicates = cfg.replicates;
  out.threshold_log =
      sieve.log_alpha - 0.5 * sieve.gamma * cfg.n * cfg.s_n * cfg.s_n;
  out.envelope = 15.1 * std::exp(-(1.0 - 4.0 * sieve.gamma) * sieve.gamma *
                                 cfg.n * cfg.s_n * cfg.s_n / 16.0);

  // per-model quadrature tables over the free coordinate
  struct Table {
    double log_a;
    std::vector<Eigen::VectorXd> thetas;
    std::vector<double> psis;
    std::vector<bool> outside;
    std::vector<bool> ok;
    double du = 0.0;
  };
  std::vector<Table> tables;
  std::vector<ModelGeometry> geoms;
  for (const SieveModel& sm : sieve.models) {
    ModelGeometry geom(sm.index.constraints(), 16);
    if (geom.free_dim() > 1)
      throw std::invalid_argument("un_envelope_check: 1-D models only");
    Table tb;
    tb.log_a = sm.constants.log_a;
    const Eigen::VectorXd truth_nodes = geom.tabulate(truth.fns.log_f);
    if (geom.free_dim() == 0) {
      const Eigen::VectorXd theta = Eigen::VectorXd::Zero(geom.theta_dim());
      const Eigen::VectorXd v = geom.node_values(theta);
      const double psi = geom.psi_eval().psi_from_values(v);
      tb.thetas.push_back(theta);
      tb.psis.push_back(psi);
      tb.outside.push_back(geom.distance_to_fn(DistanceMetric::hellinger, v, psi,
                                               truth_nodes) > cfg.s_n);
      tb.ok.push_back(true);
      tb.du = 1.0;  // counting measure
    } else {
      const double hw = geom.box_half_width();
      tb.du = 2.0 * hw / cfg.quad_points;
      for (int g = 0; g < cfg.quad_points; ++g) {
        Eigen::VectorXd u(1);
        u[0] = -hw + 2.0 * hw * (g + 0.5) / cfg.quad_points;
        const Eigen::VectorXd theta = geom.to_theta(u);
        const Eigen::VectorXd v = geom.node_values(theta);
        const double psi = geom.psi_eval().psi_from_values(v);
        tb.thetas.push_back(theta);
        tb.psis.push_back(psi);
        tb.ok.push_back(geom.inside_given(theta, v, psi));
        tb.outside.push_back(geom.distance_to_fn(DistanceMetric::hellinger, v,
                                                 psi, truth_nodes) > cfg.s_n);
      }
    }
    tables.push_back(std::move(tb));
    geoms.push_back(std::move(geom));
  }

  std::vector<double> row;
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    Rng rng(derive_seed(cfg.seed, 0xF00ULL + rep));
    // one data set feeds every model through its own sufficient statistic
    std::vector<double> xs(cfg.n);
    double llo = 0.0;
    for (long i = 0; i < cfg.n; ++i) {
      xs[i] = truth.sampler->draw(rng);
      llo += truth.fns.log_f(xs[i]);
    }
    LogSum un;
    for (std::size_t mi = 0; mi < tables.size(); ++mi) {
      const Table& tb = tables[mi];
      const ModelBasis& basis = geoms[mi].psi_eval().basis();
      const int dim = geoms[mi].theta_dim();
      row.assign(dim, 0.0);
      Eigen::VectorXd s = Eigen::VectorXd::Zero(dim);
      std::vector<double> one(dim);
      for (long i = 0; i < cfg.n; ++i) {
        eval_coef_fns(basis, xs[i], one);
        for (int d = 0; d < dim; ++d) s[d] += one[d];
      }
      for (std::size_t g = 0; g < tb.thetas.size(); ++g) {
        if (!tb.ok[g] || !tb.outside[g]) continue;
        un.add(tb.log_a + tb.thetas[g].dot(s) - cfg.n * tb.psis[g] - llo +
               std::log(tb.du));
      }
    }
    if (un.log() > out.threshold_log) ++out.events;
  }
  out.frequency = static_cast<double>(out.events) / cfg.replicates;
  return out;
}

}  // namespace sieveprior
