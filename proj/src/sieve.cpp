#include "sieveprior/sieve.hpp"

#include <cmath>
#include <stdexcept>

#include "sieveprior/quadrature.hpp"

namespace sieveprior {

ConstraintSpec ModelIndex::constraints(double M) const {
  switch (family) {
    case Family::spline_density: return ConstraintSpec::spline_density(k, q, L);
    case Family::haar_density: return ConstraintSpec::haar_density(level, L);
    case Family::spline_regression:
      return ConstraintSpec::spline_regression(k, q, L, M);
  }
  throw std::logic_error("ModelIndex::constraints: bad family");
}

std::string ModelIndex::label() const {
  if (family == Family::haar_density)
    return "(l=" + std::to_string(level) + ",L=" + std::to_string(L) + ")";
  return "(k=" + std::to_string(k) + ",q=" + std::to_string(q) +
         ",L=" + std::to_string(L) + ")";
}

FamilyConstants constants_for(const ModelIndex& idx) {
  FamilyConstants c;
  switch (idx.family) {
    case Family::spline_density: {
      if (idx.k < 0 || idx.q < 1 || idx.L < 1)
        throw std::invalid_argument("constants_for: invalid spline-density index");
      c.m = idx.k + idx.q;
      c.A = 19.28 * std::sqrt(static_cast<double>(idx.q)) * (2.0 * idx.q + 1.0) *
                std::pow(9.0, idx.q - 1) * (idx.L + 1.0) * std::exp(0.5 * idx.L) +
            0.06;
      break;
    }
    case Family::haar_density: {
      if (idx.level < 0 || idx.L < 1)
        throw std::invalid_argument("constants_for: invalid haar-density index");
      c.m = 1 << (idx.level + 1);
      c.A = 19.28 * std::pow(2.0, 0.5 * (idx.level + 1)) * (2.0 * idx.L + 1.0) *
                std::exp(static_cast<double>(idx.L)) +
            0.06;
      break;
    }
    case Family::spline_regression: {
      if (idx.k < 0 || idx.q < 1 || idx.L < 1)
        throw std::invalid_argument("constants_for: invalid spline-regression index");
      c.m = idx.k + idx.q;
      c.A = 9.64 * std::sqrt(static_cast<double>(idx.q)) * (2.0 * idx.q + 1.0) *
                std::pow(9.0, idx.q - 1) +
            0.06;
      break;
    }
  }
  c.C = c.m + idx.L;
  return c;
}

double c1_constant(double M, double sigma) {
  if (!(M > 0.0) || !(sigma > 0.0))
    throw std::invalid_argument("c1_constant: M and sigma must be > 0");
  const double a = (1.0 - std::exp(-M * M / (2.0 * sigma * sigma))) / (2.0 * M * M);
  return std::min(a, 1.0 / (2.0 * sigma * sigma));
}

double c2_constant(double c0, double M) { return 2.0 * (c0 + 2.0 * M); }

namespace {

// root of g(γ) = coef * γ/sqrt(1-4γ) - rho on (0, 0.25); g is increasing
double bisect_gamma(double coef, double rho) {
  auto g = [&](double x) { return coef * x / std::sqrt(1.0 - 4.0 * x) - rho; };
  double lo = 1e-12, hi = 0.25 - 1e-12;
  if (g(lo) > 0.0 || g(hi) < 0.0)
    throw std::invalid_argument("gamma root: no solution in (0, 0.25) for rho given");
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double gamma_for_density(double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("gamma_for_density: rho must be > 0");
  return bisect_gamma(0.13, rho);
}

double gamma_for_regression(const RegressionParams& rp, double rho) {
  if (!(rho > 0.0))
    throw std::invalid_argument("gamma_for_regression: rho must be > 0");
  const double c1 = c1_constant(rp.M, rp.sigma);
  const double c2 = c2_constant(rp.c0, rp.M);
  return bisect_gamma(0.13 / (c2 * std::sqrt(c1)), rho);
}

double eta_for(const ModelIndex& idx, double gamma, const SieveOptions& opt,
               const RegressionParams& rp) {
  if (!(gamma > 0.0 && gamma < 0.25))
    throw std::invalid_argument("eta_for: gamma must be in (0, 0.25)");
  const FamilyConstants fc = constants_for(idx);
  const double om4g = 1.0 - 4.0 * gamma;
  if (idx.family == Family::spline_regression) {
    const double c1 = c1_constant(rp.M, rp.sigma);
    double log_arg;
    if (opt.eta_mode == EtaMode::literal_1072_5) {
      log_arg = std::log(1072.5 * fc.A);
    } else {
      const double c2 = c2_constant(rp.c0, rp.M);
      log_arg = std::log(15.4 * c2 * std::sqrt(c1) * fc.A * std::sqrt(om4g) / gamma);
    }
    return 4.0 * fc.m / (c1 * om4g) * log_arg +
           fc.C * std::max(1.0, 8.0 / (c1 * om4g));
  }
  return 4.0 * fc.m / om4g * std::log(46.2 * fc.A * std::sqrt(om4g) / gamma) +
         8.0 * fc.C / om4g;
}

double kappa_density(double gamma) { return 1.0 + (1.0 - 4.0 * gamma) / 8.0; }

double kappa_regression(double sigma) {
  return 1.0 + 1.0 / (2.0 * sigma * sigma) + 0.0056 / sigma;
}

std::vector<ModelIndex> enumerate_models(Family family, const SieveOptions& opt) {
  std::vector<ModelIndex> out;
  if (family == Family::haar_density) {
    if (opt.l_min < 0 || opt.l_max < opt.l_min || opt.L_min < 1 ||
        opt.L_max < opt.L_min)
      throw std::invalid_argument(
          "enumerate_models: need 0 <= l_min <= l_max and 1 <= L_min <= L_max");
    for (int l = opt.l_min; l <= opt.l_max; ++l)
      for (int L = opt.L_min; L <= opt.L_max; ++L) {
        ModelIndex m;
        m.family = family;
        m.level = l;
        m.L = L;
        out.push_back(m);
      }
    return out;
  }
  if (opt.k_min < 0 || opt.k_max < opt.k_min || opt.q_min < 1 ||
      opt.q_max < opt.q_min || opt.L_min < 1 || opt.L_max < opt.L_min)
    throw std::invalid_argument(
        "enumerate_models: need 0 <= k_min <= k_max, 1 <= q_min <= q_max, 1 <= "
        "L_min <= L_max");
  for (int k = opt.k_min; k <= opt.k_max; ++k)
    for (int q = opt.q_min; q <= opt.q_max; ++q)
      for (int L = opt.L_min; L <= opt.L_max; ++L) {
        ModelIndex m;
        m.family = family;
        m.k = k;
        m.q = q;
        m.L = L;
        out.push_back(m);
      }
  return out;
}

SieveSpec build_sieve(Family family, const SieveOptions& opt,
                      const RegressionParams& rp) {
  SieveSpec spec;
  spec.family = family;
  spec.options = opt;
  spec.reg = rp;
  const bool regression = family == Family::spline_regression;
  spec.rho = regression ? opt.rho_regression : opt.rho;
  spec.gamma = regression ? gamma_for_regression(rp, spec.rho)
                          : gamma_for_density(spec.rho);
  spec.kappa = regression ? kappa_regression(rp.sigma) : kappa_density(spec.gamma);

  const std::vector<ModelIndex> idx = enumerate_models(family, opt);
  if (idx.empty()) throw std::invalid_argument("build_sieve: empty index set");
  spec.models.reserve(idx.size());
  LogSum lse;
  double sum_c = 0.0;
  for (const ModelIndex& j : idx) {
    SieveModel m;
    m.index = j;
    const FamilyConstants fc = constants_for(j);
    m.constants.A = fc.A;
    m.constants.m = fc.m;
    m.constants.C = fc.C;
    m.constants.eta = eta_for(j, spec.gamma, opt, rp);
    spec.models.push_back(m);
    lse.add(-spec.kappa * m.constants.eta);
    sum_c += std::exp(-fc.C);
  }
  spec.log_alpha = -lse.log();
  spec.sum_exp_neg_c = sum_c;
  for (SieveModel& m : spec.models)
    m.constants.log_a = spec.log_alpha - spec.kappa * m.constants.eta;

  // Tail of the excluded lattice, bounded through the C_j floor of η:
  // η_j >= floor_per_C * C_j, so e^{-κ η_j} <= e^{-κ floor_per_C C_j}.
  const double om4g = 1.0 - 4.0 * spec.gamma;
  const double floor_per_c =
      regression ? std::max(1.0, 8.0 / (c1_constant(rp.M, rp.sigma) * om4g))
                 : 8.0 / om4g;
  const double a = spec.kappa * floor_per_c;  // decay per unit of C = m+L
  // Models below the min bounds are excluded by configuration choice; the
  // tail bound quantifies only what the max bounds cut off.
  double tail = 0.0;
  if (family == Family::haar_density) {
    for (int l = opt.l_max + 1; l <= 64; ++l) {
      // all L >= L_min at an excluded level: geometric in L
      const double first = std::exp(-a * (std::exp2(l + 1) + opt.L_min));
      tail += first / (1.0 - std::exp(-a));
      if (first == 0.0) break;
    }
    for (int l = opt.l_min; l <= opt.l_max; ++l) {
      // L beyond the truncation at each kept level: geometric in L
      const double first = std::exp(-a * (std::exp2(l + 1) + opt.L_max + 1.0));
      tail += first / (1.0 - std::exp(-a));
    }
  } else {
    // Σ over the min-anchored lattice of e^{-a(k+q+L)} minus the boxed part,
    // both in closed form (geometric products)
    const double r = std::exp(-a);
    auto geo = [&](int first, int last) {  // Σ_{i=first..last} r^i
      if (last < first) return 0.0;
      return (std::pow(r, first) - std::pow(r, last + 1)) / (1.0 - r);
    };
    auto geo_inf = [&](int first) { return std::pow(r, first) / (1.0 - r); };
    const double full =
        geo_inf(opt.k_min) * geo_inf(opt.q_min) * geo_inf(opt.L_min);
    const double boxed = geo(opt.k_min, opt.k_max) * geo(opt.q_min, opt.q_max) *
                         geo(opt.L_min, opt.L_max);
    tail = std::max(0.0, full - boxed);
  }
  spec.weight_tail_bound = tail * std::exp(spec.log_alpha);
  return spec;
}

double spline_lattice_weight_sum() {
  const double e1 = std::exp(-1.0);
  return std::exp(-2.0) / std::pow(1.0 - e1, 3);
}

}  // namespace sieveprior
