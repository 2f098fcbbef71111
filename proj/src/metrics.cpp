#include "sieveprior/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "sieveprior/quadrature.hpp"

namespace sieveprior {

DensityView view(const ExpFamDensity& d) {
  DensityView v;
  v.log_f = [d](double x) { return d.log_density(x); };
  v.breaks = d.breakpoints();
  return v;
}

DivergenceReport divergences(const DensityView& f, const DensityView& g,
                             const MetricOptions& opt) {
  const std::vector<double> brk = merge_breakpoints(f.breaks, g.breaks);
  auto lf = f.log_f, lg = g.log_f;

  auto check = [](double lv) {
    if (!std::isfinite(lv))
      throw std::invalid_argument("divergences: density is not strictly positive");
    return lv;
  };

  DivergenceReport rep;
  rep.hellinger = std::sqrt(std::max(
      0.0, integrate_adaptive(
               [&](double x) {
                 const double a = std::exp(0.5 * check(lf(x)));
                 const double b = std::exp(0.5 * check(lg(x)));
                 return (a - b) * (a - b);
               },
               brk, opt.rel_tol)));
  rep.kl_d = integrate_adaptive(
      [&](double x) {
        const double r = check(lf(x)) - check(lg(x));
        return std::exp(lf(x)) * r;
      },
      brk, opt.rel_tol);
  rep.v = integrate_adaptive(
      [&](double x) {
        const double r = lf(x) - lg(x);
        return std::exp(lf(x)) * r * r;
      },
      brk, opt.rel_tol);
  // V' = V - D^2, computed in this order to control cancellation near f = g
  rep.v_centered = std::max(0.0, rep.v - rep.kl_d * rep.kl_d);
  rep.l2 = std::sqrt(std::max(
      0.0, integrate_adaptive(
               [&](double x) {
                 const double d = std::exp(lf(x)) - std::exp(lg(x));
                 return d * d;
               },
               brk, opt.rel_tol)));
  rep.sup_log_ratio =
      sup_on_grid([&](double x) { return lf(x) - lg(x); }, brk, opt.sup_grid_pts);
  return rep;
}

double l2_distance(const std::function<double(double)>& u,
                   const std::function<double(double)>& v,
                   std::span<const double> breaks, double rel_tol) {
  return std::sqrt(std::max(
      0.0, integrate_adaptive(
               [&](double x) {
                 const double d = u(x) - v(x);
                 return d * d;
               },
               breaks, rel_tol)));
}

GaussianDivergences gaussian_closed_forms(const std::function<double(double)>& f_o,
                                          const std::function<double(double)>& f,
                                          double sigma,
                                          std::span<const double> breaks,
                                          double rel_tol) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("gaussian_closed_forms: sigma must be > 0");
  const double s2 = sigma * sigma;
  const double l2sq = integrate_adaptive(
      [&](double x) {
        const double d = f_o(x) - f(x);
        return d * d;
      },
      breaks, rel_tol);
  const double m4 = integrate_adaptive(
      [&](double x) {
        const double d = f_o(x) - f(x);
        return d * d * d * d;
      },
      breaks, rel_tol);
  GaussianDivergences out;
  out.kl_d = l2sq / (2.0 * s2);
  out.v = l2sq / s2 + m4 / (4.0 * s2 * s2);
  out.hellinger_sq = integrate_adaptive(
      [&](double x) {
        const double d = f_o(x) - f(x);
        return 2.0 * (1.0 - std::exp(-d * d / (8.0 * s2)));
      },
      breaks, rel_tol);
  return out;
}

double hellinger_l2_constant(double M, double sigma) {
  if (!(M > 0.0) || !(sigma > 0.0))
    throw std::invalid_argument("hellinger_l2_constant: M and sigma must be > 0");
  return (1.0 - std::exp(-M * M / (2.0 * sigma * sigma))) / (2.0 * M * M);
}

}  // namespace sieveprior
