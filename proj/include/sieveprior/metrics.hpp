#pragma once

#include <functional>
#include <vector>

#include "sieveprior/expfam.hpp"

namespace sieveprior {

// A density on [0,1] as seen by the quadrature kernels: its log and the
// breakpoints between which it is smooth.
struct DensityView {
  std::function<double(double)> log_f;
  std::vector<double> breaks{0.0, 1.0};
};

DensityView view(const ExpFamDensity& d);

struct DivergenceReport {
  double hellinger = 0.0;      // d_H(f,g)
  double kl_d = 0.0;           // D(f||g) = ∫ f log(f/g)
  double v = 0.0;              // V(f||g) = ∫ f log(f/g)^2
  double v_centered = 0.0;     // V'(f||g) = V - D^2 (clamped at 0)
  double l2 = 0.0;             // ||f - g||_2
  double sup_log_ratio = 0.0;  // grid estimate of ||log f - log g||_inf
};

struct MetricOptions {
  double rel_tol = 1e-9;
  int sup_grid_pts = 4097;  // per panel
};

DivergenceReport divergences(const DensityView& f, const DensityView& g,
                             const MetricOptions& opt = {});

// sqrt ∫ (u-v)^2 dμ over [0,1] (Lebesgue μ_X)
double l2_distance(const std::function<double(double)>& u,
                   const std::function<double(double)>& v,
                   std::span<const double> breaks, double rel_tol = 1e-10);

// D, V and d_H^2 between the regression sampling densities p_{f_o} and p_f;
// the y-integrals are analytic, only x is quadratured.
struct GaussianDivergences {
  double kl_d = 0.0;
  double v = 0.0;
  double hellinger_sq = 0.0;
};

GaussianDivergences gaussian_closed_forms(const std::function<double(double)>& f_o,
                                          const std::function<double(double)>& f,
                                          double sigma,
                                          std::span<const double> breaks,
                                          double rel_tol = 1e-10);

// (1 - e^{-M^2/(2σ^2)}) / (2 M^2): the Hellinger/L2 comparison constant
double hellinger_l2_constant(double M, double sigma);

}  // namespace sieveprior
