#include "sieveprior/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sieveprior/quadrature.hpp"

namespace sieveprior {

double psi(const ModelBasis& basis, std::span<const double> theta, double rel_tol) {
  if (static_cast<int>(theta.size()) != coef_dim(basis))
    throw std::invalid_argument("psi: coefficient size mismatch");
  for (double t : theta)
    if (!std::isfinite(t)) throw std::invalid_argument("psi: non-finite coefficient");
  const std::vector<double> brk = model_breakpoints(basis);
  return log_integrate_exp(
      [&](double x) { return coef_fn_value(basis, theta, x); }, brk, rel_tol);
}

PsiEvaluator::PsiEvaluator(ModelBasis basis, int nodes_per_panel)
    : basis_(std::move(basis)) {
  const std::vector<double> brk = model_breakpoints(basis_);
  // Haar integrands are piecewise constant per cell; one node is exact
  if (std::holds_alternative<HaarBasis>(basis_)) nodes_per_panel = 1;
  const GaussRule& rule = gauss_rule(nodes_per_panel);
  const int dim = coef_dim(basis_);
  const std::size_t total = (brk.size() - 1) * rule.nodes.size();
  vals_.resize(total, dim);
  wts_.resize(total);
  nodes_.resize(total);
  std::vector<double> row(dim);
  std::size_t idx = 0;
  for (std::size_t p = 0; p + 1 < brk.size(); ++p) {
    const double a = brk[p], b = brk[p + 1];
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i, ++idx) {
      const double x = c + h * rule.nodes[i];
      eval_coef_fns(basis_, x, row);
      for (int d = 0; d < dim; ++d) vals_(idx, d) = row[d];
      wts_[idx] = h * rule.weights[i];
      nodes_[idx] = x;
    }
  }
}

double PsiEvaluator::psi(const Eigen::VectorXd& theta) const {
  return psi_from_values(vals_ * theta);
}

double PsiEvaluator::psi_from_values(const Eigen::VectorXd& v) const {
  const double vmax = v.maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += wts_[i] * std::exp(v[i] - vmax);
  return vmax + std::log(s);
}

double PsiEvaluator::psi_grad_hess(const Eigen::VectorXd& theta,
                                   Eigen::VectorXd& grad,
                                   Eigen::MatrixXd& hess) const {
  const Eigen::VectorXd v = vals_ * theta;
  const double vmax = v.maxCoeff();
  Eigen::VectorXd p(v.size());
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    p[i] = wts_[i] * std::exp(v[i] - vmax);
    s += p[i];
  }
  p /= s;  // density mass per node
  grad = vals_.transpose() * p;
  hess = vals_.transpose() * p.asDiagonal() * vals_ - grad * grad.transpose();
  return vmax + std::log(s);
}

ExpFamDensity::ExpFamDensity(ModelBasis basis, std::vector<double> theta)
    : basis_(std::move(basis)), theta_(std::move(theta)) {
  psi_ = sieveprior::psi(basis_, theta_);
}

double ExpFamDensity::log_density(double x) const {
  if (x < 0.0 || x > 1.0)
    throw std::invalid_argument("ExpFamDensity::log_density: x outside [0,1]");
  return coef_fn_value(basis_, theta_, x) - psi_;
}

std::vector<double> ExpFamDensity::sample(std::uint64_t seed, int n) const {
  return DensitySampler(*this).sample(seed, n);
}

DensitySampler::DensitySampler(std::function<double(double)> log_density,
                               std::vector<double> breakpoints, int grid_cells)
    : log_f_(std::move(log_density)) {
  if (grid_cells < 8) grid_cells = 8;
  // grid = uniform cells refined with the density's own breakpoints
  std::vector<double> uni(grid_cells + 1);
  for (int i = 0; i <= grid_cells; ++i) uni[i] = static_cast<double>(i) / grid_cells;
  grid_ = merge_breakpoints(uni, breakpoints);
  cdf_.resize(grid_.size());
  cdf_[0] = 0.0;
  const GaussRule& rule = gauss_rule(16);
  for (std::size_t p = 0; p + 1 < grid_.size(); ++p) {
    const double a = grid_[p], b = grid_[p + 1];
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      s += rule.weights[i] * std::exp(log_f_(c + h * rule.nodes[i]));
    cdf_[p + 1] = cdf_[p] + h * s;
  }
  total_ = cdf_.back();
  if (!(total_ > 0.0) || !std::isfinite(total_))
    throw std::invalid_argument("DensitySampler: density does not integrate to a positive value");
  for (double& c : cdf_) c /= total_;
  cdf_.back() = 1.0;
}

DensitySampler::DensitySampler(const ExpFamDensity& d, int grid_cells)
    : DensitySampler([d](double x) { return d.log_density(x); }, d.breakpoints(),
                     grid_cells) {}

double DensitySampler::invert(double u) const {
  // locate the grid cell, then bisect on x within it
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t cell = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
  if (cell == 0) cell = 1;
  if (cell >= cdf_.size()) cell = cdf_.size() - 1;
  double lo = grid_[cell - 1], hi = grid_[cell];
  const GaussRule& rule = gauss_rule(16);
  const double a0 = grid_[cell - 1];
  auto cdf_at = [&](double x) {
    const double c = 0.5 * (a0 + x), h = 0.5 * (x - a0);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      s += rule.weights[i] * std::exp(log_f_(c + h * rule.nodes[i]));
    return cdf_[cell - 1] + h * s / total_;
  };
  for (int iter = 0; iter < 60 && hi - lo > 1e-10; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (cdf_at(mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double DensitySampler::draw(Rng& rng) const { return invert(rng.uniform01()); }

std::vector<double> DensitySampler::sample(std::uint64_t seed, int n) const {
  if (n < 1) throw std::invalid_argument("DensitySampler::sample: n must be >= 1");
  Rng rng(seed);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = draw(rng);
  return out;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::spline_density: return "spline-density";
    case Family::haar_density: return "haar-density";
    case Family::spline_regression: return "spline-regression";
  }
  return "?";
}

Family family_from_name(const std::string& s) {
  if (s == "spline-density") return Family::spline_density;
  if (s == "haar-density") return Family::haar_density;
  if (s == "spline-regression") return Family::spline_regression;
  throw std::invalid_argument("unknown family: " + s);
}

ConstraintSpec ConstraintSpec::spline_density(int k, int q, double L) {
  ConstraintSpec s;
  s.family = Family::spline_density;
  s.k = k;
  s.q = q;
  s.L = L;
  return s;
}

ConstraintSpec ConstraintSpec::haar_density(int level, double L) {
  ConstraintSpec s;
  s.family = Family::haar_density;
  s.level = level;
  s.L = L;
  return s;
}

ConstraintSpec ConstraintSpec::spline_regression(int k, int q, double L, double M) {
  ConstraintSpec s;
  s.family = Family::spline_regression;
  s.k = k;
  s.q = q;
  s.L = L;
  s.M = M;
  return s;
}

int ConstraintSpec::dim() const {
  switch (family) {
    case Family::spline_density:
    case Family::spline_regression: return k + q;
    case Family::haar_density: return (1 << (level + 1)) - 1;
  }
  return 0;
}

ModelBasis ConstraintSpec::make_basis() const {
  if (family == Family::haar_density) return HaarBasis(level);
  return SplineBasis(k, q);
}

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void push_check(MembershipReport& rep, std::string name, double value,
                double limit, double tol) {
  ConstraintCheck c;
  c.name = std::move(name);
  c.value = value;
  c.limit = limit;
  c.slack = limit - value;
  c.ok = value <= limit + tol;
  rep.inside = rep.inside && c.ok;
  rep.checks.push_back(std::move(c));
}

}  // namespace

MembershipReport check_membership(std::span<const double> theta,
                                  const ConstraintSpec& spec,
                                  const MembershipOptions& opt) {
  if (static_cast<int>(theta.size()) != spec.dim())
    throw std::invalid_argument("check_membership: coefficient size mismatch");
  MembershipReport rep;
  rep.inside = true;

  if (spec.family == Family::haar_density) {
    HaarBasis hb(spec.level);
    push_check(rep, "sup|theta'B|", hb.wavelet_sup(theta), spec.L, opt.tol);
    return rep;
  }

  SplineBasis sb(spec.k, spec.q);
  if (spec.family == Family::spline_density) {
    double sum = 0.0;
    for (double t : theta) sum += t;
    push_check(rep, "|sum theta|", std::abs(sum), 0.0, opt.tol);
    const double psi_v = psi(ModelBasis(sb), theta);
    // log f = (theta - psi*1)'B by partition of unity
    std::vector<double> shifted(theta.begin(), theta.end());
    for (double& t : shifted) t -= psi_v;
    push_check(rep, "sup|D^0 log f|", max_abs(shifted), spec.L, opt.tol);
    for (int r = 1; r < spec.q; ++r) {
      const std::vector<double> dc = sb.derivative_coeffs(theta, r);
      push_check(rep, "sup|D^" + std::to_string(r) + " log f|", max_abs(dc),
                 spec.L, opt.tol);
    }
    return rep;
  }

  // spline regression: ||D^r f||_inf <= L for r = 0..q-1 and ||f||_inf <= M
  push_check(rep, "sup|D^0 f|", max_abs(theta), spec.L, opt.tol);
  for (int r = 1; r < spec.q; ++r) {
    const std::vector<double> dc = sb.derivative_coeffs(theta, r);
    push_check(rep, "sup|D^" + std::to_string(r) + " f|", max_abs(dc), spec.L,
               opt.tol);
  }
  push_check(rep, "sup|f| (M)", max_abs(theta), spec.M, opt.tol);
  return rep;
}

}  // namespace sieveprior
