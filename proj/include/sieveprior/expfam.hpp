#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sieveprior/basis.hpp"
#include "sieveprior/rng.hpp"

namespace sieveprior {

// log-normalizer psi(theta) = log ∫_0^1 exp(theta'B(x)) dx, panel-aligned
// Gauss with node doubling to rel_tol, max-subtraction in the log domain
double psi(const ModelBasis& basis, std::span<const double> theta,
           double rel_tol = 1e-12);

// Preplanned quadrature for one basis: psi, its gradient E[B] and Hessian
// Cov(B) become dense linear algebra on a cached node table. Used in Monte
// Carlo loops where the adaptive psi would be wasteful; agrees with psi()
// to ~1e-13 for the coefficient ranges the priors allow.
class PsiEvaluator {
 public:
  explicit PsiEvaluator(ModelBasis basis, int nodes_per_panel = 32);

  int dim() const { return static_cast<int>(vals_.cols()); }
  const ModelBasis& basis() const { return basis_; }

  double psi(const Eigen::VectorXd& theta) const;
  // psi from precomputed node values v = node_values() * theta
  double psi_from_values(const Eigen::VectorXd& v) const;
  // fills grad = E_theta[B] and hess = Cov_theta(B); returns psi
  double psi_grad_hess(const Eigen::VectorXd& theta, Eigen::VectorXd& grad,
                       Eigen::MatrixXd& hess) const;

  const Eigen::MatrixXd& node_values() const { return vals_; }
  const Eigen::VectorXd& node_weights() const { return wts_; }
  const Eigen::VectorXd& nodes() const { return nodes_; }

 private:
  ModelBasis basis_;
  Eigen::MatrixXd vals_;   // nodes x dim
  Eigen::VectorXd wts_;    // positive, sums to 1
  Eigen::VectorXd nodes_;
};

// f_theta = exp(theta'B - psi(theta)) on [0,1]
class ExpFamDensity {
 public:
  ExpFamDensity(ModelBasis basis, std::vector<double> theta);

  const ModelBasis& basis() const { return basis_; }
  std::span<const double> theta() const { return theta_; }
  double psi_value() const { return psi_; }

  double log_density(double x) const;
  double density(double x) const { return std::exp(log_density(x)); }
  std::vector<double> breakpoints() const { return model_breakpoints(basis_); }

  // i.i.d. draws by numerical inverse CDF; deterministic given seed
  std::vector<double> sample(std::uint64_t seed, int n) const;

 private:
  ModelBasis basis_;
  std::vector<double> theta_;
  double psi_;
};

// Inverse-CDF sampler for an arbitrary positive density on [0,1]: the CDF is
// tabulated on a grid of exactly-integrated panels and inverted by monotone
// bisection to 1e-10.
class DensitySampler {
 public:
  DensitySampler(std::function<double(double)> log_density,
                 std::vector<double> breakpoints, int grid_cells = 4096);
  explicit DensitySampler(const ExpFamDensity& d, int grid_cells = 4096);

  double draw(Rng& rng) const;
  double invert(double u) const;  // u in [0,1)
  std::vector<double> sample(std::uint64_t seed, int n) const;

 private:
  std::function<double(double)> log_f_;
  std::vector<double> grid_;  // grid_cells+1 points
  std::vector<double> cdf_;   // cdf_[i] = F(grid_[i]); cdf_.back() == 1
  double total_ = 1.0;        // unnormalized mass, used when refining in-cell
};

enum class Family { spline_density, haar_density, spline_regression };

std::string family_name(Family f);
Family family_from_name(const std::string& s);

// The parameter-space definition of one model: which constraints cut Theta_j
// out of R^dim.
struct ConstraintSpec {
  Family family = Family::spline_density;
  int q = 1, k = 0;  // spline families
  int level = 0;     // haar
  double L = 1.0;
  double M = 0.0;  // regression sup bound

  static ConstraintSpec spline_density(int k, int q, double L);
  static ConstraintSpec haar_density(int level, double L);
  static ConstraintSpec spline_regression(int k, int q, double L, double M);

  int dim() const;
  ModelBasis make_basis() const;
};

struct ConstraintCheck {
  std::string name;
  double value = 0.0;  // measured (safe-from-above for sup norms)
  double limit = 0.0;
  double slack = 0.0;  // limit - value
  bool ok = false;
};

struct MembershipReport {
  bool inside = false;
  std::vector<ConstraintCheck> checks;
};

struct MembershipOptions {
  double tol = 1e-9;  // boundary acceptance tolerance
};

// Theta_j membership with per-constraint margins. Sup norms use the
// safe-from-above estimate: B-spline coefficient bounds (of the appropriate
// derivative representation), exact cell maxima for Haar.
MembershipReport check_membership(std::span<const double> theta,
                                  const ConstraintSpec& spec,
                                  const MembershipOptions& opt = {});

}  // namespace sieveprior
