#pragma once

#include <Eigen/Dense>
#include <optional>

#include "sieveprior/expfam.hpp"

namespace sieveprior {

enum class DistanceMetric { d_inf, hellinger, l2 };

std::string metric_name(DistanceMetric m);
DistanceMetric metric_from_name(const std::string& s);

// Sampling geometry of one model's parameter space: the affine hull
// parametrization (free coordinates), a bounding box that provably contains
// Theta_j, and the node tables that turn psi / densities / distances into
// dense linear algebra.
//
// Free coordinates:
//   spline-density   theta = H u on the zero-sum hyperplane (H orthonormal,
//                    Helmert columns), |u_i| <= 2 L sqrt(m)
//   haar-density     u = theta, |theta_i| <= L (wavelet orthonormality)
//   spline-regression u = theta, |theta_i| <= min(L, M)
// Lebesgue measure on the hull equals Lebesgue in u because H is orthonormal.
class ModelGeometry {
 public:
  explicit ModelGeometry(ConstraintSpec spec, int nodes_per_panel = 32);

  const ConstraintSpec& spec() const { return spec_; }
  int theta_dim() const { return theta_dim_; }
  int free_dim() const { return free_dim_; }
  double box_half_width() const { return half_width_; }
  double box_volume() const;
  double log_box_volume() const;

  Eigen::VectorXd to_theta(const Eigen::VectorXd& u) const;
  Eigen::VectorXd to_free(const Eigen::VectorXd& theta) const;

  // membership consistent with check_membership (safe-from-above sup rule);
  // psi is computed once and returned for reuse when the family needs it
  bool inside(const Eigen::VectorXd& theta, double tol = 1e-9,
              double* psi_out = nullptr) const;

  // same decision when node values v = theta'B and psi are already at hand
  bool inside_given(const Eigen::VectorXd& theta, const Eigen::VectorXd& v,
                    double psi, double tol = 1e-9) const;

  const PsiEvaluator& psi_eval() const { return psi_; }
  double psi_of(const Eigen::VectorXd& theta) const { return psi_.psi(theta); }

  // v = theta'B at the quadrature nodes
  Eigen::VectorXd node_values(const Eigen::VectorXd& theta) const {
    return psi_.node_values() * theta;
  }
  const Eigen::VectorXd& node_weights() const { return psi_.node_weights(); }
  const Eigen::VectorXd& nodes() const { return psi_.nodes(); }

  // distances between members from their node values (and psi for densities)
  double distance(DistanceMetric metric, const Eigen::VectorXd& va, double psia,
                  const Eigen::VectorXd& vb, double psib) const;
  // distance to an external function tabulated at the nodes: pass log f_o for
  // density metrics, f_o for the regression l2 metric
  double distance_to_fn(DistanceMetric metric, const Eigen::VectorXd& va,
                        double psia, const Eigen::VectorXd& fn_at_nodes) const;

  Eigen::VectorXd tabulate(const std::function<double(double)>& fn) const;

 private:
  ConstraintSpec spec_;
  PsiEvaluator psi_;
  int theta_dim_ = 0;
  int free_dim_ = 0;
  double half_width_ = 0.0;
  Eigen::MatrixXd hull_map_;  // theta_dim x free_dim, orthonormal columns
};

}  // namespace sieveprior
