#include "sieveprior/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace sieveprior {

std::string metric_name(DistanceMetric m) {
  switch (m) {
    case DistanceMetric::d_inf: return "d-inf";
    case DistanceMetric::hellinger: return "hellinger";
    case DistanceMetric::l2: return "l2";
  }
  return "?";
}

DistanceMetric metric_from_name(const std::string& s) {
  if (s == "d-inf" || s == "dinf") return DistanceMetric::d_inf;
  if (s == "hellinger") return DistanceMetric::hellinger;
  if (s == "l2") return DistanceMetric::l2;
  throw std::invalid_argument("unknown metric: " + s);
}

ModelGeometry::ModelGeometry(ConstraintSpec spec, int nodes_per_panel)
    : spec_(spec), psi_(spec.make_basis(), nodes_per_panel) {
  theta_dim_ = spec_.dim();
  switch (spec_.family) {
    case Family::spline_density: {
      const int m = theta_dim_;
      free_dim_ = m - 1;
      half_width_ = 2.0 * spec_.L * std::sqrt(static_cast<double>(m));
      // Helmert columns: orthonormal basis of the zero-sum hyperplane
      hull_map_ = Eigen::MatrixXd::Zero(m, free_dim_);
      for (int j = 1; j <= free_dim_; ++j) {
        const double norm = std::sqrt(static_cast<double>(j) * (j + 1));
        for (int i = 0; i < j; ++i) hull_map_(i, j - 1) = 1.0 / norm;
        hull_map_(j, j - 1) = -static_cast<double>(j) / norm;
      }
      break;
    }
    case Family::haar_density: {
      free_dim_ = theta_dim_;
      half_width_ = spec_.L;
      hull_map_ = Eigen::MatrixXd::Identity(theta_dim_, theta_dim_);
      break;
    }
    case Family::spline_regression: {
      free_dim_ = theta_dim_;
      half_width_ = std::min(spec_.L, spec_.M > 0.0 ? spec_.M : spec_.L);
      hull_map_ = Eigen::MatrixXd::Identity(theta_dim_, theta_dim_);
      break;
    }
  }
  // free_dim == 0 is the degenerate one-point model (spline-density with
  // m = 1): its measure is the counting measure, volume 1
}

double ModelGeometry::box_volume() const {
  return std::pow(2.0 * half_width_, free_dim_);
}

double ModelGeometry::log_box_volume() const {
  return free_dim_ * std::log(2.0 * half_width_);
}

Eigen::VectorXd ModelGeometry::to_theta(const Eigen::VectorXd& u) const {
  if (u.size() != free_dim_)
    throw std::invalid_argument("ModelGeometry::to_theta: dimension mismatch");
  if (free_dim_ == 0) return Eigen::VectorXd::Zero(theta_dim_);
  if (spec_.family == Family::spline_density) return hull_map_ * u;
  return u;
}

Eigen::VectorXd ModelGeometry::to_free(const Eigen::VectorXd& theta) const {
  if (theta.size() != theta_dim_)
    throw std::invalid_argument("ModelGeometry::to_free: dimension mismatch");
  if (spec_.family == Family::spline_density) return hull_map_.transpose() * theta;
  return theta;
}

bool ModelGeometry::inside(const Eigen::VectorXd& theta, double tol,
                           double* psi_out) const {
  if (theta.size() != theta_dim_)
    throw std::invalid_argument("ModelGeometry::inside: dimension mismatch");
  switch (spec_.family) {
    case Family::spline_density: {
      const double p = psi_.psi(theta);
      if (psi_out) *psi_out = p;
      if ((theta.array() - p).abs().maxCoeff() > spec_.L + tol) return false;
      const SplineBasis& sb = std::get<SplineBasis>(psi_.basis());
      std::vector<double> th(theta.data(), theta.data() + theta.size());
      for (int r = 1; r < spec_.q; ++r) {
        const std::vector<double> dc = sb.derivative_coeffs(th, r);
        double mx = 0.0;
        for (double c : dc) mx = std::max(mx, std::abs(c));
        if (mx > spec_.L + tol) return false;
      }
      return true;
    }
    case Family::haar_density: {
      // wavelet expansion is constant per finest cell; node values cover every
      // cell, so the max over nodes is the exact sup
      const double sup = (psi_.node_values() * theta).cwiseAbs().maxCoeff();
      if (sup > spec_.L + tol) return false;
      if (psi_out) *psi_out = psi_.psi(theta);
      return true;
    }
    case Family::spline_regression: {
      const double mx = theta.cwiseAbs().maxCoeff();
      if (mx > spec_.L + tol) return false;
      if (spec_.M > 0.0 && mx > spec_.M + tol) return false;
      const SplineBasis& sb = std::get<SplineBasis>(psi_.basis());
      std::vector<double> th(theta.data(), theta.data() + theta.size());
      for (int r = 1; r < spec_.q; ++r) {
        const std::vector<double> dc = sb.derivative_coeffs(th, r);
        double dm = 0.0;
        for (double c : dc) dm = std::max(dm, std::abs(c));
        if (dm > spec_.L + tol) return false;
      }
      return true;
    }
  }
  return false;
}

bool ModelGeometry::inside_given(const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& v, double psi,
                                 double tol) const {
  switch (spec_.family) {
    case Family::spline_density: {
      if ((theta.array() - psi).abs().maxCoeff() > spec_.L + tol) return false;
      const SplineBasis& sb = std::get<SplineBasis>(psi_.basis());
      std::vector<double> th(theta.data(), theta.data() + theta.size());
      for (int r = 1; r < spec_.q; ++r) {
        const std::vector<double> dc = sb.derivative_coeffs(th, r);
        double mx = 0.0;
        for (double c : dc) mx = std::max(mx, std::abs(c));
        if (mx > spec_.L + tol) return false;
      }
      return true;
    }
    case Family::haar_density:
      return v.cwiseAbs().maxCoeff() <= spec_.L + tol;
    case Family::spline_regression: {
      const double mx = theta.cwiseAbs().maxCoeff();
      if (mx > spec_.L + tol) return false;
      if (spec_.M > 0.0 && mx > spec_.M + tol) return false;
      const SplineBasis& sb = std::get<SplineBasis>(psi_.basis());
      std::vector<double> th(theta.data(), theta.data() + theta.size());
      for (int r = 1; r < spec_.q; ++r) {
        const std::vector<double> dc = sb.derivative_coeffs(th, r);
        double dm = 0.0;
        for (double c : dc) dm = std::max(dm, std::abs(c));
        if (dm > spec_.L + tol) return false;
      }
      return true;
    }
  }
  return false;
}

double ModelGeometry::distance(DistanceMetric metric, const Eigen::VectorXd& va,
                               double psia, const Eigen::VectorXd& vb,
                               double psib) const {
  const Eigen::VectorXd& w = psi_.node_weights();
  switch (metric) {
    case DistanceMetric::d_inf: {
      if (spec_.family == Family::spline_regression)
        return (va - vb).cwiseAbs().maxCoeff();
      return ((va.array() - psia) - (vb.array() - psib)).abs().maxCoeff();
    }
    case DistanceMetric::hellinger: {
      const auto sa = ((va.array() - psia) * 0.5).exp();
      const auto sb = ((vb.array() - psib) * 0.5).exp();
      return std::sqrt(std::max(0.0, (w.array() * (sa - sb).square()).sum()));
    }
    case DistanceMetric::l2: {
      if (spec_.family == Family::spline_regression)
        return std::sqrt(std::max(0.0, (w.array() * (va - vb).array().square()).sum()));
      const auto fa = (va.array() - psia).exp();
      const auto fb = (vb.array() - psib).exp();
      return std::sqrt(std::max(0.0, (w.array() * (fa - fb).square()).sum()));
    }
  }
  return 0.0;
}

double ModelGeometry::distance_to_fn(DistanceMetric metric,
                                     const Eigen::VectorXd& va, double psia,
                                     const Eigen::VectorXd& fn_at_nodes) const {
  const Eigen::VectorXd& w = psi_.node_weights();
  switch (metric) {
    case DistanceMetric::d_inf: {
      if (spec_.family == Family::spline_regression)
        return (va - fn_at_nodes).cwiseAbs().maxCoeff();
      return ((va.array() - psia) - fn_at_nodes.array()).abs().maxCoeff();
    }
    case DistanceMetric::hellinger: {
      const auto sa = ((va.array() - psia) * 0.5).exp();
      const auto so = (fn_at_nodes.array() * 0.5).exp();
      return std::sqrt(std::max(0.0, (w.array() * (sa - so).square()).sum()));
    }
    case DistanceMetric::l2: {
      if (spec_.family == Family::spline_regression)
        return std::sqrt(
            std::max(0.0, (w.array() * (va - fn_at_nodes).array().square()).sum()));
      const auto fa = (va.array() - psia).exp();
      const auto fo = fn_at_nodes.array().exp();
      return std::sqrt(std::max(0.0, (w.array() * (fa - fo).square()).sum()));
    }
  }
  return 0.0;
}

Eigen::VectorXd ModelGeometry::tabulate(const std::function<double(double)>& fn) const {
  const Eigen::VectorXd& xs = psi_.nodes();
  Eigen::VectorXd out(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) out[i] = fn(xs[i]);
  return out;
}

}  // namespace sieveprior
