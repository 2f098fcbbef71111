#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace sieveprior {

// Knot layout (0,...,0, 1/(1+k), ..., k/(1+k), 1,...,1) with q-fold endpoint
// repetition; 2q+k knots total.
struct KnotVector {
  int q = 1;  // spline order (degree q-1)
  int k = 0;  // interior knot count
  std::vector<double> knots;
};

KnotVector make_spline_knots(int k, int q);

// Normalized B-spline basis B_1..B_m, m = k+q. Basis function B_i lives on
// knots y_i..y_{i+q}; the family is a partition of unity on [0,1].
// x = 1 is evaluated left-continuously (it belongs to the last knot interval).
class SplineBasis {
 public:
  explicit SplineBasis(KnotVector kv);
  SplineBasis(int k, int q) : SplineBasis(make_spline_knots(k, q)) {}

  int order() const { return kv_.q; }
  int interior_knots() const { return kv_.k; }
  int size() const { return kv_.k + kv_.q; }
  const KnotVector& knot_vector() const { return kv_; }

  // all m basis values at x (out.size() == size())
  void eval(double x, std::span<double> out) const;
  std::vector<double> eval(double x) const;

  double value(std::span<const double> theta, double x) const;

  // D^r(theta'B)(x) via the exact coefficient-differencing recursion, 0 <= r <= q-1
  double derivative(std::span<const double> theta, int r, double x) const;

  // coefficients of D^r(theta'B) in the normalized order-(q-r) basis on the
  // same knots (size m-r); their max-abs bounds ||D^r(theta'B)||_inf from above
  std::vector<double> derivative_coeffs(std::span<const double> theta, int r) const;

  std::vector<double> breakpoints() const;  // 0, interior knots, 1

  Eigen::MatrixXd gram() const;  // exact L2[0,1] inner products

 private:
  KnotVector kv_;
  int find_span(double x) const;
  void eval_nonzero(double x, int span, int degree, double* out) const;

  friend class SplineDerivativeScratch;
};

double haar_mother(double t);  // +1 on [0,0.5), -1 on [0.5,1], 0 outside

// psi_{j1,k1}(x) = 2^{j1/2} psi*(2^{j1} x - k1); half-open cells, x = 1
// assigned to the last cell.
double eval_haar(int l, int j1, int k1, double x);

// Haar system at level l: flat index 0 is the constant function, indices
// 1..m-1 are the wavelets in (j1 ascending, k1 ascending) order, m = 2^{l+1}.
class HaarBasis {
 public:
  explicit HaarBasis(int level);

  int level() const { return level_; }
  int fn_count() const { return 1 << (level_ + 1); }       // m, incl. constant
  int wavelet_count() const { return fn_count() - 1; }     // model dimension

  int flatten(int j1, int k1) const;           // -> 1..m-1
  std::pair<int, int> unflatten(int i) const;  // i in 1..m-1

  double eval_flat(double x, int i) const;  // i = 0 is the constant
  void eval_wavelets(double x, std::span<double> out) const;
  double wavelet_value(std::span<const double> theta, double x) const;

  // exact sup of theta' (wavelets): the expansion is constant on the 2^{l+1}
  // finest cells
  double wavelet_sup(std::span<const double> theta) const;

  std::vector<double> breakpoints() const;  // dyadic grid, 2^{l+1} cells

  Eigen::MatrixXd gram() const;  // m x m, constant included

 private:
  int level_;
};

// The coefficient-function view a model needs: spline models pair theta with
// all m B-splines, Haar models pair theta in R^{m-1} with the wavelets only.
using ModelBasis = std::variant<SplineBasis, HaarBasis>;

int coef_dim(const ModelBasis& b);
void eval_coef_fns(const ModelBasis& b, double x, std::span<double> out);
double coef_fn_value(const ModelBasis& b, std::span<const double> theta, double x);
std::vector<double> model_breakpoints(const ModelBasis& b);

}  // namespace sieveprior
