#include "sieveprior/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sieveprior/quadrature.hpp"

namespace sieveprior {

KnotVector make_spline_knots(int k, int q) {
  if (k < 0) throw std::invalid_argument("make_spline_knots: k must be >= 0");
  if (q < 1) throw std::invalid_argument("make_spline_knots: q must be >= 1");
  KnotVector kv;
  kv.q = q;
  kv.k = k;
  kv.knots.reserve(2 * q + k);
  for (int i = 0; i < q; ++i) kv.knots.push_back(0.0);
  for (int i = 1; i <= k; ++i) kv.knots.push_back(static_cast<double>(i) / (k + 1));
  for (int i = 0; i < q; ++i) kv.knots.push_back(1.0);
  return kv;
}

SplineBasis::SplineBasis(KnotVector kv) : kv_(std::move(kv)) {
  if (static_cast<int>(kv_.knots.size()) != 2 * kv_.q + kv_.k)
    throw std::invalid_argument("SplineBasis: knot count must be 2q+k");
}

// span j with knots[j] <= x < knots[j+1]; x = 1 falls in the last nonempty
// interval so every basis function is left-continuous at 1
int SplineBasis::find_span(double x) const {
  const int q = kv_.q, k = kv_.k;
  if (x >= 1.0) return q + k - 1;
  const int cell = static_cast<int>(std::floor(x * (k + 1)));
  return q - 1 + std::min(cell, k);
}

// de Boor-Cox triangle: values of the degree `degree` normalized B-splines
// that are nonzero on span `span` (basis indices span-degree .. span, 0-based)
void SplineBasis::eval_nonzero(double x, int span, int degree, double* out) const {
  const std::vector<double>& t = kv_.knots;
  out[0] = 1.0;
  std::vector<double> left(degree + 1), right(degree + 1);
  for (int r = 1; r <= degree; ++r) {
    left[r] = x - t[span + 1 - r];
    right[r] = t[span + r] - x;
    double saved = 0.0;
    for (int s = 0; s < r; ++s) {
      const double temp = out[s] / (right[s + 1] + left[r - s]);
      out[s] = saved + right[s + 1] * temp;
      saved = left[r - s] * temp;
    }
    out[r] = saved;
  }
}

void SplineBasis::eval(double x, std::span<double> out) const {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("SplineBasis::eval: x outside [0,1]");
  if (static_cast<int>(out.size()) != size())
    throw std::invalid_argument("SplineBasis::eval: output size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const int p = kv_.q - 1;
  const int span = find_span(x);
  std::vector<double> n(kv_.q);
  eval_nonzero(x, span, p, n.data());
  for (int s = 0; s <= p; ++s) out[span - p + s] = n[s];
}

std::vector<double> SplineBasis::eval(double x) const {
  std::vector<double> out(size());
  eval(x, out);
  return out;
}

double SplineBasis::value(std::span<const double> theta, double x) const {
  if (static_cast<int>(theta.size()) != size())
    throw std::invalid_argument("SplineBasis::value: coefficient size mismatch");
  const int p = kv_.q - 1;
  const int span = find_span(x);
  std::vector<double> n(kv_.q);
  eval_nonzero(x, span, p, n.data());
  double v = 0.0;
  for (int s = 0; s <= p; ++s) v += theta[span - p + s] * n[s];
  return v;
}

std::vector<double> SplineBasis::derivative_coeffs(std::span<const double> theta,
                                                   int r) const {
  const int q = kv_.q, m = size();
  if (static_cast<int>(theta.size()) != m)
    throw std::invalid_argument("derivative_coeffs: coefficient size mismatch");
  if (r < 0 || r >= q)
    throw std::invalid_argument("derivative_coeffs: need 0 <= r <= q-1");
  std::vector<double> c(theta.begin(), theta.end());
  const std::vector<double>& t = kv_.knots;
  // after step d the coefficients pair with the order-(q-d) splines on knots
  // y_i..y_{i+q-d}, i = d+1..m (1-based); stored at c[0..m-d-1] for i = d+1+idx
  for (int d = 1; d <= r; ++d) {
    const int ord = q - d;  // order after differencing
    std::vector<double> nc(m - d);
    for (int idx = 0; idx < m - d; ++idx) {
      const int i = d + 1 + idx;  // 1-based basis index
      const double den = t[i - 1 + ord] - t[i - 1];
      nc[idx] = ord * (c[idx + 1] - c[idx]) / den;
    }
    c = std::move(nc);
  }
  return c;
}

double SplineBasis::derivative(std::span<const double> theta, int r, double x) const {
  const int q = kv_.q;
  if (r < 0 || r >= q)
    throw std::invalid_argument("SplineBasis::derivative: need 0 <= r <= q-1");
  if (x < 0.0 || x > 1.0)
    throw std::invalid_argument("SplineBasis::derivative: x outside [0,1]");
  if (r == 0) return value(theta, x);
  const std::vector<double> c = derivative_coeffs(theta, r);
  const int p = q - 1 - r;  // degree of the differentiated spline
  const int span = find_span(x);
  std::vector<double> n(p + 1);
  eval_nonzero(x, span, p, n.data());
  // nonzero order-(q-r) splines at x: 1-based indices span-p+1 .. span+1,
  // which map to c[(span - p + s) - r]
  double v = 0.0;
  for (int s = 0; s <= p; ++s) v += c[span - p + s - r] * n[s];
  return v;
}

std::vector<double> SplineBasis::breakpoints() const {
  std::vector<double> b;
  b.push_back(0.0);
  for (int i = 1; i <= kv_.k; ++i) b.push_back(static_cast<double>(i) / (kv_.k + 1));
  b.push_back(1.0);
  return b;
}

Eigen::MatrixXd SplineBasis::gram() const {
  const int m = size(), q = kv_.q;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  const std::vector<double> brk = breakpoints();
  // integrand per panel has degree <= 2(q-1); q-point Gauss is exact
  const GaussRule& rule = gauss_rule(q);
  std::vector<double> vals(m);
  for (std::size_t p = 0; p + 1 < brk.size(); ++p) {
    const double a = brk[p], b = brk[p + 1];
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      eval(c + h * rule.nodes[i], vals);
      const double w = h * rule.weights[i];
      for (int r = 0; r < m; ++r) {
        if (vals[r] == 0.0) continue;
        for (int s = r; s < m; ++s) g(r, s) += w * vals[r] * vals[s];
      }
    }
  }
  for (int r = 0; r < m; ++r)
    for (int s = 0; s < r; ++s) g(r, s) = g(s, r);
  return g;
}

double haar_mother(double t) {
  if (t < 0.0 || t > 1.0) return 0.0;
  return t < 0.5 ? 1.0 : -1.0;
}

double eval_haar(int l, int j1, int k1, double x) {
  if (j1 < 0 || j1 > l) throw std::invalid_argument("eval_haar: j1 out of range");
  if (k1 < 0 || k1 >= (1 << j1)) throw std::invalid_argument("eval_haar: k1 out of range");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("eval_haar: x outside [0,1]");
  const double scale = static_cast<double>(1 << j1);
  // x = 1 belongs to the last cell of its level
  int cell = std::min(static_cast<int>(std::floor(x * scale)), (1 << j1) - 1);
  if (cell != k1) return 0.0;
  const double t = x * scale - k1;
  return std::sqrt(scale) * (t < 0.5 ? 1.0 : -1.0);
}

HaarBasis::HaarBasis(int level) : level_(level) {
  if (level < 0) throw std::invalid_argument("HaarBasis: level must be >= 0");
  if (level > 24) throw std::invalid_argument("HaarBasis: level too large");
}

int HaarBasis::flatten(int j1, int k1) const {
  if (j1 < 0 || j1 > level_) throw std::invalid_argument("HaarBasis::flatten: j1 out of range");
  if (k1 < 0 || k1 >= (1 << j1)) throw std::invalid_argument("HaarBasis::flatten: k1 out of range");
  return (1 << j1) + k1;  // constant occupies index 0
}

std::pair<int, int> HaarBasis::unflatten(int i) const {
  if (i < 1 || i >= fn_count()) throw std::invalid_argument("HaarBasis::unflatten: index out of range");
  int j1 = 0;
  while ((1 << (j1 + 1)) <= i) ++j1;
  return {j1, i - (1 << j1)};
}

double HaarBasis::eval_flat(double x, int i) const {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("HaarBasis::eval_flat: x outside [0,1]");
  if (i == 0) return 1.0;
  const auto [j1, k1] = unflatten(i);
  return eval_haar(level_, j1, k1, x);
}

void HaarBasis::eval_wavelets(double x, std::span<double> out) const {
  if (static_cast<int>(out.size()) != wavelet_count())
    throw std::invalid_argument("HaarBasis::eval_wavelets: output size mismatch");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("HaarBasis::eval_wavelets: x outside [0,1]");
  std::fill(out.begin(), out.end(), 0.0);
  for (int j1 = 0; j1 <= level_; ++j1) {
    const double scale = static_cast<double>(1 << j1);
    const int cell = std::min(static_cast<int>(std::floor(x * scale)), (1 << j1) - 1);
    const double t = x * scale - cell;
    out[(1 << j1) + cell - 1] = std::sqrt(scale) * (t < 0.5 ? 1.0 : -1.0);
  }
}

double HaarBasis::wavelet_value(std::span<const double> theta, double x) const {
  if (static_cast<int>(theta.size()) != wavelet_count())
    throw std::invalid_argument("HaarBasis::wavelet_value: coefficient size mismatch");
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("HaarBasis::wavelet_value: x outside [0,1]");
  double v = 0.0;
  for (int j1 = 0; j1 <= level_; ++j1) {
    const double scale = static_cast<double>(1 << j1);
    const int cell = std::min(static_cast<int>(std::floor(x * scale)), (1 << j1) - 1);
    const double t = x * scale - cell;
    v += theta[(1 << j1) + cell - 1] * std::sqrt(scale) * (t < 0.5 ? 1.0 : -1.0);
  }
  return v;
}

double HaarBasis::wavelet_sup(std::span<const double> theta) const {
  const int cells = fn_count();
  double best = 0.0;
  for (int c = 0; c < cells; ++c) {
    const double x = (c + 0.5) / cells;
    best = std::max(best, std::abs(wavelet_value(theta, x)));
  }
  return best;
}

std::vector<double> HaarBasis::breakpoints() const {
  const int cells = fn_count();
  std::vector<double> b(cells + 1);
  for (int i = 0; i <= cells; ++i) b[i] = static_cast<double>(i) / cells;
  return b;
}

Eigen::MatrixXd HaarBasis::gram() const {
  const int m = fn_count();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  // functions are constant on the finest cells; midpoint value x cell width
  // integrates each product exactly
  const double w = 1.0 / m;
  std::vector<double> vals(m);
  for (int c = 0; c < m; ++c) {
    const double x = (c + 0.5) / m;
    for (int i = 0; i < m; ++i) vals[i] = eval_flat(x, i);
    for (int r = 0; r < m; ++r)
      for (int s = r; s < m; ++s) g(r, s) += w * vals[r] * vals[s];
  }
  for (int r = 0; r < m; ++r)
    for (int s = 0; s < r; ++s) g(r, s) = g(s, r);
  return g;
}

int coef_dim(const ModelBasis& b) {
  return std::visit(
      [](const auto& bb) {
        if constexpr (std::is_same_v<std::decay_t<decltype(bb)>, SplineBasis>)
          return bb.size();
        else
          return bb.wavelet_count();
      },
      b);
}

void eval_coef_fns(const ModelBasis& b, double x, std::span<double> out) {
  std::visit(
      [&](const auto& bb) {
        if constexpr (std::is_same_v<std::decay_t<decltype(bb)>, SplineBasis>)
          bb.eval(x, out);
        else
          bb.eval_wavelets(x, out);
      },
      b);
}

double coef_fn_value(const ModelBasis& b, std::span<const double> theta, double x) {
  return std::visit(
      [&](const auto& bb) {
        if constexpr (std::is_same_v<std::decay_t<decltype(bb)>, SplineBasis>)
          return bb.value(theta, x);
        else
          return bb.wavelet_value(theta, x);
      },
      b);
}

std::vector<double> model_breakpoints(const ModelBasis& b) {
  return std::visit([](const auto& bb) { return bb.breakpoints(); }, b);
}

}  // namespace sieveprior
