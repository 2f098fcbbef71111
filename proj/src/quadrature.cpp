#include "sieveprior/quadrature.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

namespace sieveprior {

namespace {

// Nodes are roots of the Legendre polynomial P_n, found by Newton iteration
// from the Chebyshev-based initial guess; weights w = 2/((1-x^2) P_n'(x)^2).
GaussRule compute_gauss_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_rule: n must be >= 1");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussRule& gauss_rule(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_rule(n)).first;
  return it->second;
}

double integrate_panels(const RealFn& f, std::span<const double> breaks,
                        int nodes_per_panel) {
  if (breaks.size() < 2) throw std::invalid_argument("integrate_panels: need >= 2 breakpoints");
  const GaussRule& rule = gauss_rule(nodes_per_panel);
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p], b = breaks[p + 1];
    if (!(b > a)) continue;
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      s += rule.weights[i] * f(c + h * rule.nodes[i]);
    total += h * s;
  }
  return total;
}

double integrate_adaptive(const RealFn& f, std::span<const double> breaks,
                          double rel_tol, int start_nodes, int max_nodes) {
  double prev = integrate_panels(f, breaks, start_nodes);
  for (int n = 2 * start_nodes; n <= max_nodes; n *= 2) {
    const double cur = integrate_panels(f, breaks, n);
    if (std::abs(cur - prev) <= rel_tol * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  return prev;
}

namespace {

double log_int_exp_fixed(const RealFn& g, std::span<const double> breaks, int n) {
  const GaussRule& rule = gauss_rule(n);
  std::vector<double> vals;
  std::vector<double> wts;
  vals.reserve((breaks.size() - 1) * rule.nodes.size());
  wts.reserve(vals.capacity());
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p], b = breaks[p + 1];
    if (!(b > a)) continue;
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double v = g(c + h * rule.nodes[i]);
      vals.push_back(v);
      wts.push_back(h * rule.weights[i]);
      vmax = std::max(vmax, v);
    }
  }
  double s = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) s += wts[i] * std::exp(vals[i] - vmax);
  return vmax + std::log(s);
}

}  // namespace

double log_integrate_exp(const RealFn& g, std::span<const double> breaks,
                         double rel_tol, int start_nodes, int max_nodes) {
  if (breaks.size() < 2) throw std::invalid_argument("log_integrate_exp: need >= 2 breakpoints");
  double prev = log_int_exp_fixed(g, breaks, start_nodes);
  for (int n = 2 * start_nodes; n <= max_nodes; n *= 2) {
    const double cur = log_int_exp_fixed(g, breaks, n);
    if (std::abs(cur - prev) <= rel_tol * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  return prev;
}

std::vector<double> merge_breakpoints(std::span<const double> a,
                                      std::span<const double> b, double tol) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  std::vector<double> dedup;
  for (double x : out)
    if (dedup.empty() || x - dedup.back() > tol) dedup.push_back(x);
  return dedup;
}

double sup_on_grid(const RealFn& f, std::span<const double> breaks, int pts) {
  if (pts < 2) pts = 2;
  double best = 0.0;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p], b = breaks[p + 1];
    if (!(b > a)) continue;
    for (int i = 0; i < pts; ++i) {
      const double x = a + (b - a) * i / (pts - 1);
      best = std::max(best, std::abs(f(x)));
    }
  }
  return best;
}

}  // namespace sieveprior
