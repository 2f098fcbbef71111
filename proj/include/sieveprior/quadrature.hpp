#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace sieveprior {

// Gauss-Legendre rule on [-1,1]; rules are computed once and cached.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussRule& gauss_rule(int n);

using RealFn = std::function<double(double)>;

// Composite Gauss over the panels defined by consecutive breakpoints.
double integrate_panels(const RealFn& f, std::span<const double> breaks,
                        int nodes_per_panel);

// Doubles the per-panel node count until two successive estimates agree to
// rel_tol (relative to max(1,|I|)).
double integrate_adaptive(const RealFn& f, std::span<const double> breaks,
                          double rel_tol, int start_nodes = 8,
                          int max_nodes = 2048);

// log ∫ exp(g(x)) dx with max-subtraction, same panel-doubling scheme.
double log_integrate_exp(const RealFn& g, std::span<const double> breaks,
                         double rel_tol = 1e-12, int start_nodes = 8,
                         int max_nodes = 2048);

// Merge two sorted breakpoint lists, dropping near-duplicates.
std::vector<double> merge_breakpoints(std::span<const double> a,
                                      std::span<const double> b,
                                      double tol = 1e-14);

// max |f| over a dyadic grid of pts points per panel (panel endpoints included).
double sup_on_grid(const RealFn& f, std::span<const double> breaks, int pts);

// Streaming log-sum-exp accumulator; merges are exact given a fixed order.
class LogSum {
 public:
  void add(double logx) {
    if (logx == -std::numeric_limits<double>::infinity()) return;
    if (logx <= max_) {
      sum_ += std::exp(logx - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - logx) + 1.0;
      max_ = logx;
    }
    count_ += 1;
  }
  void merge(const LogSum& o) {
    if (o.count_ == 0) return;
    if (o.max_ <= max_) {
      sum_ += o.sum_ * std::exp(o.max_ - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - o.max_) + o.sum_;
      max_ = o.max_;
    }
    count_ += o.count_;
  }
  // log of the accumulated sum; -inf when empty
  double log() const {
    if (count_ == 0 || sum_ <= 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }
  long count() const { return count_; }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
  long count_ = 0;
};

// log(e^a - e^b) for a >= b; -inf if the difference underflows.
inline double log_diff_exp(double a, double b) {
  if (b == -std::numeric_limits<double>::infinity()) return a;
  if (b >= a) return -std::numeric_limits<double>::infinity();
  return a + std::log1p(-std::exp(b - a));
}

}  // namespace sieveprior
