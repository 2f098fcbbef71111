#include "sieveprior/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sieveprior/rng.hpp"

namespace sieveprior {

MetricSpace MetricSpace::build(const ConstraintSpec& spec, int target_points,
                               const MetricSpaceOptions& opt) {
  if (target_points < 2)
    throw std::invalid_argument("MetricSpace::build: need at least 2 points");
  ModelGeometry geom(spec, opt.nodes_per_panel);
  const int d = geom.free_dim();
  if (d > 3)
    throw std::invalid_argument(
        "MetricSpace::build: free dimension > 3 is not supported (covering "
        "computation is exponential in dimension)");
  MetricSpace sp(std::move(geom));
  const ModelGeometry& g = sp.geom_;
  const double hw = g.box_half_width();
  const std::uint64_t base = 1 + splitmix64(opt.scramble_seed) % 65536;
  std::vector<std::pair<Eigen::VectorXd, double>> kept;  // (u, psi)
  const std::uint64_t max_attempts = 256ULL * target_points;
  for (std::uint64_t t = 0; t < max_attempts &&
                            kept.size() < static_cast<std::size_t>(target_points);
       ++t) {
    Eigen::VectorXd u(d);
    for (int j = 0; j < d; ++j)
      u[j] = hw * (2.0 * halton(base + t, halton_prime(j)) - 1.0);
    const Eigen::VectorXd theta = g.to_theta(u);
    double psi_v = 0.0;
    if (g.inside(theta, 1e-9, &psi_v)) kept.emplace_back(u, psi_v);
  }
  if (kept.size() < 2)
    throw std::invalid_argument("MetricSpace::build: bounding box rejected nearly all points");
  if (d == 1)
    std::sort(kept.begin(), kept.end(),
              [](const auto& a, const auto& b) { return a.first[0] < b.first[0]; });
  const int n = static_cast<int>(kept.size());
  sp.us_.reserve(n);
  sp.psis_.reserve(n);
  sp.vals_.resize(n, g.nodes().size());
  for (int i = 0; i < n; ++i) {
    sp.us_.push_back(kept[i].first);
    sp.psis_.push_back(kept[i].second);
    sp.vals_.row(i) = g.node_values(g.to_theta(kept[i].first)).transpose();
  }
  return sp;
}

double MetricSpace::dist(int i, int j, DistanceMetric metric) const {
  return geom_.distance(metric, vals_.row(i).transpose(), psis_[i],
                        vals_.row(j).transpose(), psis_[j]);
}

double MetricSpace::dist_to(int i, DistanceMetric metric,
                            const Eigen::VectorXd& fn_at_nodes) const {
  return geom_.distance_to_fn(metric, vals_.row(i).transpose(), psis_[i],
                              fn_at_nodes);
}

bool MetricSpace::metric_is_monotone(DistanceMetric metric, int triples) const {
  if (geom_.free_dim() != 1) return false;
  Rng rng(9001);
  const int n = size();
  for (int t = 0; t < triples; ++t) {
    int a = static_cast<int>(rng.uniform01() * n);
    int b = static_cast<int>(rng.uniform01() * n);
    int c = static_cast<int>(rng.uniform01() * n);
    int lo = std::min({a, b, c}), hi = std::max({a, b, c});
    int mid = a + b + c - lo - hi;
    if (lo == hi) continue;
    const double dlh = dist(lo, hi, metric);
    if (dist(lo, mid, metric) > dlh + 1e-12) return false;
    if (dist(mid, hi, metric) > dlh + 1e-12) return false;
  }
  return true;
}

namespace {

// 1-D sweep on an index-ordered region with a monotone metric: each center is
// the farthest point still within delta of the first uncovered point, which
// yields the minimal cover.
int cover_sweep_1d(const std::function<double(int, int)>& dist,
                   const std::vector<int>& region, double delta) {
  const int n = static_cast<int>(region.size());
  int count = 0;
  int first = 0;
  while (first < n) {
    // farthest candidate c with d(first, c) <= delta
    int lo = first, hi = n - 1;
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      if (dist(region[first], region[mid]) <= delta)
        lo = mid;
      else
        hi = mid - 1;
    }
    const int center = lo;
    ++count;
    // advance past everything covered by the chosen center
    int next = center + 1;
    while (next < n && dist(region[center], region[next]) <= delta) ++next;
    first = next;
  }
  return count;
}

}  // namespace

int covering_number_upper(int n, const std::function<double(int, int)>& dist,
                          std::vector<int> region, double delta) {
  (void)n;
  if (region.empty())
    throw std::invalid_argument("covering_number_upper: empty region");
  if (!(delta > 0.0))
    throw std::invalid_argument("covering_number_upper: delta must be > 0");
  // greedy max-coverage over the uncovered points
  std::vector<int> uncovered = std::move(region);
  int count = 0;
  while (!uncovered.empty()) {
    const int m = static_cast<int>(uncovered.size());
    int best = 0;
    long best_cover = -1;
    for (int c = 0; c < m; ++c) {
      long cov = 0;
      for (int p = 0; p < m; ++p)
        if (dist(uncovered[c], uncovered[p]) <= delta) ++cov;
      if (cov > best_cover) {
        best_cover = cov;
        best = c;
      }
    }
    const int center = uncovered[best];
    std::vector<int> rest;
    rest.reserve(uncovered.size());
    for (int p : uncovered)
      if (dist(center, p) > delta) rest.push_back(p);
    uncovered = std::move(rest);
    ++count;
  }
  return count;
}

int covering_number_upper(const MetricSpace& space, std::vector<int> region,
                          double delta, DistanceMetric metric) {
  if (region.empty())
    throw std::invalid_argument("covering_number_upper: empty region");
  if (!(delta > 0.0))
    throw std::invalid_argument("covering_number_upper: delta must be > 0");
  auto d = [&](int i, int j) { return space.dist(i, j, metric); };
  if (space.geometry().free_dim() == 1 && space.metric_is_monotone(metric))
    return cover_sweep_1d(d, region, delta);
  return covering_number_upper(space.size(), d, std::move(region), delta);
}

int packing_number_lower(int n, const std::function<double(int, int)>& dist,
                         std::vector<int> region, double delta) {
  (void)n;
  if (region.empty())
    throw std::invalid_argument("packing_number_lower: empty region");
  // strict separation (> delta), so each closed delta/2 ball holds at most
  // one chosen point and the count lower-bounds N(region, delta/2, d)
  std::vector<int> chosen;
  for (int p : region) {
    bool ok = true;
    for (int c : chosen)
      if (dist(p, c) <= delta) {
        ok = false;
        break;
      }
    if (ok) chosen.push_back(p);
  }
  return static_cast<int>(chosen.size());
}

int packing_number_lower(const MetricSpace& space, std::vector<int> region,
                         double delta, DistanceMetric metric) {
  auto d = [&](int i, int j) { return space.dist(i, j, metric); };
  return packing_number_lower(space.size(), d, std::move(region), delta);
}

CoveringBoundReport verify_covering_bound(
    const ConstraintSpec& spec, double A, int m, int trials, std::uint64_t seed,
    const std::function<double(double)>& truth_log_f_or_f,
    const CoveringBoundOptions& opt) {
  CoveringBoundReport rep;
  rep.A = A;
  rep.m = m;
  rep.rho = opt.rho;
  MetricSpaceOptions mo;
  mo.nodes_per_panel = opt.nodes_per_panel;
  mo.scramble_seed = seed;
  MetricSpace space = MetricSpace::build(spec, opt.cloud_points, mo);
  const int n = space.size();
  const Eigen::VectorXd truth_nodes = space.geometry().tabulate(truth_log_f_or_f);

  std::vector<double> d_truth(n);
  for (int i = 0; i < n; ++i)
    d_truth[i] = space.dist_to(i, opt.ball_metric, truth_nodes);
  // near-minimizer of the distance to the truth (the theta* of the factor-3
  // inclusion argument)
  const int star =
      static_cast<int>(std::min_element(d_truth.begin(), d_truth.end()) -
                       d_truth.begin());

  // diameter scale for sampling r
  Rng rng(derive_seed(seed, 0xA55));
  double diam = 0.0;
  for (int t = 0; t < 256; ++t) {
    const int a = static_cast<int>(rng.uniform01() * n);
    const int b = static_cast<int>(rng.uniform01() * n);
    diam = std::max(diam, space.dist(a, b, opt.ball_metric));
  }
  if (!(diam > 0.0)) throw std::invalid_argument("verify_covering_bound: degenerate cloud");

  for (int t = 0; t < trials; ++t) {
    const int center = static_cast<int>(rng.uniform01() * n);
    // r log-uniform within the resolvable range, delta <= rho r
    const double r = diam * std::exp(std::log(0.05) * rng.uniform01());
    const double delta = opt.rho * r * (0.25 + 0.75 * rng.uniform01());

    std::vector<int> local_ball;
    std::vector<int> global_ball;
    for (int i = 0; i < n; ++i) {
      if (space.dist(center, i, opt.ball_metric) <= r) local_ball.push_back(i);
      if (d_truth[i] <= r) global_ball.push_back(i);
    }
    if (!local_ball.empty()) {
      CoveringBoundRow row;
      row.r = r;
      row.delta = delta;
      row.covering = covering_number_upper(space, local_ball, delta, opt.cover_metric);
      row.bound = std::pow(A * r / delta, m);
      row.ratio = row.covering / row.bound;
      row.global_ball = false;
      rep.worst_ratio = std::max(rep.worst_ratio, row.ratio);
      rep.all_within_bound = rep.all_within_bound && row.ratio <= 1.0;
      rep.rows.push_back(row);
    }
    if (!global_ball.empty()) {
      CoveringBoundRow row;
      row.r = r;
      row.delta = delta;
      row.covering = covering_number_upper(space, global_ball, delta, opt.cover_metric);
      row.bound = std::pow(3.0 * A * r / delta, m);
      row.ratio = row.covering / row.bound;
      row.global_ball = true;
      rep.worst_ratio = std::max(rep.worst_ratio, row.ratio);
      rep.all_within_bound = rep.all_within_bound && row.ratio <= 1.0;
      rep.rows.push_back(row);
      // factor-3 inclusion, checked pointwise on the cloud
      for (int i : global_ball)
        if (space.dist(star, i, opt.ball_metric) > 3.0 * r + 1e-12) {
          rep.inclusion_ok = false;
          break;
        }
    }
  }
  return rep;
}

BallMassRatio ball_mass_ratio(const ConstraintSpec& spec,
                              const Eigen::VectorXd& center_a,
                              const Eigen::VectorXd& center_b, double eps,
                              DistanceMetric metric, long mc_samples,
                              std::uint64_t seed) {
  if (!(eps > 0.0)) throw std::invalid_argument("ball_mass_ratio: eps must be > 0");
  if (mc_samples < 100)
    throw std::invalid_argument("ball_mass_ratio: need at least 100 samples");
  ModelGeometry geom(spec, 8);
  const int d = geom.free_dim();
  if (center_a.size() != geom.theta_dim() || center_b.size() != geom.theta_dim())
    throw std::invalid_argument("ball_mass_ratio: center dimension mismatch");
  const double psi_a =
      spec.family == Family::spline_regression ? 0.0 : geom.psi_of(center_a);
  const double psi_b =
      spec.family == Family::spline_regression ? 0.0 : geom.psi_of(center_b);
  const Eigen::VectorXd va = geom.node_values(center_a);
  const Eigen::VectorXd vb = geom.node_values(center_b);

  Rng rng(seed);
  const double hw = geom.box_half_width();
  long in_a = 0, in_b = 0, in_both = 0;
  for (long t = 0; t < mc_samples; ++t) {
    Eigen::VectorXd u(d);
    for (int j = 0; j < d; ++j) u[j] = rng.uniform(-hw, hw);
    const Eigen::VectorXd theta = geom.to_theta(u);
    double psi_v = 0.0;
    if (!geom.inside(theta, 1e-9, &psi_v)) continue;
    const Eigen::VectorXd v = geom.node_values(theta);
    const bool a = geom.distance(metric, v, psi_v, va, psi_a) <= eps;
    const bool b = geom.distance(metric, v, psi_v, vb, psi_b) <= eps;
    if (a) ++in_a;
    if (b) ++in_b;
    if (a && b) ++in_both;
  }
  BallMassRatio out;
  out.hits_a = in_a;
  out.hits_b = in_b;
  out.draws = mc_samples;
  if (in_a == 0)
    throw std::runtime_error(
        "ball_mass_ratio: denominator ball received no samples (eps too small "
        "for this sample size)");
  const double n = static_cast<double>(mc_samples);
  const double pa = in_a / n, pb = in_b / n, pab = in_both / n;
  out.ratio = pb / pa;
  // delta method for a ratio of correlated binomial means
  const double va_ = pa * (1 - pa) / n, vb_ = pb * (1 - pb) / n;
  const double cab = (pab - pa * pb) / n;
  double rel = vb_ / (pb * pb) + va_ / (pa * pa) - 2.0 * cab / (pa * pb);
  out.se = (pb > 0) ? out.ratio * std::sqrt(std::max(0.0, rel)) : 0.0;
  return out;
}

}  // namespace sieveprior
