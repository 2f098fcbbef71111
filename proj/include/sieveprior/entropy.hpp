#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "sieveprior/geometry.hpp"

namespace sieveprior {

// Finite point cloud over Theta_j (free dimension <= 3) with cached node
// tables, so covering/packing runs on dense arrays. Points come from a Halton
// sequence over the bounding box filtered through membership; for free
// dimension 1 the cloud is sorted by the free coordinate.
struct MetricSpaceOptions {
  int nodes_per_panel = 8;
  std::uint64_t scramble_seed = 0;  // offsets the Halton start index
};

class MetricSpace {
 public:
  static MetricSpace build(const ConstraintSpec& spec, int target_points,
                           const MetricSpaceOptions& opt = {});

  int size() const { return static_cast<int>(psis_.size()); }
  const ModelGeometry& geometry() const { return geom_; }
  const Eigen::VectorXd& free_coord(int i) const { return us_[i]; }
  Eigen::VectorXd theta(int i) const { return geom_.to_theta(us_[i]); }

  double dist(int i, int j, DistanceMetric metric) const;
  // distance from cloud point i to a function tabulated on the geometry nodes
  double dist_to(int i, DistanceMetric metric,
                 const Eigen::VectorXd& fn_at_nodes) const;

  // spot-check that the metric is monotone along the 1-D order (free dim 1)
  bool metric_is_monotone(DistanceMetric metric, int triples = 512) const;

 private:
  explicit MetricSpace(ModelGeometry geom) : geom_(std::move(geom)) {}
  ModelGeometry geom_;
  std::vector<Eigen::VectorXd> us_;
  Eigen::MatrixXd vals_;   // size() x nodes, theta'B rows
  std::vector<double> psis_;
};

// Greedy set-cover with balls centered at region points (candidates are the
// still-uncovered points, ties broken by index); the count is a valid upper
// bound for N(region, delta, d). On a 1-D monotone metric this greedy returns
// the exact minimal cover (it reduces to the interval sweep).
int covering_number_upper(int n, const std::function<double(int, int)>& dist,
                          std::vector<int> region, double delta);
int covering_number_upper(const MetricSpace& space, std::vector<int> region,
                          double delta, DistanceMetric metric);

// Greedy maximal delta-separated subset; lower-bounds N(region, delta/2, d).
int packing_number_lower(int n, const std::function<double(int, int)>& dist,
                         std::vector<int> region, double delta);
int packing_number_lower(const MetricSpace& space, std::vector<int> region,
                         double delta, DistanceMetric metric);

struct CoveringBoundRow {
  double r = 0.0;
  double delta = 0.0;
  long covering = 0;
  double bound = 0.0;  // (A r / delta)^m  or  (3 A r / delta)^m
  double ratio = 0.0;  // covering / bound
  bool global_ball = false;
};

struct CoveringBoundReport {
  double A = 0.0;
  int m = 1;
  double rho = 0.0;
  std::vector<CoveringBoundRow> rows;
  double worst_ratio = 0.0;
  bool all_within_bound = true;
  bool inclusion_ok = true;  // factor-3 global-ball inclusion
};

struct CoveringBoundOptions {
  int cloud_points = 100000;
  double rho = 0.056;
  int nodes_per_panel = 8;
  DistanceMetric ball_metric = DistanceMetric::hellinger;
  DistanceMetric cover_metric = DistanceMetric::d_inf;
};

// Covering counts of local metric balls against (A r/δ)^m, of the global
// ball around the truth against (3 A r/δ)^m, and the pointwise factor-3
// inclusion of the global ball in the ball around the best approximant.
CoveringBoundReport verify_covering_bound(
    const ConstraintSpec& spec, double A, int m, int trials, std::uint64_t seed,
    const std::function<double(double)>& truth_log_f_or_f,
    const CoveringBoundOptions& opt = {});

struct BallMassRatio {
  double ratio = 0.0;
  double se = 0.0;
  long hits_a = 0;
  long hits_b = 0;
  long draws = 0;
};

// pi_j(B(center_b, eps)) / pi_j(B(center_a, eps)) by uniform bounding-box
// Monte Carlo with membership indicators.
BallMassRatio ball_mass_ratio(const ConstraintSpec& spec,
                              const Eigen::VectorXd& center_a,
                              const Eigen::VectorXd& center_b, double eps,
                              DistanceMetric metric, long mc_samples,
                              std::uint64_t seed);

}  // namespace sieveprior
