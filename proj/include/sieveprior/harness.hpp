#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sieveprior/metrics.hpp"
#include "sieveprior/posterior.hpp"

namespace sieveprior {

struct TruthSpec {
  enum class Kind { uniform, logspline, smooth, besov, regression };
  Kind kind = Kind::uniform;
  // logspline
  std::vector<double> theta;
  int q = 1, k = 0;
  // smooth / regression: named function (see named_function)
  std::string name;
  double declared_s = 1.0;
  // besov
  double besov_alpha = 0.5;
  double H0 = 1.0;
  std::uint64_t coef_seed = 1;
  int max_level = 12;
  // regression
  double M = 1.0;
  double sigma = 1.0;

  static TruthSpec uniform();
  static TruthSpec logspline(std::vector<double> theta, int q, int k);
  static TruthSpec smooth(std::string name, double s);
  static TruthSpec besov(double alpha, double H0, std::uint64_t seed);
  static TruthSpec regression(std::string name, double M, double sigma);
};

// f(x) by name: "sin2pi", "sin2pi-half", "abs-half", "cos-bump"
std::function<double(double)> named_function(const std::string& name);

struct Truth {
  TruthFunctions fns;  // what the posterior kernels consume
  TruthSpec spec;
  double besov_sum = 0.0;  // weighted coefficient sum, besov kind only
  double M0 = 0.0;         // measured max derivative sup norm (metadata)
  std::shared_ptr<DensitySampler> sampler;  // density kinds only

  bool is_density() const { return fns.is_density; }
};

Truth make_truth(const TruthSpec& spec);

Dataset simulate(const Truth& truth, long n, std::uint64_t seed);

struct ApproximationTarget {
  ModelIndex index;
  Eigen::VectorXd beta;
  double sup_error = 0.0;  // grid sup of target - fitted expansion
  double l2_error = 0.0;   // ||target - fitted expansion||_2
  double kl_d = 0.0;       // D(f_o || f_beta)   (density kinds)
  double v = 0.0;          // V(f_o || f_beta)
  MembershipReport membership;
};

struct FitOptions {
  int grid = 4096;
  int L = 0;   // 0: pick the smallest integer L that makes membership pass
  double M = 0.0;  // regression bound (defaults to truth's M)
};

// Least-squares spline fit of log f_o (density) or f_o (regression) on a
// uniform grid; density fits are shifted to the zero-sum hyperplane.
ApproximationTarget best_spline_fit(const Truth& truth, int q, int k,
                                    const FitOptions& opt = {});

// L2 projection of log f_o onto the level-l Haar span (density truths); the
// constant component is absorbed by the normalizer.
ApproximationTarget best_haar_fit(const Truth& truth, int level,
                                  const FitOptions& opt = {});

struct ExperimentConfig {
  TruthSpec truth;
  Family family = Family::spline_density;
  SieveOptions sieve;
  RegressionParams reg;
  std::vector<long> n_grid{100, 400, 1600};
  double radius_coef = 2.0;
  double radius_exponent = -1.0 / 3.0;
  double radius_log_power = 0.0;          // (log n)^p factor (Haar rule)
  std::vector<double> radius_factors{1.0};  // grid of multiples of the rule
  int replicates = 8;
  std::uint64_t seed = 1;
  long mc_draws = 20000;
  McOptions mc;
  std::optional<DistanceMetric> metric;  // default: hellinger / l2 by family
};

struct ExperimentRow {
  long n = 0;
  int replicate = 0;
  double radius = 0.0;
  double tail_mass = 0.0;
  double log_tail_mass = 0.0;
  double se_log = 0.0;
};

struct MedianRow {
  long n = 0;
  double radius = 0.0;
  double median_tail = 0.0;
  double median_log_tail = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  DistanceMetric metric = DistanceMetric::hellinger;
  std::vector<ExperimentRow> rows;
  std::vector<MedianRow> medians;
  // per (n, model) mean posterior weight across replicates
  std::vector<std::tuple<long, std::string, double>> model_weights;
  bool cross_check_ok = true;
};

// restrict enumeration to the config's [min,max] boxes
SieveSpec build_sieve_for(const ExperimentConfig& cfg);

ExperimentResult contraction_experiment(const ExperimentConfig& cfg);

enum class SlopeStatistic { half_mass_radius, median_distance };

struct SlopeFit {
  double slope = 0.0;
  double ci_half_width = 0.0;  // 1.96 * se(slope)
  bool degenerate = false;     // constant statistic
  std::vector<std::pair<long, double>> points;  // (n, statistic)
};

SlopeFit rate_slope(const ExperimentResult& result, SlopeStatistic stat);
// least squares of log(y) on log(n) for synthetic inputs
SlopeFit fit_log_slope(const std::vector<std::pair<long, double>>& points);

struct TailBoundConfig {
  ConstraintSpec model;          // free dimension <= 2
  TruthSpec truth;
  double gamma = -1.0;           // negative: derive from rho / regression params;
                                 // an explicit value must lie in (0, 0.25)
  double rho = 0.056;
  RegressionParams reg;          // lemma 9 (c0 = 2 sigma convention)
  std::vector<double> xi;        // empty: floor * default multipliers
  long n = 200;
  int replicates = 2000;
  std::uint64_t seed = 1;
  int theta_grid = 2048;
  int nodes_per_panel = 16;
};

struct TailBoundRow {
  double xi = 0.0;
  double envelope = 0.0;
  long events = 0;
  double frequency = 0.0;
  bool informative = true;   // envelope <= 1
  bool meets_floor = true;   // xi above the lemma's floor
};

struct TailBoundResult {
  double gamma = 0.0;
  double xi_floor = 0.0;
  double A = 0.0;
  int m = 1;
  std::vector<TailBoundRow> rows;
};

// smallest xi the tail bound covers for one model
double xi_floor_density(double A, int m, double gamma);
double xi_floor_regression(double A, int m, double gamma, double c1);

// Monte Carlo frequency of the log-likelihood-ratio tail event (density) or
// the residual-difference tail event (regression) against the analytic
// 15.1 exp envelope; the sup over theta is taken over a grid (a lower bound
// on the event, the conservative direction for checking an upper bound).
TailBoundResult tail_bound_mc(const TailBoundConfig& cfg);

struct EvidenceFloorConfig {
  ConstraintSpec model;  // 1-D model
  TruthSpec truth;
  long n = 100;
  double t_n = 0.25;
  int replicates = 500;
  std::uint64_t seed = 1;
  long prior_mc = 200000;  // draws for the prior mass of B~_D(t_n)
  int quad_points = 4096;  // u-grid for the V_n quadrature
};

struct EvidenceFloorResult {
  double t_n = 0.0;
  double prior_mass = 0.0;  // unnormalized pi(B~_D(t_n))
  double threshold_log = 0.0;  // log(pi(B~_D) e^{-2 n t_n} / 2)
  long failures = 0;
  int replicates = 0;
  double failure_freq = 0.0;
  double bound = 0.0;  // 2/(n t_n)
};

// V_n >= pi(B~_D(t_n)) e^{-2 n t_n}/2 failure frequency on a single model,
// with V_n computed by quadrature over the 1-D parameter.
EvidenceFloorResult evidence_floor_check(const EvidenceFloorConfig& cfg);

struct UnEnvelopeConfig {
  SieveOptions sieve;  // density sieve (1-D models only)
  TruthSpec truth;
  long n = 5000;
  double s_n = 0.55;
  int replicates = 200;
  std::uint64_t seed = 1;
  int quad_points = 2048;
};

struct UnEnvelopeResult {
  double gamma = 0.0;
  double threshold_log = 0.0;  // log(alpha e^{-gamma n s^2/2})
  double envelope = 0.0;       // 15.1 exp(-(1-4gamma) gamma n s^2 / 16)
  long events = 0;
  int replicates = 0;
  double frequency = 0.0;
};

// frequency of U_n > alpha e^{-gamma n s_n^2/2} over replicates, with U_n
// computed by quadrature over each model's 1-D parameter.
UnEnvelopeResult un_envelope_check(const UnEnvelopeConfig& cfg);

}  // namespace sieveprior
