#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "sieveprior/geometry.hpp"
#include "sieveprior/sieve.hpp"

namespace sieveprior {

struct Dataset {
  bool regression = false;
  std::vector<double> x;
  std::vector<double> y;  // regression responses
  double sigma = 1.0;     // known noise sd
};

Dataset density_data(std::vector<double> x);
Dataset regression_data(std::vector<double> x, std::vector<double> y,
                        double sigma);

// The true f_o, in the form the posterior kernels consume.
struct TruthFunctions {
  bool is_density = true;
  std::function<double(double)> log_f;  // density case, normalized
  std::function<double(double)> f;      // regression mean (or the density)
  std::vector<double> breaks{0.0, 1.0};
};

TruthFunctions uniform_truth();

double log_likelihood(const ExpFamDensity& d, const Dataset& data);
double log_likelihood_regression(const std::function<double(double)>& f,
                                 const Dataset& data);
double truth_log_likelihood(const TruthFunctions& truth, const Dataset& data);

enum class ProposalKind { uniform, tempered, automatic };

struct McOptions {
  int workers = 1;
  long chunk_size = 8192;
  ProposalKind proposal = ProposalKind::automatic;
  long auto_threshold = 500;   // automatic: tempered when n > threshold
  double temper_mix = 0.5;     // Gaussian share of the defensive mixture
  double cov_inflation = 1.5;  // proposal covariance multiplier
  int nodes_per_panel = 32;
  double membership_tol = 1e-9;
  bool cross_check = false;  // run uniform and tempered, compare
  double cross_check_z = 3.0;
};

struct EvidenceEstimate {
  double log_evidence = -std::numeric_limits<double>::infinity();
  double se_log = 0.0;  // delta-method se of log evidence
  double ess = 0.0;
  long draws = 0;
  long accepted = 0;  // draws that landed inside Theta_j
  bool cross_check_ran = false;
  bool cross_check_ok = true;
  double cross_check_z = 0.0;  // |Δ| in joint standard errors
};

// ∫_{Theta_j} Π_i p_{f_theta}(Z_i) dπ_j(θ), π_j = Lebesgue on Theta_j.
EvidenceEstimate model_evidence(const ConstraintSpec& spec, const Dataset& data,
                                long mc, std::uint64_t seed,
                                const McOptions& opt = {});

struct ModelRow {
  ModelIndex index;
  double log_a = 0.0;
  // log ∫ Π (p_theta/p_o) dπ_j and its se; add truth_log_lik for the
  // absolute-evidence version
  double log_evidence_lr = -std::numeric_limits<double>::infinity();
  double se_log = 0.0;
  double ess = 0.0;
  long draws = 0;
  long accepted = 0;
  double weight = 0.0;  // posterior model weight
  bool cross_check_ok = true;
};

struct RadiusTail {
  double radius = 0.0;
  double log_u = -std::numeric_limits<double>::infinity();
  double tail_mass = 0.0;      // exp(log_u - log_v), may underflow to 0
  double log_tail_mass = -std::numeric_limits<double>::infinity();
  double se = 0.0;             // delta-method se of the ratio
  double se_log = 0.0;         // se of log tail
};

struct PosteriorEstimate {
  DistanceMetric metric = DistanceMetric::hellinger;
  double log_v = -std::numeric_limits<double>::infinity();
  double se_log_v = 0.0;
  double truth_log_lik = 0.0;
  std::vector<RadiusTail> radii;
  std::vector<ModelRow> models;
  bool cross_check_ran = false;
  bool cross_check_ok = true;

  const RadiusTail& tail() const { return radii.front(); }
};

// U_n / V_n across a radius grid (shared draws, per-draw distance
// classification d(f_theta, f_o) vs each radius).
PosteriorEstimate posterior_tail_mass(const SieveSpec& spec, const Dataset& data,
                                      const TruthFunctions& truth,
                                      std::vector<double> radii,
                                      DistanceMetric metric, long mc,
                                      std::uint64_t seed,
                                      const McOptions& opt = {});

PosteriorEstimate posterior_tail_mass(const SieveSpec& spec, const Dataset& data,
                                      const TruthFunctions& truth, double s_n,
                                      DistanceMetric metric, long mc,
                                      std::uint64_t seed,
                                      const McOptions& opt = {});

// weight_j ∝ a_j × evidence_j, normalized over the sieve
std::vector<ModelRow> model_posterior(const SieveSpec& spec, const Dataset& data,
                                      long mc, std::uint64_t seed,
                                      const McOptions& opt = {});

}  // namespace sieveprior
