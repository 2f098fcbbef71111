#pragma once

#include <string>
#include <vector>

#include "sieveprior/expfam.hpp"

namespace sieveprior {

// A point of the countable index set J.
struct ModelIndex {
  Family family = Family::spline_density;
  int k = 0, q = 1;  // spline families
  int level = 0;     // haar
  int L = 1;

  ConstraintSpec constraints(double M = 0.0) const;
  std::string label() const;
};

struct FamilyConstants {
  double A = 0.0;
  int m = 1;
  double C = 0.0;  // C_j = m_j + L
};

// A_j, m_j, C_j per the family formulas.
FamilyConstants constants_for(const ModelIndex& idx);

struct RegressionParams {
  double sigma = 1.0;
  double M = 1.0;
  double c0 = 2.0;  // = 2*sigma unless overridden
};

// c_{1,M,sigma} = min((1-e^{-M^2/(2σ^2)})/(2M^2), 1/(2σ^2))
double c1_constant(double M, double sigma);
// c_{2,c0,M} = 2(c0 + 2M)
double c2_constant(double c0, double M);

// Density case: the root of 0.13 γ/sqrt(1-4γ) = rho on (0, 0.25).
double gamma_for_density(double rho);
// Regression case: the root of rho = (0.13/(c2 sqrt(c1))) γ/sqrt(1-4γ).
double gamma_for_regression(const RegressionParams& rp, double rho = 0.0056);

enum class EtaMode { literal_1072_5, generic };

struct SieveOptions {
  double rho = 0.056;             // density coupling constant (see README)
  double rho_regression = 0.0056;
  EtaMode eta_mode = EtaMode::literal_1072_5;
  // truncation of J to [min, max] boxes per axis
  int k_min = 0, k_max = 40;
  int q_min = 1, q_max = 4;
  int L_min = 1, L_max = 5;
  int l_min = 0, l_max = 7;  // haar levels
};

double eta_for(const ModelIndex& idx, double gamma, const SieveOptions& opt,
               const RegressionParams& rp = {});

double kappa_density(double gamma);
double kappa_regression(double sigma);

struct ModelConstants {
  double A = 0.0;
  int m = 1;
  double C = 0.0;
  double eta = 0.0;
  double log_a = 0.0;
};

struct SieveModel {
  ModelIndex index;
  ModelConstants constants;
};

struct SieveSpec {
  Family family = Family::spline_density;
  double gamma = 0.0;
  double rho = 0.0;    // the coupling value actually used
  double kappa = 0.0;  // weight exponent multiplier
  RegressionParams reg;
  SieveOptions options;
  std::vector<SieveModel> models;
  double log_alpha = 0.0;        // -log Σ exp(-κ η_j) over the truncation
  double sum_exp_neg_c = 0.0;    // Σ e^{-C_j} over the truncation
  double weight_tail_bound = 0.0;  // bound on Σ_{excluded} e^{-κ η_j}
};

std::vector<ModelIndex> enumerate_models(Family family, const SieveOptions& opt);

// Full prior construction: enumeration, constants, η, normalized log-weights.
SieveSpec build_sieve(Family family, const SieveOptions& opt = {},
                      const RegressionParams& rp = {});

// Analytic Σ_j e^{-C_j} over the full (untruncated) spline lattice:
// e^{-2}/(1-e^{-1})^3.
double spline_lattice_weight_sum();

}  // namespace sieveprior
