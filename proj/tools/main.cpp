// Batch front end: constants tables, entropy and tail-bound checks,
// approximation-rate fits, contraction simulations, ad-hoc divergence queries.

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "sieveprior/entropy.hpp"
#include "sieveprior/io.hpp"

using namespace sieveprior;
using nlohmann::json;

namespace {

std::filesystem::path out_dir_default() {
  if (const char* env = std::getenv("SIEVEPRIOR_OUT")) return env;
  return ".";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "log2") {
      out.push_back(std::log(2.0));
    } else if (!tok.empty()) {
      out.push_back(std::stod(tok));
    }
  }
  return out;
}

int run_constants(const std::string& family, SieveOptions opt,
                  RegressionParams reg, const std::filesystem::path& out) {
  const Family fam = family_from_name(family);
  const SieveSpec spec = build_sieve(fam, opt, reg);
  CsvTable csv({"family", "k", "q", "l", "L", "A", "m", "C", "eta", "log_a"});
  for (const SieveModel& m : spec.models)
    csv.add_row({family_name(fam), std::to_string(m.index.k),
                 std::to_string(m.index.q), std::to_string(m.index.level),
                 std::to_string(m.index.L), format_g17(m.constants.A),
                 std::to_string(m.constants.m), format_g17(m.constants.C),
                 format_g17(m.constants.eta), format_g17(m.constants.log_a)});
  write_file_atomic(out, csv.str());
  json summary;
  summary["family"] = family;
  summary["gamma"] = spec.gamma;
  summary["rho"] = spec.rho;
  summary["kappa"] = spec.kappa;
  summary["models"] = spec.models.size();
  summary["sum_exp_neg_C"] = spec.sum_exp_neg_c;
  summary["weight_tail_bound"] = spec.weight_tail_bound;
  std::cout << summary.dump(2) << "\n";
  std::cerr << "wrote " << out << " (" << spec.models.size() << " models)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sieve-prior posterior contraction toolkit"};
  app.require_subcommand(1);

  std::filesystem::path out_dir = out_dir_default();
  app.add_option("--out-dir", out_dir, "output directory (env SIEVEPRIOR_OUT)");

  // constants
  auto* c_cmd = app.add_subcommand("constants", "dump the (A, m, C, eta, log a) table");
  std::string c_family = "spline-density";
  SieveOptions c_opt;
  RegressionParams c_reg;
  std::string c_out = "constants.csv";
  std::string c_eta_mode = "literal";
  c_cmd->add_option("--family", c_family, "spline-density | haar-density | spline-regression");
  c_cmd->add_option("--kmin", c_opt.k_min);
  c_cmd->add_option("--kmax", c_opt.k_max);
  c_cmd->add_option("--qmin", c_opt.q_min);
  c_cmd->add_option("--qmax", c_opt.q_max);
  c_cmd->add_option("--Lmin", c_opt.L_min);
  c_cmd->add_option("--Lmax", c_opt.L_max);
  c_cmd->add_option("--lmin", c_opt.l_min);
  c_cmd->add_option("--lmax", c_opt.l_max);
  c_cmd->add_option("--rho", c_opt.rho, "density coupling constant (0.056 or 0.0056)");
  c_cmd->add_option("--eta-mode", c_eta_mode, "literal | generic (regression eta constant)");
  c_cmd->add_option("--sigma", c_reg.sigma);
  c_cmd->add_option("--M", c_reg.M);
  c_cmd->add_option("--out", c_out, "output CSV name");

  // entropy-check
  auto* e_cmd = app.add_subcommand("entropy-check", "covering-number checks of the local-ball entropy bound");
  int e_k = 1, e_q = 1, e_level = 0, e_L = 1;
  std::string e_family = "spline-density";
  int e_points = 100000, e_trials = 20;
  std::uint64_t e_seed = 1;
  double e_rho = 0.056;
  std::string e_out = "entropy.csv";
  e_cmd->add_option("--family", e_family);
  e_cmd->add_option("--k", e_k);
  e_cmd->add_option("--q", e_q);
  e_cmd->add_option("--level", e_level);
  e_cmd->add_option("--L", e_L);
  e_cmd->add_option("--points", e_points, "cloud size");
  e_cmd->add_option("--trials", e_trials, "sampled (r, delta) pairs");
  e_cmd->add_option("--seed", e_seed);
  e_cmd->add_option("--rho", e_rho, "delta <= rho * r");
  e_cmd->add_option("--out", e_out);

  // bounds-check
  auto* b_cmd = app.add_subcommand("bounds-check", "Monte Carlo check of the likelihood-ratio / residual tail bounds");
  TailBoundConfig b_cfg;
  std::string b_family = "spline-density";
  int b_k = 1, b_q = 1, b_L = 1;
  std::string b_out = "bounds.csv";
  std::string b_truth = "uniform";
  b_cmd->add_option("--family", b_family, "spline-density | spline-regression");
  b_cmd->add_option("--k", b_k);
  b_cmd->add_option("--q", b_q);
  b_cmd->add_option("--L", b_L);
  b_cmd->add_option("--n", b_cfg.n);
  b_cmd->add_option("--replicates", b_cfg.replicates);
  b_cmd->add_option("--seed", b_cfg.seed);
  b_cmd->add_option("--rho", b_cfg.rho);
  b_cmd->add_option("--gamma", b_cfg.gamma, "override the derived gamma");
  b_cmd->add_option("--sigma", b_cfg.reg.sigma);
  b_cmd->add_option("--M", b_cfg.reg.M);
  b_cmd->add_option("--c0", b_cfg.reg.c0);
  b_cmd->add_option("--theta-grid", b_cfg.theta_grid);
  b_cmd->add_option("--truth", b_truth, "uniform | smooth:<name> | regression:<name>");
  b_cmd->add_option("--out", b_out);

  // approx-check
  auto* a_cmd = app.add_subcommand("approx-check", "least-squares spline approximation rates");
  std::string a_truth = "abs-half";
  int a_q = 2;
  std::string a_klist = "4,8,16,32";
  bool a_density = false;
  double a_M = 1.0, a_sigma = 1.0, a_s = 1.0;
  std::string a_out = "approx.csv";
  a_cmd->add_option("--truth", a_truth, "named function");
  a_cmd->add_option("--q", a_q);
  a_cmd->add_option("--k-list", a_klist, "comma-separated interior knot counts");
  a_cmd->add_flag("--density", a_density, "fit log f_o of a smooth density truth");
  a_cmd->add_option("--M", a_M);
  a_cmd->add_option("--sigma", a_sigma);
  a_cmd->add_option("--s", a_s, "declared smoothness");
  a_cmd->add_option("--out", a_out);

  // density-sim / regression-sim
  auto* d_cmd = app.add_subcommand("density-sim", "posterior contraction sweep (density family)");
  auto* r_cmd = app.add_subcommand("regression-sim", "posterior contraction sweep (regression family)");
  std::string d_config, r_config;
  std::string d_out = "density-sim", r_out = "regression-sim";
  int d_workers = 0, r_workers = 0;
  std::uint64_t d_seed = 0, r_seed = 0;
  d_cmd->add_option("--config", d_config, "JSON experiment config")->required();
  d_cmd->add_option("--out", d_out, "output basename");
  d_cmd->add_option("--workers", d_workers, "worker threads (does not change results)");
  d_cmd->add_option("--seed", d_seed, "override config seed");
  r_cmd->add_option("--config", r_config, "JSON experiment config")->required();
  r_cmd->add_option("--out", r_out, "output basename");
  r_cmd->add_option("--workers", r_workers);
  r_cmd->add_option("--seed", r_seed);

  // divergence
  auto* v_cmd = app.add_subcommand("divergence", "divergences between a truth and a log-spline density");
  std::string v_truth = "uniform";
  std::string v_theta = "0,0";
  int v_q = 1, v_k = 1;
  v_cmd->add_option("--truth", v_truth, "uniform | smooth:<name>");
  v_cmd->add_option("--theta", v_theta, "coefficients, comma separated (log2 accepted)");
  v_cmd->add_option("--q", v_q);
  v_cmd->add_option("--k", v_k);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message and usage hint
    return 1;
  }

  try {
    if (*c_cmd) {
      if (c_eta_mode == "generic")
        c_opt.eta_mode = EtaMode::generic;
      else if (c_eta_mode != "literal")
        throw std::invalid_argument("--eta-mode: unknown value '" + c_eta_mode + "'");
      return run_constants(c_family, c_opt, c_reg, out_dir / c_out);
    }

    if (*e_cmd) {
      const Family fam = family_from_name(e_family);
      ConstraintSpec cs;
      ModelIndex mi;
      mi.family = fam;
      mi.k = e_k;
      mi.q = e_q;
      mi.level = e_level;
      mi.L = e_L;
      cs = mi.constraints(1.0);
      const FamilyConstants fc = constants_for(mi);
      CoveringBoundOptions opts;
      opts.cloud_points = e_points;
      opts.rho = e_rho;
      if (fam == Family::spline_regression) {
        opts.ball_metric = DistanceMetric::l2;
      }
      const auto truth = [](double) { return 0.0; };
      const CoveringBoundReport rep =
          verify_covering_bound(cs, fc.A, fc.m, e_trials, e_seed, truth, opts);
      CsvTable csv({"r", "delta", "global_ball", "covering", "bound", "ratio"});
      for (const CoveringBoundRow& row : rep.rows)
        csv.add_row({format_g17(row.r), format_g17(row.delta),
                     row.global_ball ? "1" : "0", std::to_string(row.covering),
                     format_g17(row.bound), format_g17(row.ratio)});
      write_file_atomic(out_dir / e_out, csv.str());
      json summary;
      summary["A"] = rep.A;
      summary["m"] = rep.m;
      summary["rho"] = rep.rho;
      summary["worst_ratio"] = rep.worst_ratio;
      summary["all_within_bound"] = rep.all_within_bound;
      summary["inclusion_ok"] = rep.inclusion_ok;
      std::cout << summary.dump(2) << "\n";
      return rep.all_within_bound && rep.inclusion_ok ? 0 : 2;
    }

    if (*b_cmd) {
      const Family fam = family_from_name(b_family);
      if (fam == Family::spline_regression) {
        b_cfg.model = ConstraintSpec::spline_regression(b_k, b_q, b_L, b_cfg.reg.M);
        if (b_truth.rfind("regression:", 0) == 0)
          b_cfg.truth = TruthSpec::regression(b_truth.substr(11), b_cfg.reg.M,
                                              b_cfg.reg.sigma);
        else
          b_cfg.truth = TruthSpec::regression("sin2pi-half", b_cfg.reg.M,
                                              b_cfg.reg.sigma);
      } else {
        b_cfg.model = ConstraintSpec::spline_density(b_k, b_q, b_L);
        if (b_truth == "uniform")
          b_cfg.truth = TruthSpec::uniform();
        else if (b_truth.rfind("smooth:", 0) == 0)
          b_cfg.truth = TruthSpec::smooth(b_truth.substr(7), 1.0);
        else
          throw std::invalid_argument("--truth: unknown value '" + b_truth + "'");
      }
      const TailBoundResult res = tail_bound_mc(b_cfg);
      CsvTable csv({"xi", "envelope", "events", "frequency", "informative",
                    "meets_floor"});
      bool ok = true;
      for (const TailBoundRow& row : res.rows) {
        csv.add_row({format_g17(row.xi), format_g17(row.envelope),
                     std::to_string(row.events), format_g17(row.frequency),
                     row.informative ? "1" : "0", row.meets_floor ? "1" : "0"});
        if (row.informative && row.meets_floor && row.frequency > row.envelope)
          ok = false;
      }
      write_file_atomic(out_dir / b_out, csv.str());
      json summary;
      summary["gamma"] = res.gamma;
      summary["xi_floor"] = res.xi_floor;
      summary["A"] = res.A;
      summary["m"] = res.m;
      summary["within_envelope"] = ok;
      std::cout << summary.dump(2) << "\n";
      return ok ? 0 : 2;
    }

    if (*a_cmd) {
      Truth truth;
      if (a_density)
        truth = make_truth(TruthSpec::smooth(a_truth, a_s));
      else
        truth = make_truth(TruthSpec::regression(a_truth, a_M, a_sigma));
      CsvTable csv({"q", "k", "sup_error", "kl_d", "v", "inside"});
      std::vector<std::pair<long, double>> pts;
      for (double kd : parse_doubles(a_klist)) {
        const int k = static_cast<int>(kd);
        const ApproximationTarget at = best_spline_fit(truth, a_q, k);
        csv.add_row({std::to_string(a_q), std::to_string(k),
                     format_g17(at.sup_error), format_g17(at.kl_d),
                     format_g17(at.v), at.membership.inside ? "1" : "0"});
        pts.emplace_back(k + 1, at.sup_error);
      }
      const SlopeFit fit = fit_log_slope(pts);
      write_file_atomic(out_dir / a_out, csv.str());
      json summary;
      summary["slope_vs_log_k_plus_1"] = fit.slope;
      summary["ci_half_width"] = fit.ci_half_width;
      summary["degenerate"] = fit.degenerate;
      std::cout << summary.dump(2) << "\n";
      return 0;
    }

    if (*d_cmd || *r_cmd) {
      const bool density = static_cast<bool>(*d_cmd);
      const std::string cfg_path = density ? d_config : r_config;
      const std::string base = density ? d_out : r_out;
      ExperimentConfig cfg = experiment_config_from_json(read_file(cfg_path));
      const int workers = density ? d_workers : r_workers;
      const std::uint64_t seed = density ? d_seed : r_seed;
      if (workers > 0) cfg.mc.workers = workers;
      if (seed > 0) cfg.seed = seed;
      if (density && cfg.family == Family::spline_regression)
        throw std::invalid_argument("config key 'family': density-sim requires a density family");
      if (!density && cfg.family != Family::spline_regression)
        throw std::invalid_argument("config key 'family': regression-sim requires spline-regression");
      const ExperimentResult res = contraction_experiment(cfg);
      CsvTable csv({"n", "replicate", "radius", "tail_mass", "log_tail_mass",
                    "se_log"});
      for (const ExperimentRow& row : res.rows)
        csv.add_row({std::to_string(row.n), std::to_string(row.replicate),
                     format_g17(row.radius), format_g17(row.tail_mass),
                     format_g17(row.log_tail_mass), format_g17(row.se_log)});
      write_file_atomic(out_dir / (base + ".csv"), csv.str());
      json summary;
      summary["config"] = json::parse(experiment_config_to_json(cfg));
      summary["metric"] = metric_name(res.metric);
      summary["cross_check_ok"] = res.cross_check_ok;
      json medians = json::array();
      for (const MedianRow& m : res.medians)
        medians.push_back({{"n", m.n},
                           {"radius", m.radius},
                           {"median_tail", m.median_tail},
                           {"median_log_tail", m.median_log_tail}});
      summary["medians"] = medians;
      json weights = json::array();
      for (const auto& [n, label, w] : res.model_weights)
        weights.push_back({{"n", n}, {"model", label}, {"weight", w}});
      summary["model_weights"] = weights;
      const SlopeFit fit = rate_slope(res, SlopeStatistic::half_mass_radius);
      summary["half_mass_slope"] = fit.degenerate ? json() : json(fit.slope);
      summary["half_mass_slope_ci"] = fit.ci_half_width;
      write_file_atomic(out_dir / (base + ".json"), summary.dump(2));
      std::cout << summary.dump(2) << "\n";
      return 0;
    }

    if (*v_cmd) {
      Truth truth;
      if (v_truth == "uniform")
        truth = make_truth(TruthSpec::uniform());
      else if (v_truth.rfind("smooth:", 0) == 0)
        truth = make_truth(TruthSpec::smooth(v_truth.substr(7), 1.0));
      else
        throw std::invalid_argument("--truth: unknown value '" + v_truth + "'");
      const std::vector<double> theta = parse_doubles(v_theta);
      ExpFamDensity d(ModelBasis(SplineBasis(v_k, v_q)), theta);
      DensityView tv{truth.fns.log_f, truth.fns.breaks};
      const DivergenceReport rep = divergences(tv, view(d));
      json out;
      out["hellinger"] = rep.hellinger;
      out["kl_d"] = rep.kl_d;
      out["v"] = rep.v;
      out["v_centered"] = rep.v_centered;
      out["l2"] = rep.l2;
      out["sup_log_ratio"] = rep.sup_log_ratio;
      std::cout << out.dump(2) << "\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
