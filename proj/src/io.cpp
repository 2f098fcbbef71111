#include "sieveprior/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sieveprior {

using nlohmann::json;

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw std::invalid_argument("CsvTable: row width mismatch");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < header_.size(); ++i)
    out << (i ? "," : "") << header_[i];
  out << "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return out.str();
}

namespace {

json truth_to_json_obj(const TruthSpec& t) {
  json j;
  switch (t.kind) {
    case TruthSpec::Kind::uniform: j["kind"] = "uniform"; break;
    case TruthSpec::Kind::logspline:
      j["kind"] = "logspline";
      j["theta"] = t.theta;
      j["q"] = t.q;
      j["k"] = t.k;
      break;
    case TruthSpec::Kind::smooth:
      j["kind"] = "smooth";
      j["name"] = t.name;
      j["s"] = t.declared_s;
      break;
    case TruthSpec::Kind::besov:
      j["kind"] = "besov";
      j["alpha"] = t.besov_alpha;
      j["H0"] = t.H0;
      j["coef_seed"] = t.coef_seed;
      j["max_level"] = t.max_level;
      break;
    case TruthSpec::Kind::regression:
      j["kind"] = "regression";
      j["name"] = t.name;
      j["s"] = t.declared_s;
      j["M"] = t.M;
      j["sigma"] = t.sigma;
      break;
  }
  return j;
}

TruthSpec truth_from_json_obj(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  TruthSpec t;
  if (kind == "uniform") {
    t = TruthSpec::uniform();
  } else if (kind == "logspline") {
    t = TruthSpec::logspline(j.at("theta").get<std::vector<double>>(),
                             j.at("q").get<int>(), j.at("k").get<int>());
  } else if (kind == "smooth") {
    t = TruthSpec::smooth(j.at("name").get<std::string>(),
                          j.value("s", 1.0));
  } else if (kind == "besov") {
    t = TruthSpec::besov(j.at("alpha").get<double>(), j.at("H0").get<double>(),
                         j.value("coef_seed", std::uint64_t{1}));
    t.max_level = j.value("max_level", 12);
  } else if (kind == "regression") {
    t = TruthSpec::regression(j.at("name").get<std::string>(),
                              j.at("M").get<double>(),
                              j.at("sigma").get<double>());
    t.declared_s = j.value("s", 1.0);
  } else {
    throw std::invalid_argument("truth.kind: unknown value '" + kind + "'");
  }
  return t;
}

json sieve_to_json_obj(const SieveOptions& s) {
  json j;
  j["rho"] = s.rho;
  j["rho_regression"] = s.rho_regression;
  j["eta_mode"] = s.eta_mode == EtaMode::literal_1072_5 ? "literal" : "generic";
  j["k_min"] = s.k_min;
  j["k_max"] = s.k_max;
  j["q_min"] = s.q_min;
  j["q_max"] = s.q_max;
  j["L_min"] = s.L_min;
  j["L_max"] = s.L_max;
  j["l_min"] = s.l_min;
  j["l_max"] = s.l_max;
  return j;
}

SieveOptions sieve_from_json_obj(const json& j) {
  SieveOptions s;
  s.rho = j.value("rho", s.rho);
  s.rho_regression = j.value("rho_regression", s.rho_regression);
  const std::string mode = j.value("eta_mode", std::string("literal"));
  if (mode == "literal")
    s.eta_mode = EtaMode::literal_1072_5;
  else if (mode == "generic")
    s.eta_mode = EtaMode::generic;
  else
    throw std::invalid_argument("sieve.eta_mode: unknown value '" + mode + "'");
  s.k_min = j.value("k_min", s.k_min);
  s.k_max = j.value("k_max", s.k_max);
  s.q_min = j.value("q_min", s.q_min);
  s.q_max = j.value("q_max", s.q_max);
  s.L_min = j.value("L_min", s.L_min);
  s.L_max = j.value("L_max", s.L_max);
  s.l_min = j.value("l_min", s.l_min);
  s.l_max = j.value("l_max", s.l_max);
  return s;
}

}  // namespace

std::string truth_spec_to_json(const TruthSpec& spec) {
  return truth_to_json_obj(spec).dump(2);
}

TruthSpec truth_spec_from_json(const std::string& text) {
  return truth_from_json_obj(json::parse(text));
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["truth"] = truth_to_json_obj(cfg.truth);
  j["family"] = family_name(cfg.family);
  j["sieve"] = sieve_to_json_obj(cfg.sieve);
  j["sigma"] = cfg.reg.sigma;
  j["M"] = cfg.reg.M;
  j["c0"] = cfg.reg.c0;
  j["n_grid"] = cfg.n_grid;
  j["radius_coef"] = cfg.radius_coef;
  j["radius_exponent"] = cfg.radius_exponent;
  j["radius_log_power"] = cfg.radius_log_power;
  j["radius_factors"] = cfg.radius_factors;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["mc_draws"] = cfg.mc_draws;
  j["workers"] = cfg.mc.workers;
  switch (cfg.mc.proposal) {
    case ProposalKind::uniform: j["proposal"] = "uniform"; break;
    case ProposalKind::tempered: j["proposal"] = "tempered"; break;
    case ProposalKind::automatic: j["proposal"] = "automatic"; break;
  }
  j["cross_check"] = cfg.mc.cross_check;
  if (cfg.metric) j["metric"] = metric_name(*cfg.metric);
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig cfg;
  if (!j.contains("truth")) throw std::invalid_argument("config key 'truth' is required");
  cfg.truth = truth_from_json_obj(j.at("truth"));
  if (!j.contains("family")) throw std::invalid_argument("config key 'family' is required");
  cfg.family = family_from_name(j.at("family").get<std::string>());
  if (j.contains("sieve")) cfg.sieve = sieve_from_json_obj(j.at("sieve"));
  cfg.reg.sigma = j.value("sigma", cfg.reg.sigma);
  cfg.reg.M = j.value("M", cfg.reg.M);
  cfg.reg.c0 = j.value("c0", 2.0 * cfg.reg.sigma);
  cfg.n_grid = j.value("n_grid", cfg.n_grid);
  cfg.radius_coef = j.value("radius_coef", cfg.radius_coef);
  cfg.radius_exponent = j.value("radius_exponent", cfg.radius_exponent);
  cfg.radius_log_power = j.value("radius_log_power", cfg.radius_log_power);
  cfg.radius_factors = j.value("radius_factors", cfg.radius_factors);
  cfg.replicates = j.value("replicates", cfg.replicates);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.mc_draws = j.value("mc_draws", cfg.mc_draws);
  cfg.mc.workers = j.value("workers", cfg.mc.workers);
  const std::string prop = j.value("proposal", std::string("automatic"));
  if (prop == "uniform")
    cfg.mc.proposal = ProposalKind::uniform;
  else if (prop == "tempered")
    cfg.mc.proposal = ProposalKind::tempered;
  else if (prop == "automatic")
    cfg.mc.proposal = ProposalKind::automatic;
  else
    throw std::invalid_argument("config key 'proposal': unknown value '" + prop + "'");
  cfg.mc.cross_check = j.value("cross_check", false);
  if (j.contains("metric"))
    cfg.metric = metric_from_name(j.at("metric").get<std::string>());
  return cfg;
}

}  // namespace sieveprior
