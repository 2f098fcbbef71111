#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "sieveprior/io.hpp"

using namespace sieveprior;

TEST_CASE("format_g17 round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-18, -123456.789, 0.535810586458598})
    CHECK(std::stod(format_g17(v)) == v);
}

TEST_CASE("atomic writes leave no partial file") {
  const auto dir = std::filesystem::temp_directory_path() / "sieveprior_io_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "a" / "out.csv";
  write_file_atomic(path, "x,y\n1,2\n");
  CHECK(std::filesystem::exists(path));
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y");
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv table shape enforcement") {
  CsvTable t({"a", "b"});
  t.add_row({"1", "2"});
  CHECK_THROWS_AS(t.add_row({"1"}), std::invalid_argument);
  CHECK(t.str() == "a,b\n1,2\n");
}

TEST_CASE("experiment config JSON round trip") {
  ExperimentConfig cfg;
  cfg.truth = TruthSpec::regression("sin2pi-half", 1.0, 0.5);
  cfg.family = Family::spline_regression;
  cfg.sieve.k_min = 5;
  cfg.sieve.k_max = 8;
  cfg.sieve.q_max = 1;
  cfg.sieve.L_max = 1;
  cfg.reg.sigma = 0.5;
  cfg.reg.M = 1.0;
  cfg.reg.c0 = 1.0;
  cfg.n_grid = {200, 800};
  cfg.radius_coef = 3.0;
  cfg.radius_factors = {0.5, 1.0, 2.0};
  cfg.replicates = 4;
  cfg.seed = 99;
  cfg.mc_draws = 12345;
  cfg.mc.proposal = ProposalKind::tempered;
  cfg.metric = DistanceMetric::l2;

  const std::string json = experiment_config_to_json(cfg);
  const ExperimentConfig back = experiment_config_from_json(json);
  CHECK(back.family == cfg.family);
  CHECK(back.truth.kind == cfg.truth.kind);
  CHECK(back.truth.name == cfg.truth.name);
  CHECK(back.sieve.k_min == 5);
  CHECK(back.sieve.k_max == 8);
  CHECK(back.reg.sigma == 0.5);
  CHECK(back.n_grid == cfg.n_grid);
  CHECK(back.radius_factors == cfg.radius_factors);
  CHECK(back.seed == 99);
  CHECK(back.mc_draws == 12345);
  CHECK(back.mc.proposal == ProposalKind::tempered);
  CHECK(back.metric.has_value());
  CHECK(*back.metric == DistanceMetric::l2);
  // the echo of the echo is identical text
  CHECK(experiment_config_to_json(back) == json);
}

TEST_CASE("config errors name the offending key") {
  CHECK_THROWS_WITH_AS(experiment_config_from_json("{}"),
                       "config key 'truth' is required", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      experiment_config_from_json(R"({"truth":{"kind":"uniform"}})"),
      "config key 'family' is required", std::invalid_argument);
  CHECK_THROWS_AS(experiment_config_from_json(
                      R"({"truth":{"kind":"nope"},"family":"spline-density"})"),
                  std::invalid_argument);
}

TEST_CASE("truth spec round trip") {
  const TruthSpec b = TruthSpec::besov(0.7, 2.0, 11);
  const TruthSpec back = truth_spec_from_json(truth_spec_to_json(b));
  CHECK(back.kind == TruthSpec::Kind::besov);
  CHECK(back.besov_alpha == 0.7);
  CHECK(back.H0 == 2.0);
  CHECK(back.coef_seed == 11);
}
