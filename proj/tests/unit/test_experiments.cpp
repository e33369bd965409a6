#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "adaband/experiments.hpp"

using namespace adaband;

namespace {

Config parse(const std::string& text) { return Config::parse_string(text, "test.ini"); }

const char* kChiText =
    "[experiment]\n"
    "kind = chi_square\n"
    "reps = 500\n"
    "m_list = 4\n"
    "pair_n_list = 3\n"
    "gamma_list = 0.2\n"
    "seed = 9\n";

}  // namespace

TEST_CASE("csv output is schema-stable") {
  std::vector<ResultRow> rows = {
      {"demo", 128, "uniform", "coverage", 1.0 / 3.0, 0.01, 50, 7},
      {"demo", 128, "uniform", "width_mean", 0.25, 0.0, 50, 7},
  };
  std::string text = csv_to_string(rows);
  CHECK(text.find("experiment,n,model,metric,value,se,reps,seed\n") == 0);
  CHECK(text.find("demo,128,uniform,coverage,0.3333333333,0.01,50,7\n") != std::string::npos);
  CHECK(text.find('\r') == std::string::npos);

  rows[0].se = -0.5;
  CHECK_THROWS(csv_to_string(rows));
  rows[0].se = 0.01;
  rows[0].value = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(csv_to_string(rows));
}

TEST_CASE("statistic summary matches the closed form") {
  Stat st = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(st.mean == Catch::Approx(2.5).margin(1e-15));
  // sample sd sqrt(5/3) over sqrt(4)
  CHECK(st.se == Catch::Approx(std::sqrt(5.0 / 3.0) / 2.0).margin(1e-12));
  CHECK(summarize({}).mean == 0.0);
  CHECK(summarize({2.0}).se == 0.0);
}

TEST_CASE("seed derivation separates domains and indices") {
  std::set<std::uint64_t> seen;
  for (auto d : {SeedDomain::model, SeedDomain::calibration, SeedDomain::evaluation,
                 SeedDomain::auxiliary})
    for (std::uint64_t i = 0; i < 4; ++i) seen.insert(derive_seed(99, d, i));
  CHECK(seen.size() == 16);
  CHECK(derive_seed(1, SeedDomain::model, 0) != derive_seed(2, SeedDomain::model, 0));
}

TEST_CASE("experiment setup is validated") {
  RunOptions opt;
  opt.threads = 1;
  CHECK_THROWS_AS(read_setup(parse("[experiment]\nkind = coverage\n"), opt, "chi_square"),
                  ConfigError);
  CHECK_THROWS_AS(
      read_setup(parse("[experiment]\nalpha = 0\n"), opt, "coverage"), ConfigError);
  CHECK_THROWS_AS(
      read_setup(parse("[experiment]\nalpha = 1\n"), opt, "coverage"), ConfigError);
  CHECK_THROWS_AS(
      read_setup(parse("[experiment]\nband = triple\n"), opt, "coverage"), ConfigError);
  CHECK_THROWS_AS(
      read_setup(parse("[experiment]\nreps = 0\n"), opt, "coverage"), ConfigError);
  CHECK_THROWS_AS(
      read_setup(parse("[experiment]\nn = 1\n"), opt, "coverage"), ConfigError);
  CHECK_THROWS_AS(
      read_setup(parse("[experiment]\nn_list = 4096, 1\n"), opt, "coverage"), ConfigError);
  CHECK_THROWS_AS(
      read_setup(parse("[experiment]\norder = 5\n"), opt, "coverage"), std::invalid_argument);
  CHECK_THROWS_AS(read_setup(parse("[model]\nkind = uniform\n"), opt, "coverage"), ConfigError);

  ExperimentSetup su = read_setup(
      parse("[experiment]\nn = 512\nseed = 4\nq = 9\n"), opt, "coverage");
  CHECK(su.basis.order == 4);
  CHECK(su.n == 512);
  CHECK(su.q == 9);
  CHECK(su.seed == 4);
  opt.seed_given = true;
  opt.seed = 77;
  su = read_setup(parse("[experiment]\nn = 512\nseed = 4\n"), opt, "coverage");
  CHECK(su.seed == 77);  // command line beats the file
}

TEST_CASE("model sections build the advertised instances") {
  RunOptions opt;
  opt.threads = 1;
  Config cfg = parse(
      "[experiment]\nn = 512\n"
      "[model]\nkind = uniform\n"
      "[model]\nkind = cap_bump\nj = 4\n"
      "[model]\nkind = bump\neps = 0.4\nj = 4\nname = small\n"
      "[model]\nkind = separated_bump\nsep = 0.15\nj = 3\n");
  ExperimentSetup su = read_setup(cfg, opt, "coverage");
  BandConstants consts;
  std::vector<ModelSpec> models = read_models(cfg, su, consts, su.n);
  REQUIRE(models.size() == 4);
  CHECK(models[0].name == "uniform");
  CHECK(models[0].target_branch == 0);
  CHECK(models[1].name == "cap_j4");
  CHECK(models[1].model.exact_coeffs.level(4)[4] ==
        Catch::Approx(2.0 * std::exp2(-4 * 1.5)).margin(1e-15));
  CHECK(models[2].name == "small");
  CHECK(models[3].name == "separated");
  CHECK(models[3].target_branch == 1);
  // the separated instance really puts the advertised gap behind the ball
  HolderBall ball(su.s, su.B);
  SeparationEstimate est =
      separation_from_ball(models[3].model.exact_coeffs, ball, su.basis, 10);
  CHECK(est.lower == Catch::Approx(0.15).margin(1e-12));

  CHECK_THROWS_AS(
      read_models(parse("[experiment]\nn = 512\n"), su, consts, su.n), ConfigError);
  CHECK_THROWS_AS(
      read_models(parse("[experiment]\nn = 512\n[model]\nkind = wat\n"), su, consts, su.n),
      ConfigError);
  CHECK_THROWS_AS(read_models(parse("[experiment]\nn = 512\n[model]\nkind = uniform\n"
                                    "[model]\nkind = uniform\n"),
                              su, consts, su.n),
                  ConfigError);  // duplicate names need explicit name keys
  CHECK_THROWS_AS(
      read_models(parse("[experiment]\nn = 512\n[model]\nkind = grid_separated\ni0 = 0\n"), su,
                  consts, su.n),
      ConfigError);  // grid models need band = grid
}

TEST_CASE("chi-square driver reproduces its closed form and is deterministic") {
  RunOptions opt;
  opt.threads = 1;
  std::vector<ResultRow> rows = run_chi_square(parse(kChiText), opt);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].metric == "mc_estimate");
  CHECK(rows[1].metric == "closed_form");
  CHECK(rows[1].value == Catch::Approx(chi_square_distance(4, 3, 0.2)).margin(1e-15));
  CHECK(std::fabs(rows[0].value - rows[1].value) < 5.0 * rows[0].se);

  // byte-identical reruns, also across worker counts
  std::string once = csv_to_string(rows);
  CHECK(csv_to_string(run_chi_square(parse(kChiText), opt)) == once);
  RunOptions threaded;
  threaded.threads = 3;
  CHECK(csv_to_string(run_chi_square(parse(kChiText), threaded)) == once);

  // the CLI seed override lands in the output rows
  RunOptions seeded;
  seeded.threads = 1;
  seeded.seed_given = true;
  seeded.seed = 123;
  std::vector<ResultRow> alt = run_chi_square(parse(kChiText), seeded);
  CHECK(alt[0].seed == 123);
  CHECK(csv_to_string(alt) != once);
}

TEST_CASE("prior concentration driver emits frequency and bound rows") {
  RunOptions opt;
  opt.threads = 1;
  Config cfg = parse(
      "[experiment]\n"
      "kind = prior_concentration\n"
      "order = 2\n"
      "reps = 100\n"
      "prior_s = 2.0\n"
      "prior_B = 1.0\n"
      "j_list = 3\n"
      "eps_list = 0.5\n"
      "seed = 3\n");
  std::vector<ResultRow> rows = run_prior_concentration(cfg, opt);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].metric.find("frequency") == 0);
  CHECK(rows[0].value >= 0.0);
  CHECK(rows[0].value <= 1.0);
  CHECK(rows[1].metric.find("bound") == 0);
  CHECK(rows[1].value == Catch::Approx(std::pow(0.5, 8.0)).margin(1e-15));

  CHECK_THROWS_AS(run_prior_concentration(
                      parse("[experiment]\nkind = prior_concentration\norder = 2\n"
                            "j_list = 3\neps_list = 1.5\n"),
                      opt),
                  ConfigError);
}

TEST_CASE("coverage driver works end to end on a small budget") {
  RunOptions opt;
  opt.threads = 1;
  const char* text =
      "[experiment]\n"
      "kind = coverage\n"
      "n = 512\n"
      "reps = 20\n"
      "r = 0.5\n"
      "s = 1.0\n"
      "seed = 5\n"
      "[constants]\n"
      "C_L = 1.3\n"
      "kappa = 0.5\n"
      "L = 2.0\n"
      "L_prime = 1.0\n"
      "[model]\n"
      "kind = uniform\n"
      "[model]\n"
      "kind = separated_bump\n"
      "sep = 0.15\n"
      "j = 3\n";
  std::vector<ResultRow> rows = run_coverage(parse(text), opt);
  // five metrics per model
  REQUIRE(rows.size() == 10);
  std::set<std::string> metrics;
  for (const auto& r : rows) {
    metrics.insert(r.metric);
    CHECK(r.n == 512);
    CHECK(r.reps == 20);
  }
  CHECK(metrics == std::set<std::string>{"coverage", "width_mean", "branch_rough_rate",
                                         "branch_correct_rate", "j_hat_mean"});
  // the width dichotomy shows up as one of the two exact widths
  for (const auto& r : rows)
    if (r.metric == "width_mean" && r.se == 0.0) {
      bool one_of = r.value == 2.0 * RateTable::rate(0.5, 512) ||
                    r.value == 2.0 * RateTable::rate(1.0, 512);
      CHECK(one_of);
    }
  CHECK(csv_to_string(run_coverage(parse(text), opt)) == csv_to_string(rows));

  // typos anywhere in the config are fatal
  std::string typo = std::string(text) + "[experiment_extra]\nx = 1\n";
  CHECK_THROWS_AS(run_coverage(parse(typo), opt), ConfigError);
}

TEST_CASE("testing risk driver validates the render resolution") {
  RunOptions opt;
  opt.threads = 1;
  Config cfg = parse(
      "[experiment]\n"
      "kind = testing_risk\n"
      "n = 512\n"
      "j_list = 9\n"
      "eps_list = 0.5\n");  // default q = 10 cannot render a level-9 bump tree
  CHECK_THROWS_AS(run_testing_risk(cfg, opt), ConfigError);
}

TEST_CASE("worker count resolution follows flag then environment") {
  CHECK(resolve_threads(3, true) == 3);
  CHECK(resolve_threads(0, true) >= 1);
  ::setenv("ADABAND_THREADS", "5", 1);
  CHECK(resolve_threads(0, false) == 5);
  ::setenv("ADABAND_THREADS", "junk", 1);
  CHECK_THROWS_AS(resolve_threads(0, false), std::invalid_argument);
  ::unsetenv("ADABAND_THREADS");
  CHECK(resolve_threads(0, false) >= 1);
  CHECK_THROWS_AS(resolve_threads(-2, true), std::invalid_argument);
}
