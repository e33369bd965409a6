#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "adaband/estimation.hpp"
#include "adaband/models.hpp"
#include "adaband/rng.hpp"

using namespace adaband;

TEST_CASE("rate bookkeeping matches the closed forms") {
  for (int n : {1024, 4096, 8192, 65536})
    for (double s : {0.5, 1.0, 1.25, 2.0}) {
      double q = std::log(static_cast<double>(n)) / n;
      CHECK(RateTable::rate(s, n) ==
            Catch::Approx(std::pow(q, s / (2.0 * s + 1.0))).margin(1e-15));
      double v = std::log2(n / std::log(static_cast<double>(n))) / (2.0 * s + 1.0);
      CHECK(RateTable::j_star(s, n) == std::max(static_cast<int>(std::ceil(v)), 1));
    }
  // frozen anchor values
  CHECK(RateTable::j_star(0.5, 8192) == 5);
  CHECK(RateTable::j_star(1.0, 8192) == 4);
  CHECK(RateTable::j_star(1.5, 8192) == 3);
  RateTable rt{2.0, 1.0};
  CHECK(rt.sigma(8192, 5) == Catch::Approx(std::sqrt(2.0 * 32.0 * 5.0 / 8192.0)).margin(1e-15));
  CHECK(rt.sigma(8192, 5) == Catch::Approx(0.19764235).margin(1e-7));
  // rates shrink with n, level rule is nonincreasing in s
  CHECK(RateTable::rate(0.5, 8192) < RateTable::rate(0.5, 1024));
  CHECK(RateTable::j_star(0.5, 8192) >= RateTable::j_star(1.5, 8192));
  CHECK_THROWS_AS(RateTable::rate(0.5, 2), std::invalid_argument);
  CHECK_THROWS_AS(RateTable::j_star(0.5, 2), std::invalid_argument);
}

TEST_CASE("empirical coefficients are sample means of the basis functions") {
  WaveletBasis b = build_basis(4, 12);
  Sample xs = {0.11, 0.38, 0.52, 0.77, 0.93};
  EstimatorState st = empirical_coeffs(xs, b, 5);
  CHECK(st.n == 5);
  for (int k = 0; k < b.levels_per(); ++k) {
    double acc = 0.0;
    for (double x : xs) acc += phi_per(b, k, x);
    CHECK(st.coeffs.alpha[static_cast<std::size_t>(k)] ==
          Catch::Approx(acc / 5.0).margin(1e-12));
  }
  for (int l = b.j0; l < 5; ++l)
    for (int k = 0; k < (1 << l); ++k) {
      double acc = 0.0;
      for (double x : xs) acc += psi_per(b, l, k, x);
      CHECK(st.coeffs.level(l)[static_cast<std::size_t>(k)] ==
            Catch::Approx(acc / 5.0).margin(1e-12));
    }
  CHECK_THROWS_AS(empirical_coeffs(Sample{}, b, 5), std::invalid_argument);
  CHECK_THROWS_AS(empirical_coeffs(Sample{0.5, 1.5}, b, 5), std::invalid_argument);
  CHECK_THROWS_AS(empirical_coeffs(xs, b, 2), std::invalid_argument);
}

TEST_CASE("empirical coefficients average to the exact ones") {
  WaveletBasis b = build_basis(4, 12);
  DensityModel bump = make_bump(b, 0.5, 0.5, 4, 4);
  const int reps = 200, n = 4096;
  CoeffTree avg(b.j0, 5);
  for (int rep = 0; rep < reps; ++rep) {
    Sample xs = draw(bump, n, derive_seed(42, SeedDomain::evaluation,
                                          static_cast<std::uint64_t>(rep)));
    EstimatorState st = empirical_coeffs(xs, b, 5);
    for (std::size_t i = 0; i < avg.alpha.size(); ++i)
      avg.alpha[i] += st.coeffs.alpha[i] / reps;
    for (int l = b.j0; l < 5; ++l)
      for (std::size_t i = 0; i < avg.level(l).size(); ++i)
        avg.level(l)[i] += st.coeffs.level(l)[i] / reps;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < avg.alpha.size(); ++i)
    worst = std::max(worst, std::fabs(avg.alpha[i] - bump.exact_coeffs.alpha[i]));
  for (int l = b.j0; l < 5; ++l)
    for (std::size_t i = 0; i < avg.level(l).size(); ++i)
      worst = std::max(worst, std::fabs(avg.level(l)[i] - bump.exact_coeffs.level(l)[i]));
  // MC noise at these reps sits near 3e-3 for this seed
  CHECK(worst < 5e-3);
}

TEST_CASE("level selector stops at the coarsest consistent candidate") {
  WaveletBasis b = build_basis(4, 12);
  const int n = 8192;
  RateTable rates{2.0, 1.0};

  // all candidates identical (no detail mass): pick the window floor
  EstimatorState flat;
  flat.basis = &b;
  flat.n = n;
  flat.coeffs = CoeffTree(b.j0, 6);
  for (double& a : flat.coeffs.alpha) a = std::exp2(-0.5 * b.j0);
  LepskiResult lr = lepski_estimator(flat, 0.5, 1.5, rates, 1.0, 10);
  CHECK(lr.j_lo == 4);  // j_star(1.5) = 3 clamps up to j0 + 1
  CHECK(lr.j_hi == 5);
  CHECK(lr.j_hat == 4);

  // one dominant detail at level 4 separates the j=5 candidate from coarser
  // ones, so the selector must move to the top of the window
  EstimatorState spiked = flat;
  spiked.coeffs.level(4)[5] = 1.0;
  lr = lepski_estimator(spiked, 0.5, 1.5, rates, 1.0, 10);
  CHECK(lr.j_hat == 5);

  CHECK_THROWS_AS(lepski_estimator(flat, 0.0, 1.0, rates, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(lepski_estimator(flat, 1.0, 0.5, rates, 1.0, 10), std::invalid_argument);
}

TEST_CASE("deviation tail check guards its admissible range") {
  WaveletBasis b = build_basis(4, 12);
  DensityModel u = make_uniform(b);
  // n/(2^j j) = 4096/(64*6) = 10.7 < 16
  CHECK_THROWS_AS(
      check_concentration(u, 6, 4096, 10, {0.1}, 1.0, 16.0, 1, 1, 10), GuardError);
  CHECK_THROWS_AS(
      check_concentration(u, b.j0, 4096, 10, {0.1}, 1.0, 4.0, 1, 1, 10), std::invalid_argument);

  const int reps = 300, n = 4096, j = 5;
  double floor_t = std::sqrt(std::exp2(j) * j / static_cast<double>(n));
  std::vector<double> t_grid = {0.5 * floor_t, floor_t, 1.5 * floor_t, 2.0 * floor_t};
  ConcentrationResult res = check_concentration(u, j, n, reps, t_grid, 1.0, 4.0, 7, 1, 10);
  REQUIRE(res.rows.size() == t_grid.size());
  REQUIRE(res.deviations.size() == static_cast<std::size_t>(reps));
  CHECK_FALSE(res.rows[0].asserted);  // below the noise floor
  CHECK(res.rows[1].asserted);
  for (std::size_t i = 1; i < res.rows.size(); ++i)
    CHECK(res.rows[i].freq <= res.rows[i - 1].freq);  // tail is monotone
  for (const auto& row : res.rows)
    if (row.asserted) CHECK(row.freq <= row.bound + 1e-12);
  CHECK(res.C2 >= 1.0);
}
