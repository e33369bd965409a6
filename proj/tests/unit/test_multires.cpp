#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "adaband/multires.hpp"
#include "adaband/rng.hpp"
#include "adaband/wavelet.hpp"

using namespace adaband;

namespace {

CoeffTree random_tree(const WaveletBasis& b, int j_max, std::uint64_t seed, double amp) {
  Rng rng(seed);
  CoeffTree t(b.j0, j_max);
  for (double& a : t.alpha) a = rng.uniform(-amp, amp);
  for (int l = b.j0; l < j_max; ++l)
    for (double& v : t.level(l)) v = rng.uniform(-amp, amp);
  return t;
}

double coeff_dist(const CoeffTree& a, const CoeffTree& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.alpha.size(); ++i)
    m = std::max(m, std::fabs(a.alpha[i] - b.alpha[i]));
  for (int l = a.j0; l < a.j_max; ++l)
    for (std::size_t i = 0; i < a.level(l).size(); ++i)
      m = std::max(m, std::fabs(a.level(l)[i] - b.level(l)[i]));
  return m;
}

}  // namespace

TEST_CASE("tree shape follows the level layout") {
  WaveletBasis b = build_basis(4, 8);
  CoeffTree t(b.j0, 6);
  CHECK(t.alpha.size() == static_cast<std::size_t>(1) << b.j0);
  for (int l = b.j0; l < 6; ++l) CHECK(t.level(l).size() == static_cast<std::size_t>(1) << l);
  CHECK_THROWS_AS(CoeffTree(4, 3), std::invalid_argument);
}

TEST_CASE("analyze inverts synthesize on finite expansions") {
  // smoother filters give a cleaner quadrature, so the tolerance tightens
  struct Case {
    int order;
    double tol_coeff, tol_grid;
  };
  for (auto [order, tol_coeff, tol_grid] : {Case{4, 1e-6, 1e-5}, Case{8, 1e-11, 1e-10}}) {
    CAPTURE(order);
    WaveletBasis b = build_basis(order, 12);
    CoeffTree t = random_tree(b, 6, 1234, 1.0);
    GridFunction f = synthesize(t, b, 13);
    CoeffTree back = analyze(f, b, 6);
    CHECK(coeff_dist(t, back) < tol_coeff);
    // a second pass is a fixed point of the round trip
    GridFunction f2 = synthesize(back, b, 13);
    CHECK(sup_dist(f, f2) < tol_grid);
  }
}

TEST_CASE("analyze validates the level against the grid") {
  WaveletBasis b = build_basis(4, 12);
  GridFunction f(8);
  CHECK_THROWS_AS(analyze(f, b, 7), std::invalid_argument);  // needs j_max <= q - 2
  CHECK_THROWS_AS(analyze(f, b, 2), std::invalid_argument);  // below j0
  CHECK_NOTHROW(analyze(f, b, 6));
}

TEST_CASE("partial synthesis matches a truncated tree") {
  WaveletBasis b = build_basis(4, 12);
  CoeffTree t = random_tree(b, 7, 99, 0.5);
  for (int j : {b.j0, 5, 7}) {
    GridFunction partial = synthesize(t, b, j, 11);
    GridFunction trunc = synthesize(truncate_tree(t, j), b, 11);
    CHECK(sup_dist(partial, trunc) == 0.0);
  }
  CHECK(truncate_tree(t, 5).j_max == 5);
  CHECK_THROWS_AS(truncate_tree(t, 2), std::invalid_argument);
  CHECK_THROWS_AS(truncate_tree(t, 8), std::invalid_argument);
  CHECK_THROWS_AS(synthesize(t, b, 8, 11), std::invalid_argument);
}

TEST_CASE("tree subtraction is coefficientwise") {
  WaveletBasis b = build_basis(4, 8);
  CoeffTree t = random_tree(b, 6, 5, 1.0);
  CoeffTree u = random_tree(b, 6, 6, 1.0);
  CoeffTree d = tree_sub(t, u);
  for (std::size_t i = 0; i < t.alpha.size(); ++i)
    CHECK(d.alpha[i] == t.alpha[i] - u.alpha[i]);
  for (int l = b.j0; l < 6; ++l)
    for (std::size_t i = 0; i < t.level(l).size(); ++i)
      CHECK(d.level(l)[i] == t.level(l)[i] - u.level(l)[i]);
  CHECK(coeff_dist(tree_sub(t, t), CoeffTree(b.j0, 6)) == 0.0);
  CHECK_THROWS_AS(tree_sub(t, random_tree(b, 5, 7, 1.0)), std::invalid_argument);
}

TEST_CASE("point synthesis agrees with the sampled grid") {
  WaveletBasis b = build_basis(4, 12);
  CoeffTree t = random_tree(b, 5, 77, 0.3);
  GridFunction f = synthesize(t, b, 10);
  double worst = 0.0;
  for (std::size_t m = 0; m < f.size(); m += 7)
    worst = std::max(worst, std::fabs(f.values[m] - synth_point(t, b, f.x(m))));
  CHECK(worst < 1e-12);
}
