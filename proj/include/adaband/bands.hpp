#ifndef ADABAND_BANDS_HPP
#define ADABAND_BANDS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaband/estimation.hpp"
#include "adaband/holder.hpp"
#include "adaband/models.hpp"

namespace adaband {

// Procedure constants.  All of them come out of the shipped calibration
// routines (see calibrate.hpp); nothing here is theory-tight, the values just
// have to make the finite-sample procedures honest.
//   C_L   Lepski comparison threshold
//   kappa two-class separation test threshold, tau = kappa sigma(j*)
//   L     two-class band width factor; also the grid-test threshold factor
//   L_prime calibrated separation scale: rho_n = L_prime sigma(j*)
//   L0    grid-class separation scale: rho_n(i) = L0 rate(s_i)
//   M     grid band width factor
//   k     density sup factor in sigma (sup|f| <= k B)
struct BandConstants {
  double C_L = 1.0;
  double kappa = 1.0;
  double L = 1.0;
  double L_prime = 1.0;
  double L0 = 1.0;
  double M = 1.0;
  double k = 1.0;
};

struct BandResult {
  GridFunction center;
  double half_width = 0.0;
  double selected_s = 0.0;  // smoothness used for the width
  int j_hat = 0;            // Lepski level of the center
  struct TestValue {
    int level = 0;        // resolution level of the statistic
    double stat = 0.0;      // separation lower bound
    double threshold = 0.0; // comparison threshold
  };
  std::vector<TestValue> test_values;

  bool covers(const GridFunction& truth) const { return sup_dist(truth, center) <= half_width; }
};

// Two-point adaptation: width L r_n(r) when the empirical distance from the
// smoother ball exceeds tau = kappa sigma(j*(r)), else L r_n(s).
inline BandResult two_class_band(const Sample& xs, double r, double s, double B, double alpha,
                                 const WaveletBasis& b, const BandConstants& consts, int q) {
  if (!(r > 0.0) || !(s > r)) throw std::invalid_argument("two-class band needs 0 < r < s");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  const int n = static_cast<int>(xs.size());
  RateTable rates{B, consts.k};
  int j_star = std::max(RateTable::j_star(r, n), b.j0 + 1);

  EstimatorState st = empirical_coeffs(xs, b, j_star);
  HolderBall ball(s, B);

  // lower separation surrogate of the truncated empirical expansion
  double dhat = 0.0;
  int witness = -1;
  for (int l = b.j0; l < j_star; ++l) {
    double cap = B * std::exp2(-l * (s + 0.5));
    double w = std::exp2(0.5 * l);
    for (double v : st.coeffs.level(l)) {
      double excess = w * (std::fabs(v) - cap);
      if (excess > dhat) {
        dhat = excess;
        witness = l;
      }
    }
  }
  double tau = consts.kappa * rates.sigma(n, j_star);

  LepskiResult lep = lepski_estimator(st, r, s, rates, consts.C_L, q);

  BandResult out;
  out.center = std::move(lep.estimate);
  out.j_hat = lep.j_hat;
  out.selected_s = dhat > tau ? r : s;
  out.half_width = consts.L * RateTable::rate(out.selected_s, n);
  out.test_values.push_back({witness >= 0 ? witness : j_star, dhat, tau});
  return out;
}

// Smoothness grid S = {s_1 = r < s_2 < ... < s_N = R} with consecutive gaps
// inside [zeta/log n, 2 zeta/log n].
struct GridS {
  std::vector<double> s;
  double zeta = 0.0;
  int n = 0;
};

inline GridS build_grid(double r, double R, double zeta, int n) {
  if (!(r > 0.0) || !(R > r)) throw std::invalid_argument("grid needs 0 < r < R");
  if (!(zeta > 0.0)) throw std::invalid_argument("grid needs zeta > 0");
  if (n < 3) throw std::invalid_argument("grid needs n >= 3");
  double logn = std::log(static_cast<double>(n));
  double lo = zeta / logn, hi = 2.0 * zeta / logn;
  if (R - r < lo)
    throw std::invalid_argument("grid window infeasible: R - r below the minimum gap " +
                                std::to_string(lo));
  int pieces = static_cast<int>(std::ceil((R - r) * logn / (1.5 * zeta)));
  auto fits = [&](int p) {
    if (p < 1) return false;
    double gap = (R - r) / p;
    return gap >= lo && gap <= hi;
  };
  if (!fits(pieces)) {
    if (fits(pieces - 1))
      --pieces;
    else if (fits(pieces + 1))
      ++pieces;
    else
      throw std::invalid_argument("grid window infeasible for zeta = " + std::to_string(zeta));
  }
  GridS out;
  out.zeta = zeta;
  out.n = n;
  out.s.resize(static_cast<std::size_t>(pieces) + 1);
  for (int i = 0; i <= pieces; ++i)
    out.s[static_cast<std::size_t>(i)] = r + (R - r) * static_cast<double>(i) / pieces;
  out.s.front() = r;
  out.s.back() = R;
  return out;
}

// Smoothness selected by inverting the level rule at Lepski's j_hat, clamped
// to [r, R]; used by the non-honest variant of the grid band.
inline double smoothness_of_level(int j_hat, int n, double r, double R) {
  double v = std::log2(static_cast<double>(n) / std::log(static_cast<double>(n)));
  double s = 0.5 * (v / static_cast<double>(j_hat) - 1.0);
  return std::clamp(s, r, R);
}

// Grid band: scan stages i = 1..N-1 from the roughest model upward; stage i
// tests the fit of the level-j_i expansion against the ball with the next
// smoothness on the grid.  First rejection pins s_hat = s_i; no rejection
// means s_hat = R.  With dishonest = true the tests are skipped and s_hat
// comes from Lepski's level (a width that is not uniformly honest).
inline BandResult grid_band(const Sample& xs, const GridS& grid, double B, double alpha,
                            const WaveletBasis& b, const BandConstants& consts, int q,
                            bool dishonest = false) {
  if (grid.s.size() < 2) throw std::invalid_argument("grid band needs at least two points");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
  const int n = static_cast<int>(xs.size());
  const double r = grid.s.front(), R = grid.s.back();
  RateTable rates{B, consts.k};
  int j_tree = std::max(RateTable::j_star(r, n), b.j0 + 1);

  EstimatorState st = empirical_coeffs(xs, b, j_tree);
  LepskiResult lep = lepski_estimator(st, r, R, rates, consts.C_L, q);

  BandResult out;
  out.center = std::move(lep.estimate);
  out.j_hat = lep.j_hat;

  double s_hat = R;
  if (!dishonest) {
    bool rejected = false;
    for (std::size_t i = 0; i + 1 < grid.s.size(); ++i) {
      double s_i = grid.s[i];
      double s_next = grid.s[i + 1];
      int j_i = std::clamp(RateTable::j_star(s_i, n), b.j0 + 1, j_tree);
      double dhat = 0.0;
      int witness = -1;
      for (int l = b.j0; l < j_i; ++l) {
        double cap = B * std::exp2(-l * (s_next + 0.5));
        double w = std::exp2(0.5 * l);
        for (double v : st.coeffs.level(l)) {
          double excess = w * (std::fabs(v) - cap);
          if (excess > dhat) {
            dhat = excess;
            witness = l;
          }
        }
      }
      double thr = consts.L * rates.sigma(n, j_i);
      out.test_values.push_back({witness >= 0 ? witness : j_i, dhat, thr});
      if (!rejected && dhat > thr) {
        s_hat = s_i;
        rejected = true;
      }
    }
  } else {
    s_hat = smoothness_of_level(out.j_hat, n, r, R);
  }
  out.selected_s = s_hat;
  out.half_width = consts.M * RateTable::rate(s_hat, n);
  return out;
}

// Chi-square divergence of the M-point uniform mixture of one-coefficient
// alternatives from the null, for coefficient size gamma and sample size n:
// E(Z - 1)^2 = ((1 + gamma^2)^n - 1) / M.
inline double chi_square_distance(int M, int n, double gamma) {
  if (M < 1 || n < 1) throw std::invalid_argument("chi-square needs M >= 1, n >= 1");
  return (std::pow(1.0 + gamma * gamma, n) - 1.0) / static_cast<double>(M);
}

// Band-to-test reduction: flag the sample as alternative-like iff some
// alternative fits entirely inside the band.  Risk is the flag rate under the
// null plus the worst miss rate over the alternatives.
struct TestingRiskResult {
  double type1 = 0.0;
  double type2_max = 0.0;
  double risk = 0.0;
  std::vector<double> type2;  // per alternative
};

using BandProcedure = std::function<BandResult(const Sample&)>;

inline TestingRiskResult testing_risk(const BandProcedure& band_proc,
                                      const DensityModel& null_model,
                                      const std::vector<DensityModel>& alternatives, int n,
                                      int reps, std::uint64_t seed, int threads, int q) {
  if (alternatives.empty()) throw std::invalid_argument("testing risk needs alternatives");
  std::vector<GridFunction> alt_grid;
  alt_grid.reserve(alternatives.size());
  for (const auto& alt : alternatives)
    alt_grid.push_back(synthesize(alt.exact_coeffs, *alt.basis, q));

  // Psi = 1 (flag the sample as alternative-like) iff some alternative fits
  // entirely inside the band.
  auto some_alternative_inside = [&](const BandResult& band) {
    for (const auto& gfn : alt_grid) {
      if (gfn.q != band.center.q) throw std::invalid_argument("band/alternative grid mismatch");
      bool inside = true;
      for (std::size_t m = 0; m < gfn.values.size(); ++m) {
        if (std::fabs(gfn.values[m] - band.center.values[m]) > band.half_width) {
          inside = false;
          break;
        }
      }
      if (inside) return true;
    }
    return false;
  };

  TestingRiskResult out;
  std::vector<int> alarms(static_cast<std::size_t>(reps), 0);
  parallel_for(reps, threads, [&](int rep) {
    Sample xs = draw(null_model, n,
                     derive_seed(seed, SeedDomain::evaluation, static_cast<std::uint64_t>(rep)));
    alarms[static_cast<std::size_t>(rep)] = some_alternative_inside(band_proc(xs)) ? 1 : 0;
  });
  int acc = 0;
  for (int a : alarms) acc += a;
  out.type1 = static_cast<double>(acc) / static_cast<double>(reps);

  out.type2.resize(alternatives.size(), 0.0);
  for (std::size_t ai = 0; ai < alternatives.size(); ++ai) {
    std::vector<int> misses(static_cast<std::size_t>(reps), 0);
    parallel_for(reps, threads, [&](int rep) {
      std::uint64_t s = derive_seed(seed ^ (0x51ed2700b3a1c9d5ull * (ai + 2)),
                                    SeedDomain::evaluation, static_cast<std::uint64_t>(rep));
      Sample xs = draw(alternatives[ai], n, s);
      misses[static_cast<std::size_t>(rep)] = some_alternative_inside(band_proc(xs)) ? 0 : 1;
    });
    int mc = 0;
    for (int m : misses) mc += m;
    out.type2[ai] = static_cast<double>(mc) / static_cast<double>(reps);
    out.type2_max = std::max(out.type2_max, out.type2[ai]);
  }
  out.risk = out.type1 + out.type2_max;
  return out;
}

}  // namespace adaband

#endif
