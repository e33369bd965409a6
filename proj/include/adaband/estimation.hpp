#ifndef ADABAND_ESTIMATION_HPP
#define ADABAND_ESTIMATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "adaband/holder.hpp"
#include "adaband/models.hpp"
#include "adaband/multires.hpp"
#include "adaband/rng.hpp"
#include "adaband/threads.hpp"

namespace adaband {

// Rate bookkeeping.  Natural logs throughout; level choices use the ceiling,
// so 2^{j*} lands within a factor 2 above (n / log n)^{1/(2r+1)}.
struct RateTable {
  double B = 1.0;  // smoothness ball radius
  double k = 1.0;  // density sup factor: sup|f| <= k*B over the model class

  static double rate(double s, int n) {
    if (n < 3) throw std::invalid_argument("rate needs n >= 3");
    double q = std::log(static_cast<double>(n)) / static_cast<double>(n);
    return std::pow(q, s / (2.0 * s + 1.0));
  }

  static int j_star(double r, int n) {
    if (n < 3) throw std::invalid_argument("level rule needs n >= 3");
    double v = std::log2(static_cast<double>(n) / std::log(static_cast<double>(n))) /
               (2.0 * r + 1.0);
    int j = static_cast<int>(std::ceil(v));
    return std::max(j, 1);
  }

  double sigma(int n, int j) const {
    return std::sqrt(k * B * std::exp2(j) * static_cast<double>(j) /
                     static_cast<double>(n));
  }
};

struct EstimatorState {
  CoeffTree coeffs;  // empirical coefficients up to j_max
  int n = 0;
  const WaveletBasis* basis = nullptr;
};

// Empirical coefficients alpha_k = mean phi_{j0,k}(X_i), beta_lk = mean
// psi_{lk}(X_i).  Per observation each level touches support_len translates;
// the table walk uses one fractional offset per level with stride-2^depth
// lookups.
inline EstimatorState empirical_coeffs(const Sample& xs, const WaveletBasis& b, int j_max) {
  if (j_max < b.j0) throw std::invalid_argument("empirical tree needs j_max >= j0");
  EstimatorState st;
  st.basis = &b;
  st.n = static_cast<int>(xs.size());
  if (st.n == 0) throw std::invalid_argument("empty sample");
  st.coeffs = CoeffTree(b.j0, j_max);
  const int S = b.support_len;
  const std::size_t stride = std::size_t{1} << b.depth;

  for (double x : xs) {
    if (!(x >= 0.0) || x > 1.0) throw std::invalid_argument("observation outside [0,1]");
    if (x == 1.0) x = 0.0;
    for (int l = b.j0; l <= j_max; ++l) {
      const bool alpha_level = (l == b.j0);
      // level j0 serves both alpha and (if j_max > j0) the first beta row
      for (int pass = 0; pass < (alpha_level ? 1 : 0) + (l < j_max ? 1 : 0); ++pass) {
        const bool use_phi = alpha_level && pass == 0;
        const std::vector<double>& tab = use_phi ? b.phi : b.psi;
        std::vector<double>& dst = use_phi ? st.coeffs.alpha : st.coeffs.level(l);
        double pos = std::ldexp(x, l);
        double fl = std::floor(pos);
        int kc = static_cast<int>(fl);
        int mask = (1 << l) - 1;
        double frac = pos - fl;
        double tpos = std::ldexp(frac, b.depth);
        double tfl = std::floor(tpos);
        std::size_t ti = static_cast<std::size_t>(tfl);
        double w = tpos - tfl;
        for (int t = 0; t < S; ++t) {
          std::size_t idx = ti + static_cast<std::size_t>(t) * stride;
          double v = tab[idx] * (1.0 - w) + tab[idx + 1] * w;
          dst[static_cast<std::size_t>((kc - t) & mask)] += v;
        }
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(st.n);
  {
    double f = std::exp2(0.5 * b.j0) * inv_n;
    for (double& v : st.coeffs.alpha) v *= f;
  }
  for (int l = b.j0; l < j_max; ++l) {
    double f = std::exp2(0.5 * l) * inv_n;
    for (double& v : st.coeffs.level(l)) v *= f;
  }
  return st;
}

// Linear wavelet estimator truncated at level j, sampled at resolution 2^-q.
inline GridFunction linear_estimator(const EstimatorState& st, int j, int q) {
  if (j <= st.coeffs.j0 || j > st.coeffs.j_max)
    throw std::invalid_argument("estimator level outside [j0+1, j_max]");
  return synthesize(st.coeffs, *st.basis, j, q);
}

struct LepskiResult {
  GridFunction estimate;
  int j_hat = 0;
  int j_lo = 0, j_hi = 0;  // searched window
};

// Smallest level whose estimate stays within C_L sigma(l) of every finer
// candidate in the window [j*(R), j*(r)] (clamped to the tree).
inline LepskiResult lepski_estimator(const EstimatorState& st, double r, double R,
                                     const RateTable& rates, double C_L, int q) {
  if (!(r > 0.0) || !(R >= r)) throw std::invalid_argument("lepski needs 0 < r <= R");
  const int j0 = st.coeffs.j0;
  int j_lo = std::clamp(RateTable::j_star(R, st.n), j0 + 1, st.coeffs.j_max);
  int j_hi = std::clamp(RateTable::j_star(r, st.n), j_lo, st.coeffs.j_max);

  std::vector<GridFunction> cand;
  cand.reserve(static_cast<std::size_t>(j_hi - j_lo + 1));
  for (int j = j_lo; j <= j_hi; ++j) cand.push_back(synthesize(st.coeffs, *st.basis, j, q));

  int j_hat = j_hi;
  for (int j = j_lo; j <= j_hi; ++j) {
    bool ok = true;
    for (int l = j + 1; l <= j_hi; ++l) {
      double d = sup_dist(cand[static_cast<std::size_t>(j - j_lo)],
                          cand[static_cast<std::size_t>(l - j_lo)]);
      if (d > C_L * rates.sigma(st.n, l)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      j_hat = j;
      break;
    }
  }
  LepskiResult out;
  out.estimate = std::move(cand[static_cast<std::size_t>(j_hat - j_lo)]);
  out.j_hat = j_hat;
  out.j_lo = j_lo;
  out.j_hi = j_hi;
  return out;
}

struct ConcentrationRow {
  double t = 0.0;
  double freq = 0.0;  // empirical P(||f_n(j) - mean||_inf >= t)
  double bound = 0.0; // C2 exp(-n t^2 / (C2 (sup f v 1) 2^j)), only if asserted
  bool asserted = false;
};

struct ConcentrationResult {
  std::vector<ConcentrationRow> rows;
  double C2 = 1.0;  // smallest constant making the bound hold on asserted rows
  std::vector<double> deviations;  // per-replication sup-norm deviations
};

// Empirical tail of the sup-norm deviation of the linear estimator around its
// mean, compared against a sub-Gaussian profile in t.  The profile only
// applies above the noise floor C1 sqrt((sup f v 1) 2^j j / n) and when
// n / (2^j j) is large enough; rows outside the asserted range carry the raw
// frequency with no bound.
inline ConcentrationResult check_concentration(const DensityModel& model, int j, int n,
                                               int reps, const std::vector<double>& t_grid,
                                               double C1, double C_admis, std::uint64_t seed,
                                               int threads, int q) {
  const WaveletBasis& b = *model.basis;
  if (j <= b.j0) throw std::invalid_argument("concentration level must exceed j0");
  double load = static_cast<double>(n) / (std::exp2(j) * static_cast<double>(j));
  if (load < C_admis)
    throw GuardError("concentration check outside admissible range: n/(2^j j) = " +
                     std::to_string(load) + " < " + std::to_string(C_admis));

  CoeffTree mean_tree = truncate_tree(model.exact_coeffs, std::min(j, model.exact_coeffs.j_max));
  GridFunction mean = synthesize(mean_tree, b, q);

  std::vector<double> dev(static_cast<std::size_t>(reps), 0.0);
  parallel_for(reps, threads, [&](int rep) {
    Sample xs = draw(model, n, derive_seed(seed, SeedDomain::evaluation,
                                           static_cast<std::uint64_t>(rep)));
    EstimatorState st = empirical_coeffs(xs, b, j);
    dev[static_cast<std::size_t>(rep)] = sup_dist(synthesize(st.coeffs, b, j, q), mean);
  });

  ConcentrationResult out;
  out.deviations = dev;
  double supf = std::max(model.bound, 1.0);
  double floor_t = C1 * std::sqrt(supf * std::exp2(j) * static_cast<double>(j) /
                                  static_cast<double>(n));
  double c2 = 1.0;
  for (double t : t_grid) {
    ConcentrationRow row;
    row.t = t;
    int hits = 0;
    for (double d : dev)
      if (d >= t) ++hits;
    row.freq = static_cast<double>(hits) / static_cast<double>(reps);
    row.asserted = t >= floor_t;
    if (row.asserted && row.freq > 0.0) {
      // smallest C2 with C2 exp(-A/C2) >= freq; the left side is increasing
      double A = static_cast<double>(n) * t * t / (supf * std::exp2(j));
      double lo = 1e-9, hi = 1.0;
      while (hi * std::exp(-A / hi) < row.freq && hi < 1e12) hi *= 2.0;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid * std::exp(-A / mid) >= row.freq)
          hi = mid;
        else
          lo = mid;
      }
      c2 = std::max(c2, hi);
    }
    out.rows.push_back(row);
  }
  out.C2 = c2;
  for (auto& row : out.rows)
    if (row.asserted) {
      double A = static_cast<double>(n) * row.t * row.t / (supf * std::exp2(j));
      row.bound = out.C2 * std::exp(-A / out.C2);
    }
  return out;
}

}  // namespace adaband

#endif
