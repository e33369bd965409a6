#ifndef ADABAND_CALIBRATE_HPP
#define ADABAND_CALIBRATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaband/bands.hpp"
#include "adaband/estimation.hpp"
#include "adaband/models.hpp"
#include "adaband/rng.hpp"
#include "adaband/threads.hpp"

namespace adaband {

// All procedure constants are produced here, never hand-tuned: each one is
// the smallest value on a dyadic lattice (step 2^-3 after doubling) meeting
// its finite-sample target on a designated calibration suite.  Calibration
// draws live in their own seed domain, disjoint from evaluation draws.
struct CalibrationSetup {
  const WaveletBasis* basis = nullptr;
  double B = 2.0;
  double alpha = 0.1;
  double k = 1.0;
  int n = 1 << 12;
  int reps = 400;
  std::uint64_t seed = 0;
  int threads = 1;
  int q = 10;
};

namespace detail {

// Smallest c on the dyadic lattice with pred(c) true; pred must be monotone
// nondecreasing in c.  Doubles from hi0 to find a feasible point, then
// bisects down to the lattice step.
inline double dyadic_smallest(double hi0, double step, double cap,
                              const std::function<bool(double)>& pred,
                              const std::string& what) {
  double hi = hi0;
  while (!pred(hi)) {
    hi *= 2.0;
    if (hi > cap)
      throw GuardError("calibration target unreachable for " + what);
  }
  double lo = 0.0;
  while (hi - lo > step) {
    double mid = 0.5 * (lo + hi);
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

inline double quantile_sorted(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  double idx = p * static_cast<double>(v.size() - 1);
  std::size_t i = static_cast<std::size_t>(idx);
  double w = idx - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - w) + v[i + 1] * w;
}

inline std::uint64_t member_salt(std::uint64_t seed, std::uint64_t tag) {
  return mix64(seed ^ (0x8f1bbcdcbfa53e0bull * (tag + 1)));
}

}  // namespace detail

// Lepski comparison constant: on pure noise (uniform density) the sup
// distance between any two candidate levels should pass the test with 95%
// margin; C_L is the largest per-pair 95th percentile of the distance over
// sigma(l), with a small headroom factor.
inline double calibrate_lepski(const CalibrationSetup& cb, double r, double R) {
  const WaveletBasis& b = *cb.basis;
  RateTable rates{cb.B, cb.k};
  DensityModel uni = make_uniform(b);
  int j_hi = std::max(RateTable::j_star(r, cb.n), b.j0 + 1);
  int j_lo = std::clamp(RateTable::j_star(R, cb.n), b.j0 + 1, j_hi);
  if (j_hi == j_lo) return 1.0;  // degenerate window, the test never runs

  int pairs = 0;
  for (int j = j_lo; j <= j_hi; ++j)
    for (int l = j + 1; l <= j_hi; ++l) ++pairs;
  std::vector<std::vector<double>> ratio(static_cast<std::size_t>(pairs),
                                         std::vector<double>(static_cast<std::size_t>(cb.reps)));
  parallel_for(cb.reps, cb.threads, [&](int rep) {
    Sample xs = draw(uni, cb.n, derive_seed(detail::member_salt(cb.seed, 0xA1),
                                            SeedDomain::calibration,
                                            static_cast<std::uint64_t>(rep)));
    EstimatorState st = empirical_coeffs(xs, b, j_hi);
    std::vector<GridFunction> cand;
    for (int j = j_lo; j <= j_hi; ++j) cand.push_back(synthesize(st.coeffs, b, j, cb.q));
    int p = 0;
    for (int j = j_lo; j <= j_hi; ++j)
      for (int l = j + 1; l <= j_hi; ++l) {
        double d = sup_dist(cand[static_cast<std::size_t>(j - j_lo)],
                            cand[static_cast<std::size_t>(l - j_lo)]);
        ratio[static_cast<std::size_t>(p++)][static_cast<std::size_t>(rep)] =
            d / rates.sigma(cb.n, l);
      }
  });
  double c = 0.0;
  for (auto& v : ratio) c = std::max(c, detail::quantile_sorted(v, 0.95));
  return 1.02 * c;
}

namespace detail {

struct TwoClassRep {
  double dhat = 0.0;
  double sup_err = 0.0;
};

inline std::vector<TwoClassRep> simulate_two_class(const CalibrationSetup& cb,
                                                   const DensityModel& model, double r, double s,
                                                   const BandConstants& consts,
                                                   std::uint64_t salt) {
  const WaveletBasis& b = *cb.basis;
  GridFunction truth = synthesize(model.exact_coeffs, b, cb.q);
  std::vector<TwoClassRep> out(static_cast<std::size_t>(cb.reps));
  parallel_for(cb.reps, cb.threads, [&](int rep) {
    Sample xs = draw(model, cb.n, derive_seed(salt, SeedDomain::calibration,
                                              static_cast<std::uint64_t>(rep)));
    BandResult band = two_class_band(xs, r, s, cb.B, cb.alpha, b, consts, cb.q);
    out[static_cast<std::size_t>(rep)] = {band.test_values.front().stat,
                                          sup_dist(band.center, truth)};
  });
  return out;
}

// Bump whose coefficient sits exactly on the ball cap at one level: the
// hardest smooth member for the separation test's false alarms.
inline bool try_cap_bump(const WaveletBasis& b, double B, double s, int level,
                         DensityModel& out) {
  int m = ((1 << level) - b.support_len) / 2;
  if (m < 0) m = 0;
  try {
    out = make_bump(b, B, s, level, m);
    return true;
  } catch (const GuardError&) {
    return false;
  }
}

// Separated two-class member: bump one level below j*(r) whose distance from
// the smooth ball is exactly `sep`.  Fails if the member would leave the
// rough ball or the density would go negative.
inline bool try_separated_bump(const WaveletBasis& b, double B, double r, double s, int n,
                               double sep, DensityModel& out) {
  int j_star = std::max(RateTable::j_star(r, n), b.j0 + 1);
  int j_sep = std::max(j_star - 1, b.j0);
  double eps = (sep + B * std::exp2(-j_sep * s)) * std::exp2(j_sep * r);
  if (eps > B) return false;
  int m = ((1 << j_sep) - b.support_len) / 2;
  if (m < 0) m = 0;
  try {
    out = make_bump(b, eps, r, j_sep, m);
    return true;
  } catch (const GuardError&) {
    return false;
  }
}

}  // namespace detail

// Two-class calibration.  Order matters: C_L first (the center estimate),
// then kappa (false-alarm level of the separation test on smooth members),
// then L_prime (separation needed for reliable detection given kappa), then
// L (width meeting the coverage target on the whole suite).
inline BandConstants calibrate_two_class(const CalibrationSetup& cb, double r, double s) {
  if (!(r > 0.0) || !(s > r)) throw std::invalid_argument("calibration needs 0 < r < s");
  const WaveletBasis& b = *cb.basis;
  BandConstants consts;
  consts.k = cb.k;
  consts.C_L = calibrate_lepski(cb, r, s);

  RateTable rates{cb.B, cb.k};
  int j_star = std::max(RateTable::j_star(r, cb.n), b.j0 + 1);
  double sig = rates.sigma(cb.n, j_star);

  // smooth suite: uniform plus one cap bump per visible level
  std::vector<DensityModel> smooth;
  smooth.push_back(make_uniform(b));
  for (int l = b.j0; l < j_star; ++l) {
    DensityModel m;
    if (detail::try_cap_bump(b, cb.B, s, l, m)) smooth.push_back(std::move(m));
  }

  std::vector<std::vector<detail::TwoClassRep>> smooth_reps;
  for (std::size_t i = 0; i < smooth.size(); ++i)
    smooth_reps.push_back(detail::simulate_two_class(cb, smooth[i], r, s, consts,
                                                     detail::member_salt(cb.seed, 0xB0 + i)));

  const double fire_tol = std::min(cb.alpha / 4.0, 0.025);
  consts.kappa = detail::dyadic_smallest(
      1.0, 0.125, 1e6,
      [&](double c) {
        for (const auto& reps : smooth_reps) {
          int fires = 0;
          for (const auto& rr : reps)
            if (rr.dhat > c * sig) ++fires;
          if (fires > fire_tol * cb.reps) return false;
        }
        return true;
      },
      "kappa (two-class false alarms)");

  // power target for the calibrated separation scale
  const double power_target = 0.975;
  auto power_at = [&](double c) {
    DensityModel m;
    if (!detail::try_separated_bump(b, cb.B, r, s, cb.n, c * sig, m)) return -1.0;
    auto reps = detail::simulate_two_class(cb, m, r, s, consts, detail::member_salt(cb.seed, 0xC7));
    int hits = 0;
    for (const auto& rr : reps)
      if (rr.dhat > consts.kappa * sig) ++hits;
    return static_cast<double>(hits) / cb.reps;
  };
  // the class runs out of room at eps = B; cap the search there
  int j_sep = std::max(j_star - 1, b.j0);
  double sep_cap = (cb.B * std::exp2(-j_sep * r) - cb.B * std::exp2(-j_sep * s)) / sig;
  consts.L_prime = detail::dyadic_smallest(
      0.5, 0.125, sep_cap,
      [&](double c) {
        double p = power_at(c);
        return p >= power_target;
      },
      "L_prime (two-class detection power)");

  // coverage suite: smooth members plus the separated member at the
  // calibrated scale
  std::vector<std::vector<detail::TwoClassRep>> cover_reps = smooth_reps;
  {
    DensityModel m;
    if (detail::try_separated_bump(b, cb.B, r, s, cb.n, consts.L_prime * sig, m))
      cover_reps.push_back(
          detail::simulate_two_class(cb, m, r, s, consts, detail::member_salt(cb.seed, 0xC7)));
  }
  const double cover_target = 1.0 - 0.7 * cb.alpha;
  double rate_r = RateTable::rate(r, cb.n);
  double rate_s = RateTable::rate(s, cb.n);
  consts.L = detail::dyadic_smallest(
      1.0, 0.125, 1e6,
      [&](double c) {
        for (const auto& reps : cover_reps) {
          int covered = 0;
          for (const auto& rr : reps) {
            double width = c * (rr.dhat > consts.kappa * sig ? rate_r : rate_s);
            if (rr.sup_err <= width) ++covered;
          }
          if (covered < cover_target * cb.reps) return false;
        }
        return true;
      },
      "L (two-class coverage)");
  return consts;
}

namespace detail {

struct GridRep {
  std::vector<double> stat;  // per stage separation statistic
  std::vector<double> sig;   // per stage sigma(j_i)
  double sup_err = 0.0;
};

inline std::vector<GridRep> simulate_grid(const CalibrationSetup& cb, const DensityModel& model,
                                          const GridS& grid, const BandConstants& consts,
                                          std::uint64_t salt) {
  const WaveletBasis& b = *cb.basis;
  GridFunction truth = synthesize(model.exact_coeffs, b, cb.q);
  BandConstants probe = consts;
  probe.L = 1.0;  // stage thresholds come back as plain sigma(j_i)
  std::vector<GridRep> out(static_cast<std::size_t>(cb.reps));
  parallel_for(cb.reps, cb.threads, [&](int rep) {
    Sample xs = draw(model, cb.n, derive_seed(salt, SeedDomain::calibration,
                                              static_cast<std::uint64_t>(rep)));
    BandResult band = grid_band(xs, grid, cb.B, cb.alpha, b, probe, cb.q);
    GridRep rr;
    for (const auto& tv : band.test_values) {
      rr.stat.push_back(tv.stat);
      rr.sig.push_back(tv.threshold);
    }
    rr.sup_err = sup_dist(band.center, truth);
    out[static_cast<std::size_t>(rep)] = std::move(rr);
  });
  return out;
}

// First stage i (0-based) with stat > c sig; grid.s.size()-1 if none.
inline std::size_t first_fire(const GridRep& rr, double c) {
  for (std::size_t i = 0; i < rr.stat.size(); ++i)
    if (rr.stat[i] > c * rr.sig[i]) return i;
  return rr.stat.size();
}

// Separated grid member at stage i0: a single bump inside the s_i ball whose
// coefficient exceeds the s_{i0+1} cap by `sep`.  The bump level must be
// visible to the stage-i0 statistic (below j_{i0}); the coarsest level that
// still admits a valid density has both the largest eps headroom and the
// least noise, so levels are tried from the bottom up.  Returns false when no
// level works: the separated set at this stage and scale is empty.
inline bool try_grid_separated(const WaveletBasis& b, const GridS& grid, double B,
                               std::size_t i0, double sep, int n, DensityModel& out) {
  double s_i = grid.s[i0];
  double s_next = grid.s[i0 + 1];
  int j_i = std::max(RateTable::j_star(s_i, n), b.j0 + 1);
  for (int l = b.j0; l < j_i; ++l) {
    double eps = (sep + B * std::exp2(-l * s_next)) * std::exp2(l * s_i);
    if (eps > B) continue;
    int m = ((1 << l) - b.support_len) / 2;
    if (m < 0) m = 0;
    try {
      out = make_bump(b, eps, s_i, l, m);
      return true;
    } catch (const GuardError&) {
      // density positivity rules this level out; a finer one may still fit
    }
  }
  return false;
}

}  // namespace detail

// Grid-band calibration: C_L, then the stage threshold factor L (false fires
// on in-ball members), then the separation scale L0 (reliable selection of
// the right grid point), then the width factor M (coverage on the suite).
inline BandConstants calibrate_grid(const CalibrationSetup& cb, const GridS& grid) {
  const WaveletBasis& b = *cb.basis;
  const double r = grid.s.front(), R = grid.s.back();
  const std::size_t stages = grid.s.size() - 1;
  BandConstants consts;
  consts.k = cb.k;
  consts.C_L = calibrate_lepski(cb, r, R);

  // cap members: for each grid point, the hardest in-ball density (cap
  // coefficient at the finest level visible to the roughest stage)
  int j_tree = std::max(RateTable::j_star(r, cb.n), b.j0 + 1);
  struct Member {
    DensityModel model;
    std::size_t i0;  // grid index of its smoothness
    std::vector<detail::GridRep> reps;
  };
  std::vector<Member> cap_members;
  for (std::size_t i = 0; i < grid.s.size(); ++i) {
    for (int l = b.j0; l < j_tree; ++l) {
      DensityModel m;
      if (detail::try_cap_bump(b, cb.B, grid.s[i], l, m)) {
        cap_members.push_back({std::move(m), i, {}});
        break;  // one per grid point is enough, coarsest level has largest dip
      }
    }
  }
  {
    Member uni{make_uniform(b), stages, {}};
    cap_members.push_back(std::move(uni));
  }
  for (std::size_t i = 0; i < cap_members.size(); ++i)
    cap_members[i].reps = detail::simulate_grid(cb, cap_members[i].model, grid, consts,
                                                detail::member_salt(cb.seed, 0xD0 + i));

  // false fires: stages testing a ball the member belongs to must stay quiet
  const double fire_tol = 0.01;
  consts.L = detail::dyadic_smallest(
      1.0, 0.125, 1e6,
      [&](double c) {
        for (const auto& mem : cap_members) {
          int bad = 0;
          for (const auto& rr : mem.reps)
            if (detail::first_fire(rr, c) < std::min(mem.i0, rr.stat.size())) ++bad;
          if (bad > fire_tol * cb.reps) return false;
        }
        return true;
      },
      "L (grid-stage false fires)");

  // selection power: a separated member at stage i0 should select exactly
  // s_i0.  The ball radius caps how far a valid density can stand from the
  // next ball, so some stages run out of instances as the scale grows; those
  // stages drop out of the constraint (their separated set is empty) and the
  // search is capped at the largest scale where any stage still has one.
  // The target sits below the power ceiling at the feasibility cap, else
  // replication noise in the calibration itself makes the search flaky.
  const double select_target = 0.95;
  auto select_rate = [&](std::size_t i0, double c) {
    DensityModel m;
    if (!detail::try_grid_separated(b, grid, cb.B, i0, c * RateTable::rate(grid.s[i0], cb.n),
                                    cb.n, m))
      return -1.0;
    auto reps = detail::simulate_grid(cb, m, grid, consts, detail::member_salt(cb.seed, 0xE0 + i0));
    int ok = 0;
    for (const auto& rr : reps)
      if (detail::first_fire(rr, consts.L) == i0) ++ok;
    return static_cast<double>(ok) / cb.reps;
  };
  auto any_feasible = [&](double c) {
    DensityModel m;
    for (std::size_t i0 = 0; i0 + 1 < grid.s.size(); ++i0)
      if (detail::try_grid_separated(b, grid, cb.B, i0,
                                     c * RateTable::rate(grid.s[i0], cb.n), cb.n, m))
        return true;
    return false;
  };
  auto select_ok = [&](double c) {
    int feasible = 0;
    for (std::size_t i0 = 0; i0 + 1 < grid.s.size(); ++i0) {
      double p = select_rate(i0, c);
      if (p < 0.0) continue;
      ++feasible;
      if (p < select_target) return false;
    }
    return feasible > 0;
  };
  {
    const double step = 0.125;
    double c_cap = step;
    while (c_cap < 64.0 && any_feasible(c_cap + step)) c_cap += step;
    if (!select_ok(c_cap))
      throw GuardError("calibration target unreachable for L0 (grid selection power)");
    double lo = 0.0, hi = c_cap;  // invariant: hi passes, lo fails (or is 0)
    while (hi - lo > step + 1e-9) {
      double mid = lo + std::floor((hi - lo) / (2.0 * step)) * step;
      if (mid <= lo) break;
      if (select_ok(mid))
        hi = mid;
      else
        lo = mid;
    }
    consts.L0 = hi;
  }

  // coverage suite: separated members at the calibrated scale + cap member at
  // R + uniform
  std::vector<Member> cover;
  for (std::size_t i0 = 0; i0 + 1 < grid.s.size(); ++i0) {
    DensityModel m;
    if (detail::try_grid_separated(b, grid, cb.B, i0,
                                   consts.L0 * RateTable::rate(grid.s[i0], cb.n), cb.n, m)) {
      Member mem{std::move(m), i0, {}};
      mem.reps = detail::simulate_grid(cb, mem.model, grid, consts,
                                       detail::member_salt(cb.seed, 0xE0 + i0));
      cover.push_back(std::move(mem));
    }
  }
  for (auto& mem : cap_members)
    if (mem.i0 == stages) cover.push_back(mem);

  const double cover_target = 1.0 - 0.7 * cb.alpha;
  consts.M = detail::dyadic_smallest(
      1.0, 0.125, 1e6,
      [&](double c) {
        for (const auto& mem : cover) {
          int covered = 0;
          for (const auto& rr : mem.reps) {
            std::size_t fire = detail::first_fire(rr, consts.L);
            double s_hat = fire < stages ? grid.s[fire] : R;
            if (rr.sup_err <= c * RateTable::rate(s_hat, cb.n)) ++covered;
          }
          if (covered < cover_target * cb.reps) return false;
        }
        return true;
      },
      "M (grid coverage)");
  return consts;
}

}  // namespace adaband

#endif
