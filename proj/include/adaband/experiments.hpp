#ifndef ADABAND_EXPERIMENTS_HPP
#define ADABAND_EXPERIMENTS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "adaband/bands.hpp"
#include "adaband/calibrate.hpp"
#include "adaband/config.hpp"
#include "adaband/csv.hpp"
#include "adaband/estimation.hpp"
#include "adaband/models.hpp"
#include "adaband/rng.hpp"
#include "adaband/threads.hpp"

namespace adaband {

// CLI-level overrides that win over config file values.
struct RunOptions {
  bool seed_given = false;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Shared [experiment] block.
struct ExperimentSetup {
  WaveletBasis basis;
  std::string band = "two_class";  // two_class | grid
  int n = 0;
  std::vector<long long> n_list;
  long long reps = 0;
  double alpha = 0.1;
  double B = 2.0;
  double k = 1.0;
  double r = 0.5, s = 1.0;       // two-class pair
  double R = 1.25, zeta = 1.8;   // grid window
  int q = 10;
  std::uint64_t seed = 1;
  int threads = 1;
  bool dishonest = false;
};

namespace detail {

inline void require_kind(const Config::Section& ex, const char* kind) {
  if (ex.has("kind")) {
    std::string k = ex.get_string("kind");
    if (k != kind)
      throw ConfigError(ex.place("kind") + ": config is for experiment '" + k +
                        "' but the '" + kind + "' experiment was requested");
  }
}

}  // namespace detail

struct Stat {
  double mean = 0.0;
  double se = 0.0;
};

// mean and (sample sd)/sqrt(count)
inline Stat summarize(const std::vector<double>& v) {
  Stat st;
  if (v.empty()) return st;
  double acc = 0.0;
  for (double x : v) acc += x;
  st.mean = acc / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - st.mean) * (x - st.mean);
    st.se = std::sqrt(ss / static_cast<double>(v.size() - 1) /
                      static_cast<double>(v.size()));
  }
  return st;
}

inline ExperimentSetup read_setup(const Config& cfg, const RunOptions& opt, const char* kind) {
  const Config::Section& ex = cfg.require("experiment");
  detail::require_kind(ex, kind);
  ExperimentSetup su;
  int order = static_cast<int>(ex.get_int("order", 4));
  int depth = static_cast<int>(ex.get_int("depth", 12));
  su.basis = build_basis(order, depth);
  su.band = ex.get_string("band", "two_class");
  if (su.band != "two_class" && su.band != "grid")
    throw ConfigError(ex.place("band") + ": band must be two_class or grid, got '" + su.band +
                      "'");
  if (ex.has("n_list"))
    su.n_list = ex.get_int_list("n_list");
  if (ex.has("n")) su.n = static_cast<int>(ex.get_int("n"));
  su.reps = ex.get_int("reps", 400);
  if (su.reps < 1) throw ConfigError(ex.place("reps") + ": reps must be >= 1");
  su.alpha = ex.get_double("alpha", 0.1);
  if (!(su.alpha > 0.0 && su.alpha < 1.0))
    throw ConfigError(ex.place("alpha") + ": alpha must lie strictly inside (0,1)");
  su.B = ex.get_double("B", 2.0);
  su.k = ex.get_double("k", 1.0);
  su.r = ex.get_double("r", 0.5);
  su.s = ex.get_double("s", 1.0);
  su.R = ex.get_double("R", 1.25);
  su.zeta = ex.get_double("zeta", 1.8);
  su.q = static_cast<int>(ex.get_int("q", 10));
  su.seed = ex.get_u64("seed", 1);
  su.dishonest = ex.get_bool("dishonest", false);
  if (opt.seed_given) su.seed = opt.seed;
  su.threads = opt.threads;
  for (long long n : su.n_list)
    if (n < 2) throw ConfigError(ex.place("n_list") + ": every n must be >= 2");
  if (ex.has("n") && su.n < 2) throw ConfigError(ex.place("n") + ": n must be >= 2");
  return su;
}

// Constants either given explicitly in [constants] or produced by the
// calibration routine with the [calibration] block's budget.  Calibration
// uses its own seed domain, so evaluation reps never reuse its draws.
inline BandConstants obtain_constants(const Config& cfg, const ExperimentSetup& su) {
  if (const Config::Section* cs = cfg.find("constants")) {
    BandConstants bc;
    bc.C_L = cs->get_double("C_L");
    bc.k = su.k;
    bc.kappa = cs->get_double("kappa", 1.0);
    bc.L = cs->get_double("L");
    bc.L_prime = cs->get_double("L_prime", 1.0);
    bc.L0 = cs->get_double("L0", 1.0);
    bc.M = cs->get_double("M", 1.0);
    return bc;
  }
  CalibrationSetup cb;
  cb.basis = &su.basis;
  cb.B = su.B;
  cb.alpha = su.alpha;
  cb.k = su.k;
  cb.threads = su.threads;
  cb.q = su.q;
  cb.seed = su.seed;
  if (const Config::Section* cal = cfg.find("calibration")) {
    cb.n = static_cast<int>(cal->get_int("n", 1 << 12));
    cb.reps = static_cast<int>(cal->get_int("reps", 400));
    cb.seed = cal->get_u64("seed", su.seed);
  } else {
    cb.n = 1 << 12;
    cb.reps = 400;
  }
  if (su.band == "grid") return calibrate_grid(cb, build_grid(su.r, su.R, su.zeta, cb.n));
  return calibrate_two_class(cb, su.r, su.s);
}

// One evaluation density plus what the band is expected to do on it.
struct ModelSpec {
  DensityModel model;
  std::string name;
  int target_branch = -1;  // two-class: 1 expect rough width, 0 smooth, -1 unspecified
  double target_s = std::numeric_limits<double>::quiet_NaN();  // grid: expected s_hat
  double rate_s = std::numeric_limits<double>::quiet_NaN();    // diameter reference rate
};

namespace detail {

inline int centered_position(const WaveletBasis& b, int j) {
  int m = ((1 << j) - b.support_len) / 2;
  return m < 0 ? 0 : m;
}

inline DensityModel make_separated_bump(const WaveletBasis& b, double B, double r, double s,
                                        double sep, int level) {
  double eps = (sep + B * std::exp2(-level * s)) * std::exp2(level * r);
  if (eps > B)
    throw GuardError("separated bump needs eps = " + std::to_string(eps) +
                     " > B; the requested separation does not fit inside the rough ball");
  return make_bump(b, eps, r, level, centered_position(b, level));
}

}  // namespace detail

// [model] sections -> evaluation suite at sample size n.  Kinds:
//   uniform | bump | cap_bump | separated_bump | grid_separated | two_bump |
//   random_series
inline std::vector<ModelSpec> read_models(const Config& cfg, const ExperimentSetup& su,
                                          const BandConstants& consts, int n) {
  RateTable rates{su.B, su.k};
  std::vector<ModelSpec> out;
  std::set<std::string> names;
  auto sections = cfg.all("model");
  if (sections.empty()) throw ConfigError("this experiment needs at least one [model] section");

  GridS grid;
  if (su.band == "grid") grid = build_grid(su.r, su.R, su.zeta, n);

  for (const Config::Section* msp : sections) {
    const Config::Section& m = *msp;
    std::string kind = m.get_string("kind");
    ModelSpec spec;
    if (kind == "uniform") {
      spec.model = make_uniform(su.basis);
      spec.name = "uniform";
      spec.target_branch = 0;
      spec.target_s = su.band == "grid" ? su.R : su.s;
      spec.rate_s = spec.target_s;
    } else if (kind == "bump") {
      double eps = m.get_double("eps");
      double r = m.get_double("r", su.r);
      int j = static_cast<int>(m.get_int("j"));
      int mm = static_cast<int>(m.get_int("m", detail::centered_position(su.basis, j)));
      spec.model = make_bump(su.basis, eps, r, j, mm);
      spec.name = "bump_j" + std::to_string(j);
      spec.rate_s = r;
    } else if (kind == "cap_bump") {
      // coefficient exactly on the ball cap: hardest in-ball member
      double s = m.get_double("s", su.band == "grid" ? su.R : su.s);
      int j = static_cast<int>(m.get_int("j"));
      int mm = static_cast<int>(m.get_int("m", detail::centered_position(su.basis, j)));
      spec.model = make_bump(su.basis, su.B, s, j, mm);
      spec.name = "cap_j" + std::to_string(j);
      spec.target_branch = 0;
      spec.target_s = su.band == "grid" ? su.R : su.s;
      spec.rate_s = s;
    } else if (kind == "separated_bump") {
      int j_star = std::max(RateTable::j_star(su.r, n), su.basis.j0 + 1);
      double scale = m.get_double("sep_scale", consts.L_prime);
      double sep = m.has("sep") ? m.get_double("sep") : scale * rates.sigma(n, j_star);
      int level = static_cast<int>(m.get_int("j", std::max(j_star - 1, su.basis.j0)));
      spec.model = detail::make_separated_bump(su.basis, su.B, su.r, su.s, sep, level);
      spec.name = "separated";
      spec.target_branch = 1;
      spec.target_s = su.r;
      spec.rate_s = su.r;
    } else if (kind == "grid_separated") {
      if (su.band != "grid")
        throw ConfigError(m.place("kind") + ": grid_separated model needs band = grid");
      std::size_t i0 = static_cast<std::size_t>(m.get_int("i0"));
      if (i0 + 1 >= grid.s.size())
        throw ConfigError(m.place("i0") + ": i0 must index a grid point below the smoothest");
      double scale = m.get_double("sep_scale", consts.L0);
      double sep =
          m.has("sep") ? m.get_double("sep") : scale * RateTable::rate(grid.s[i0], n);
      if (m.has("j")) {
        int level = static_cast<int>(m.get_int("j"));
        spec.model = detail::make_separated_bump(su.basis, su.B, grid.s[i0], grid.s[i0 + 1],
                                                 sep, level);
      } else if (!detail::try_grid_separated(su.basis, grid, su.B, i0, sep, n, spec.model)) {
        throw GuardError("no valid density separated by " + std::to_string(sep) +
                         " at grid stage " + std::to_string(i0));
      }
      spec.name = "separated_s" + std::to_string(i0);
      spec.target_s = grid.s[i0];
      spec.rate_s = grid.s[i0];
    } else if (kind == "two_bump") {
      double eps = m.get_double("eps");
      double r = m.get_double("r", su.r);
      int jp = static_cast<int>(m.get_int("jp"));
      int m0 = static_cast<int>(m.get_int("m0"));
      int j = static_cast<int>(m.get_int("j"));
      int mm = static_cast<int>(m.get_int("m"));
      spec.model = make_two_bump(su.basis, su.B, su.s, jp, m0, eps, r, j, mm);
      spec.name = "two_bump";
      spec.rate_s = r;
    } else if (kind == "random_series") {
      double s = m.get_double("s", su.s);
      double Bp = m.get_double("B", su.B);
      int J = static_cast<int>(m.get_int("J"));
      int l_max = static_cast<int>(m.get_int("l_max", J + 2));
      std::uint64_t ds = m.get_u64("draw_seed", derive_seed(su.seed, SeedDomain::model, 0));
      spec.model = sample_prior(su.basis, s, Bp, J, l_max, ds);
      spec.name = "prior_draw";
      spec.rate_s = s;
    } else {
      throw ConfigError(m.place("kind") + ": unknown model kind '" + kind + "'");
    }
    if (m.has("name")) spec.name = m.get_string("name");
    if (m.has("target_branch")) {
      std::string t = m.get_string("target_branch");
      if (t == "rough")
        spec.target_branch = 1;
      else if (t == "smooth")
        spec.target_branch = 0;
      else
        throw ConfigError(m.place("target_branch") + ": expected rough or smooth");
    }
    if (m.has("target_s")) spec.target_s = m.get_double("target_s");
    if (m.has("rate_s")) spec.rate_s = m.get_double("rate_s");
    if (!names.insert(spec.name).second)
      throw ConfigError(m.place("kind") + ": duplicate model name '" + spec.name +
                        "'; set distinct name = ... keys");
    out.push_back(std::move(spec));
  }
  return out;
}

namespace detail {

struct BandRepStats {
  std::vector<double> covered, width, rough, correct, s_hat, j_hat;
};

// One Monte Carlo pass of the configured band over one model.
inline BandRepStats band_reps(const ExperimentSetup& su, const BandConstants& consts,
                              const ModelSpec& ms, int n, long long reps,
                              std::uint64_t salt) {
  const WaveletBasis& b = su.basis;
  GridFunction truth = synthesize(ms.model.exact_coeffs, b, su.q);
  GridS grid;
  if (su.band == "grid") grid = build_grid(su.r, su.R, su.zeta, n);

  int count = static_cast<int>(reps);
  auto slots = static_cast<std::size_t>(reps);
  BandRepStats st;
  st.covered.resize(slots);
  st.width.resize(slots);
  st.rough.resize(slots);
  st.correct.resize(slots);
  st.s_hat.resize(slots);
  st.j_hat.resize(slots);
  parallel_for(count, su.threads, [&](int rep) {
    Sample xs = draw(ms.model, n, derive_seed(salt, SeedDomain::evaluation,
                                              static_cast<std::uint64_t>(rep)));
    BandResult band =
        su.band == "grid"
            ? grid_band(xs, grid, su.B, su.alpha, b, consts, su.q, su.dishonest)
            : two_class_band(xs, su.r, su.s, su.B, su.alpha, b, consts, su.q);
    auto i = static_cast<std::size_t>(rep);
    st.covered[i] = band.covers(truth) ? 1.0 : 0.0;
    st.width[i] = band.half_width;
    bool rough = std::fabs(band.selected_s - su.r) < 1e-12;
    st.rough[i] = rough ? 1.0 : 0.0;
    st.s_hat[i] = band.selected_s;
    st.j_hat[i] = band.j_hat;
    if (su.band == "grid") {
      st.correct[i] = !std::isnan(ms.target_s) && std::fabs(band.selected_s - ms.target_s) < 1e-9
                          ? 1.0
                          : 0.0;
    } else if (ms.target_branch >= 0) {
      st.correct[i] = (ms.target_branch == 1) == rough ? 1.0 : 0.0;
    } else {
      st.correct[i] = 0.0;
    }
  });
  return st;
}

inline void push_row(std::vector<ResultRow>& rows, const std::string& experiment, long long n,
                     const std::string& model, const std::string& metric, Stat st,
                     long long reps, std::uint64_t seed) {
  rows.push_back(ResultRow{experiment, n, model, metric, st.mean, st.se, reps, seed});
}

inline std::uint64_t model_salt(std::uint64_t seed, std::size_t model_idx, long long n) {
  return mix64(seed ^ (0x6a09e667f3bcc909ull * (model_idx + 1)) ^
               (0xbb67ae8584caa73bull * static_cast<std::uint64_t>(n)));
}

}  // namespace detail

// Empirical coverage of the configured band over each [model] at fixed n.
inline std::vector<ResultRow> run_coverage(const Config& cfg, const RunOptions& opt) {
  ExperimentSetup su = read_setup(cfg, opt, "coverage");
  if (su.n < 2) throw ConfigError("coverage needs an [experiment] n");
  BandConstants consts = obtain_constants(cfg, su);
  std::vector<ModelSpec> models = read_models(cfg, su, consts, su.n);
  cfg.check_all_used();

  std::vector<ResultRow> rows;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const ModelSpec& ms = models[mi];
    auto st = detail::band_reps(su, consts, ms, su.n, su.reps,
                                detail::model_salt(su.seed, mi, su.n));
    detail::push_row(rows, "coverage", su.n, ms.name, "coverage", summarize(st.covered), su.reps,
                     su.seed);
    detail::push_row(rows, "coverage", su.n, ms.name, "width_mean", summarize(st.width), su.reps,
                     su.seed);
    if (su.band == "two_class") {
      detail::push_row(rows, "coverage", su.n, ms.name, "branch_rough_rate", summarize(st.rough),
                       su.reps, su.seed);
      if (ms.target_branch >= 0)
        detail::push_row(rows, "coverage", su.n, ms.name, "branch_correct_rate",
                         summarize(st.correct), su.reps, su.seed);
    } else {
      detail::push_row(rows, "coverage", su.n, ms.name, "s_hat_mean", summarize(st.s_hat),
                       su.reps, su.seed);
      if (!std::isnan(ms.target_s))
        detail::push_row(rows, "coverage", su.n, ms.name, "select_correct_rate",
                         summarize(st.correct), su.reps, su.seed);
    }
    detail::push_row(rows, "coverage", su.n, ms.name, "j_hat_mean", summarize(st.j_hat), su.reps,
                     su.seed);
  }
  return rows;
}

// Expected diameter across n_list, with the ratio to the reference rate
// r_n(rate_s); a bounded ratio is the adaptivity statement at desk scale.
inline std::vector<ResultRow> run_diameter(const Config& cfg, const RunOptions& opt) {
  ExperimentSetup su = read_setup(cfg, opt, "diameter");
  if (su.n_list.empty()) throw ConfigError("diameter needs an [experiment] n_list");
  BandConstants consts = obtain_constants(cfg, su);
  // consume model keys once up front so config errors precede the long loop
  (void)read_models(cfg, su, consts, static_cast<int>(su.n_list.front()));
  cfg.check_all_used();

  std::vector<ResultRow> rows;
  for (long long n : su.n_list) {
    std::vector<ModelSpec> models = read_models(cfg, su, consts, static_cast<int>(n));
    for (std::size_t mi = 0; mi < models.size(); ++mi) {
      const ModelSpec& ms = models[mi];
      auto st = detail::band_reps(su, consts, ms, static_cast<int>(n), su.reps,
                                  detail::model_salt(su.seed, mi, n));
      Stat width = summarize(st.width);
      detail::push_row(rows, "diameter", n, ms.name, "width_mean", width, su.reps, su.seed);
      if (!std::isnan(ms.rate_s)) {
        double ref = RateTable::rate(ms.rate_s, static_cast<int>(n));
        detail::push_row(rows, "diameter", n, ms.name, "width_over_rate",
                         Stat{width.mean / ref, width.se / ref}, su.reps, su.seed);
      }
      if (su.band == "two_class")
        detail::push_row(rows, "diameter", n, ms.name, "branch_rough_rate", summarize(st.rough),
                         su.reps, su.seed);
      detail::push_row(rows, "diameter", n, ms.name, "covered", summarize(st.covered), su.reps,
                       su.seed);
    }
  }
  return rows;
}

// Sup-norm risk of the Lepski estimator on a near-extremal bump whose
// amplitude tracks amp_factor * r_n(s); the log-log slope against n/log n
// estimates the adaptive rate exponent -s/(2s+1).
inline std::vector<ResultRow> run_risk_slope(const Config& cfg, const RunOptions& opt) {
  ExperimentSetup su = read_setup(cfg, opt, "risk_slope");
  if (su.n_list.size() < 2) throw ConfigError("risk_slope needs n_list with at least two sizes");
  const Config::Section& ex = cfg.require("experiment");
  double s = ex.get_double("slope_s", su.s);
  double amp = ex.get_double("amp_factor", 2.0);
  double r_lo = ex.get_double("r_lo", su.r);
  double r_hi = ex.get_double("r_hi", 1.5);
  if (!(r_lo <= s && s <= r_hi))
    throw ConfigError(ex.place("slope_s") + ": slope_s must lie inside [r_lo, r_hi]");
  CalibrationSetup cb;
  cb.basis = &su.basis;
  cb.B = su.B;
  cb.k = su.k;
  cb.threads = su.threads;
  cb.q = su.q;
  cb.seed = su.seed;
  if (const Config::Section* cal = cfg.find("calibration")) {
    cb.n = static_cast<int>(cal->get_int("n", 1 << 12));
    cb.reps = static_cast<int>(cal->get_int("reps", 400));
    cb.seed = cal->get_u64("seed", su.seed);
  }
  double C_L = cfg.find("constants") ? cfg.require("constants").get_double("C_L")
                                     : calibrate_lepski(cb, r_lo, r_hi);
  cfg.check_all_used();

  RateTable rates{su.B, su.k};
  const WaveletBasis& b = su.basis;
  std::vector<ResultRow> rows;
  std::vector<double> xs_log, ys_log, y_se_rel;
  for (std::size_t ni = 0; ni < su.n_list.size(); ++ni) {
    int n = static_cast<int>(su.n_list[ni]);
    int j_bump = std::max(RateTable::j_star(s, n) - 1, b.j0);
    double eps = amp * RateTable::rate(s, n) * std::exp2(j_bump * s);
    if (eps > su.B)
      throw GuardError("risk_slope bump leaves the ball at n = " + std::to_string(n) +
                       " (eps = " + std::to_string(eps) + " > B); lower amp_factor");
    DensityModel model =
        make_bump(b, eps, s, j_bump, detail::centered_position(b, j_bump));
    GridFunction truth = synthesize(model.exact_coeffs, b, su.q);
    int j_cap = std::max({RateTable::j_star(r_lo, n), b.j0 + 1, j_bump + 1});

    std::vector<double> sup_err(static_cast<std::size_t>(su.reps));
    parallel_for(static_cast<int>(su.reps), su.threads, [&](int rep) {
      Sample xs = draw(model, n, derive_seed(detail::model_salt(su.seed, ni, n),
                                             SeedDomain::evaluation,
                                             static_cast<std::uint64_t>(rep)));
      EstimatorState st = empirical_coeffs(xs, b, j_cap);
      LepskiResult lep = lepski_estimator(st, r_lo, r_hi, rates, C_L, su.q);
      sup_err[static_cast<std::size_t>(rep)] = sup_dist(lep.estimate, truth);
    });
    Stat risk = summarize(sup_err);
    detail::push_row(rows, "risk_slope", n, model.name + "_j" + std::to_string(j_bump),
                     "sup_risk", risk, su.reps, su.seed);
    xs_log.push_back(std::log(static_cast<double>(n) / std::log(static_cast<double>(n))));
    ys_log.push_back(std::log(risk.mean));
    y_se_rel.push_back(risk.se / risk.mean);
  }

  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < xs_log.size(); ++i) {
    xbar += xs_log[i];
    ybar += ys_log[i];
  }
  xbar /= static_cast<double>(xs_log.size());
  ybar /= static_cast<double>(xs_log.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs_log.size(); ++i) {
    sxx += (xs_log[i] - xbar) * (xs_log[i] - xbar);
    sxy += (xs_log[i] - xbar) * (ys_log[i] - ybar);
  }
  double slope = sxy / sxx;
  double se2 = 0.0;  // delta-method propagation of the per-point SEs
  for (std::size_t i = 0; i < xs_log.size(); ++i) {
    double w = (xs_log[i] - xbar) / sxx;
    se2 += w * w * y_se_rel[i] * y_se_rel[i];
  }
  rows.push_back(ResultRow{"risk_slope", 0, "slope_fit", "slope", slope, std::sqrt(se2),
                           su.reps, su.seed});
  rows.push_back(ResultRow{"risk_slope", 0, "slope_fit", "slope_target", -s / (2.0 * s + 1.0),
                           0.0, su.reps, su.seed});
  return rows;
}

// Frequency that a prior draw concentrates inside the shrinking sup-norm
// ball, against the sieve bound eps^{2^j}.
inline std::vector<ResultRow> run_prior_concentration(const Config& cfg, const RunOptions& opt) {
  ExperimentSetup su = read_setup(cfg, opt, "prior_concentration");
  const Config::Section& ex = cfg.require("experiment");
  double s = ex.get_double("prior_s", 2.0);
  double B = ex.get_double("prior_B", 1.0);
  int tail_levels = static_cast<int>(ex.get_int("tail_levels", 1));
  std::vector<long long> j_list = ex.get_int_list("j_list");
  std::vector<double> eps_list = ex.get_double_list("eps_list");
  cfg.check_all_used();

  const WaveletBasis& b = su.basis;
  std::string model_name =
      "prior(s=" + detail::fmt10(s) + ";B=" + detail::fmt10(B) + ")";
  std::vector<ResultRow> rows;
  for (std::size_t ji = 0; ji < j_list.size(); ++ji) {
    int j = static_cast<int>(j_list[ji]);
    for (double eps : eps_list) {
      if (!(eps > 0.0 && eps < 1.0))
        throw ConfigError("prior_concentration eps values must lie in (0,1)");
      double thr = eps * B * std::exp2(-j * s);
      std::vector<double> hit(static_cast<std::size_t>(su.reps));
      parallel_for(static_cast<int>(su.reps), su.threads, [&](int rep) {
        DensityModel u = sample_prior(b, s, B, j, j + tail_levels,
                                      derive_seed(detail::model_salt(su.seed, ji, j),
                                                  SeedDomain::model,
                                                  static_cast<std::uint64_t>(rep)));
        GridFunction f = synthesize(u.exact_coeffs, b, su.q);
        double tail_sup = 0.0;
        for (double v : f.values) tail_sup = std::max(tail_sup, std::fabs(v - 1.0));
        hit[static_cast<std::size_t>(rep)] = tail_sup < thr ? 1.0 : 0.0;
      });
      std::string tag = "(j=" + std::to_string(j) + ";eps=" + detail::fmt10(eps) + ")";
      detail::push_row(rows, "prior_concentration", su.n, model_name, "frequency" + tag,
                       summarize(hit), su.reps, su.seed);
      detail::push_row(rows, "prior_concentration", su.n, model_name, "bound" + tag,
                       Stat{std::pow(eps, std::exp2(j)), 0.0}, su.reps, su.seed);
    }
  }
  return rows;
}

// Band-to-test risk sweep over the alternative bump level.
inline std::vector<ResultRow> run_testing_risk(const Config& cfg, const RunOptions& opt) {
  ExperimentSetup su = read_setup(cfg, opt, "testing_risk");
  if (su.n < 2) throw ConfigError("testing_risk needs an [experiment] n");
  const Config::Section& ex = cfg.require("experiment");
  std::vector<long long> j_list = ex.get_int_list("j_list");
  std::vector<double> eps_list = ex.get_double_list("eps_list");
  if (eps_list.size() != j_list.size())
    throw ConfigError(ex.place("eps_list") + ": eps_list must match j_list in length");
  int alt_count = static_cast<int>(ex.get_int("alt_count", 16));
  if (alt_count < 1) throw ConfigError(ex.place("alt_count") + ": alt_count must be >= 1");
  for (long long j : j_list)
    if (j + 2 > su.q)
      throw ConfigError(ex.place("j_list") + ": bump level " + std::to_string(j) +
                        " needs render grid q >= " + std::to_string(j + 2));
  BandConstants consts = obtain_constants(cfg, su);
  cfg.check_all_used();

  const WaveletBasis& b = su.basis;
  GridS grid;
  if (su.band == "grid") grid = build_grid(su.r, su.R, su.zeta, su.n);
  BandProcedure proc = [&](const Sample& xs) {
    return su.band == "grid"
               ? grid_band(xs, grid, su.B, su.alpha, b, consts, su.q, su.dishonest)
               : two_class_band(xs, su.r, su.s, su.B, su.alpha, b, consts, su.q);
  };
  DensityModel null_model = make_uniform(b);

  std::vector<ResultRow> rows;
  for (std::size_t ji = 0; ji < j_list.size(); ++ji) {
    int j = static_cast<int>(j_list[ji]);
    double eps = eps_list[ji];
    // translation-symmetric representatives of the 2^j translates
    int total = 1 << j;
    int count = std::min(alt_count, total);
    std::vector<DensityModel> alts;
    for (int t = 0; t < count; ++t) {
      int m = static_cast<int>((static_cast<long long>(t) * total) / count);
      alts.push_back(make_bump(b, eps, su.r, j, m));
    }
    TestingRiskResult res =
        testing_risk(proc, null_model, alts, su.n, static_cast<int>(su.reps),
                     detail::model_salt(su.seed, ji, j), su.threads, su.q);
    std::string model = "alt(j=" + std::to_string(j) + ";eps=" + detail::fmt10(eps) + ")";
    double se1 = std::sqrt(res.type1 * (1.0 - res.type1) / static_cast<double>(su.reps));
    double se2 =
        std::sqrt(res.type2_max * (1.0 - res.type2_max) / static_cast<double>(su.reps));
    detail::push_row(rows, "testing_risk", su.n, model, "type1", Stat{res.type1, se1}, su.reps,
                     su.seed);
    detail::push_row(rows, "testing_risk", su.n, model, "type2_max", Stat{res.type2_max, se2},
                     su.reps, su.seed);
    detail::push_row(rows, "testing_risk", su.n, model, "risk",
                     Stat{res.risk, std::sqrt(se1 * se1 + se2 * se2)}, su.reps, su.seed);
    detail::push_row(rows, "testing_risk", su.n, model, "separation",
                     Stat{eps * std::exp2(-j * su.r) - su.B * std::exp2(-j * su.s), 0.0},
                     su.reps, su.seed);
  }
  return rows;
}

namespace detail {

// Orthonormal mean-zero block family on [0,1): u_m = sqrt(M) h(Mx - m) with
// h = +1 on [0,1/2), -1 on [1/2,1).  Exact pointwise evaluation keeps the
// mixture likelihood ratio free of quadrature error.
inline double block_u(int M, int m, double x) {
  double y = x * M - m;
  if (y < 0.0 || y >= 1.0) return 0.0;
  return (y < 0.5 ? 1.0 : -1.0) * std::sqrt(static_cast<double>(M));
}

}  // namespace detail

// Monte Carlo check of E(Z-1)^2 = ((1+gamma^2)^n - 1)/M for the uniform
// mixture of M orthonormal one-block alternatives, Z evaluated exactly.
inline std::vector<ResultRow> run_chi_square(const Config& cfg, const RunOptions& opt) {
  ExperimentSetup su = read_setup(cfg, opt, "chi_square");
  const Config::Section& ex = cfg.require("experiment");
  std::vector<long long> m_list = ex.get_int_list("m_list");
  std::vector<long long> n_list_local = ex.get_int_list("pair_n_list");
  std::vector<double> gamma_list = ex.get_double_list("gamma_list");
  if (m_list.size() != n_list_local.size() || m_list.size() != gamma_list.size())
    throw ConfigError(ex.place("m_list") +
                      ": m_list, pair_n_list and gamma_list must have equal length");
  cfg.check_all_used();

  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < m_list.size(); ++i) {
    int M = static_cast<int>(m_list[i]);
    int n = static_cast<int>(n_list_local[i]);
    double gamma = gamma_list[i];
    double closed = chi_square_distance(M, n, gamma);

    std::vector<double> vals(static_cast<std::size_t>(su.reps));
    parallel_for(static_cast<int>(su.reps), su.threads, [&](int rep) {
      Rng rng(derive_seed(detail::model_salt(su.seed, i, M), SeedDomain::evaluation,
                          static_cast<std::uint64_t>(rep)));
      // factorized likelihood: product over observations, one factor per
      // alternative; blocks are disjoint so each x touches one m
      std::vector<double> factor(static_cast<std::size_t>(M), 1.0);
      for (int t = 0; t < n; ++t) {
        double x = rng.uniform01();
        int m = std::min(static_cast<int>(x * M), M - 1);
        factor[static_cast<std::size_t>(m)] *= 1.0 + gamma * detail::block_u(M, m, x);
      }
      double z = 0.0;
      for (double f : factor) z += f;
      z /= static_cast<double>(M);
      vals[static_cast<std::size_t>(rep)] = (z - 1.0) * (z - 1.0);
    });
    std::string model = "mix(M=" + std::to_string(M) + ";n=" + std::to_string(n) +
                        ";gamma=" + detail::fmt10(gamma) + ")";
    detail::push_row(rows, "chi_square", n, model, "mc_estimate", summarize(vals), su.reps,
                     su.seed);
    detail::push_row(rows, "chi_square", n, model, "closed_form", Stat{closed, 0.0}, su.reps,
                     su.seed);
  }
  return rows;
}

// Tail of the sup-norm deviation of the level-j linear estimator from its
// mean, against the exponential concentration profile.
inline std::vector<ResultRow> run_concentration_tail(const Config& cfg, const RunOptions& opt) {
  ExperimentSetup su = read_setup(cfg, opt, "concentration_tail");
  if (su.n < 2) throw ConfigError("concentration_tail needs an [experiment] n");
  const Config::Section& ex = cfg.require("experiment");
  int j = static_cast<int>(ex.get_int("j"));
  double C1 = ex.get_double("C1", 1.0);
  double C_admis = ex.get_double("C_admis", 4.0);
  std::vector<double> t_scales =
      ex.has("t_scales") ? ex.get_double_list("t_scales")
                         : std::vector<double>{1.0, 1.15, 1.3, 1.5, 1.75, 2.0, 2.3, 2.6, 3.0};

  DensityModel model = make_uniform(su.basis);
  auto msec = cfg.all("model");
  if (msec.size() > 1)
    throw ConfigError("concentration_tail accepts at most one [model] section");
  if (!msec.empty()) {
    BandConstants none;
    model = read_models(cfg, su, none, su.n).front().model;
  }
  cfg.check_all_used();

  double supf = std::max(model.bound, 1.0);
  double floor_t =
      C1 * std::sqrt(supf * std::exp2(j) * static_cast<double>(j) / static_cast<double>(su.n));
  std::vector<double> t_grid;
  for (double sc : t_scales) t_grid.push_back(sc * floor_t);

  ConcentrationResult res =
      check_concentration(model, j, su.n, static_cast<int>(su.reps), t_grid, C1, C_admis,
                          derive_seed(su.seed, SeedDomain::auxiliary, 0), su.threads, su.q);
  std::vector<ResultRow> rows;
  for (const auto& row : res.rows) {
    std::string tag = "(t=" + detail::fmt10(row.t) + ")";
    double se = std::sqrt(row.freq * (1.0 - row.freq) / static_cast<double>(su.reps));
    detail::push_row(rows, "concentration_tail", su.n, model.name, "deviation_freq" + tag,
                     Stat{row.freq, se}, su.reps, su.seed);
    detail::push_row(rows, "concentration_tail", su.n, model.name,
                     std::string(row.asserted ? "tail_bound" : "tail_unasserted") + tag,
                     Stat{row.bound, 0.0}, su.reps, su.seed);
  }
  rows.push_back(ResultRow{"concentration_tail", su.n, model.name, "C2", res.C2, 0.0, su.reps,
                           su.seed});
  return rows;
}

// Run the calibration for the configured band and emit the constants.
inline std::vector<ResultRow> run_calibrate(const Config& cfg, const RunOptions& opt) {
  ExperimentSetup su = read_setup(cfg, opt, "calibrate");
  if (cfg.find("constants"))
    throw ConfigError("calibrate does not accept a [constants] section");
  BandConstants consts = obtain_constants(cfg, su);
  cfg.check_all_used();

  long long n_cal = 1 << 12;
  if (const Config::Section* cal = cfg.find("calibration"))
    n_cal = cal->get_int("n", 1 << 12);
  std::vector<ResultRow> rows;
  auto put = [&](const char* name, double v) {
    rows.push_back(
        ResultRow{"calibrate", n_cal, su.band, name, v, 0.0, su.reps, su.seed});
  };
  put("C_L", consts.C_L);
  put("L", consts.L);
  if (su.band == "two_class") {
    put("kappa", consts.kappa);
    put("L_prime", consts.L_prime);
  } else {
    put("L0", consts.L0);
    put("M", consts.M);
  }
  put("k", consts.k);
  return rows;
}

}  // namespace adaband

#endif
