#ifndef ADABAND_MODELS_HPP
#define ADABAND_MODELS_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adaband/multires.hpp"
#include "adaband/rng.hpp"

namespace adaband {

using Sample = std::vector<double>;

// Numerical guard violations (nonnegativity, support clashes) are a distinct
// failure class so the CLI can map them to their own exit code.
struct GuardError : std::runtime_error {
  explicit GuardError(const std::string& msg) : std::runtime_error(msg) {}
};

// Density on [0,1] given by a finite periodized expansion around the uniform
// density.  exact_coeffs holds the true coefficients, bound a certified sup
// bound used as the rejection envelope.
struct DensityModel {
  enum class Kind { uniform, bump, two_bump, random_series };

  Kind kind = Kind::uniform;
  std::string name = "uniform";
  const WaveletBasis* basis = nullptr;
  CoeffTree exact_coeffs;
  double bound = 1.0;

  double operator()(double x) const { return synth_point(exact_coeffs, *basis, x); }
};

namespace detail {

// Tree holding only the uniform density: alpha_k = 2^{-j0/2}, no details.
inline CoeffTree uniform_tree(const WaveletBasis& b, int j_max) {
  CoeffTree c(b.j0, j_max);
  double a = std::exp2(-0.5 * b.j0);
  for (double& v : c.alpha) v = a;
  return c;
}

// Support arc of the periodized psi_{l,k} as [start, start + len) mod 1.
inline std::pair<double, double> psi_support(const WaveletBasis& b, int l, int k) {
  double start = std::ldexp(static_cast<double>(k), -l);
  double len = std::ldexp(static_cast<double>(b.support_len), -l);
  return {start, len};
}

inline bool arcs_overlap(std::pair<double, double> a, std::pair<double, double> c) {
  if (a.second + c.second >= 1.0) return true;
  double d = c.first - a.first;
  d -= std::floor(d);
  // c starts inside a, or a starts inside c
  return d < a.second || (1.0 - d) < c.second;
}

}  // namespace detail

inline DensityModel make_uniform(const WaveletBasis& b) {
  DensityModel m;
  m.kind = DensityModel::Kind::uniform;
  m.name = "uniform";
  m.basis = &b;
  m.exact_coeffs = detail::uniform_tree(b, b.j0);
  m.bound = 1.0;
  return m;
}

// 1 + eps 2^{-j(r+1/2)} psi_{jm}.  The peak perturbation is eps 2^{-jr} max|psi|,
// so nonnegativity needs eps <= 2^{jr} / max|psi|.
inline DensityModel make_bump(const WaveletBasis& b, double eps, double r, int j, int m) {
  if (j < b.j0) throw std::invalid_argument("bump level below coarsest periodized level");
  if (m < 0 || m >= (1 << j)) throw std::invalid_argument("bump position out of range");
  if (!(eps > 0.0)) throw std::invalid_argument("bump size eps must be positive");
  double dip = eps * std::exp2(-j * r) * b.psi_max;
  if (dip > 1.0)
    throw GuardError("bump of size eps=" + std::to_string(eps) +
                     " at level " + std::to_string(j) +
                     " makes the density negative (max admissible eps ~= " +
                     std::to_string(std::exp2(j * r) / b.psi_max) + ")");
  DensityModel out;
  out.kind = DensityModel::Kind::bump;
  out.name = "bump";
  out.basis = &b;
  out.exact_coeffs = detail::uniform_tree(b, j + 1);
  out.exact_coeffs.level(j)[static_cast<std::size_t>(m)] = eps * std::exp2(-j * (r + 0.5));
  out.bound = 1.0 + dip;
  return out;
}

// 1 + B 2^{-jp(s+1/2)} psi_{jp,m0} + eps 2^{-j(r+1/2)} psi_{j,m}; the two
// perturbations must have disjoint supports so each dip is checked alone.
inline DensityModel make_two_bump(const WaveletBasis& b, double B, double s, int jp, int m0,
                                  double eps, double r, int j, int m) {
  if (jp < b.j0 || j < b.j0) throw std::invalid_argument("bump level below coarsest level");
  if (m0 < 0 || m0 >= (1 << jp) || m < 0 || m >= (1 << j))
    throw std::invalid_argument("bump position out of range");
  if (jp == j && m0 == m) throw std::invalid_argument("both bumps at the same coefficient");
  if (detail::arcs_overlap(detail::psi_support(b, jp, m0), detail::psi_support(b, j, m)))
    throw GuardError("two-bump supports overlap; move the bumps apart");
  double dip1 = B * std::exp2(-jp * s) * b.psi_max;
  double dip2 = eps * std::exp2(-j * r) * b.psi_max;
  if (std::max(dip1, dip2) > 1.0)
    throw GuardError("two-bump density goes negative (dips " + std::to_string(dip1) +
                     ", " + std::to_string(dip2) + ")");
  DensityModel out;
  out.kind = DensityModel::Kind::two_bump;
  out.name = "two_bump";
  out.basis = &b;
  out.exact_coeffs = detail::uniform_tree(b, std::max(jp, j) + 1);
  out.exact_coeffs.level(jp)[static_cast<std::size_t>(m0)] = B * std::exp2(-jp * (s + 0.5));
  out.exact_coeffs.level(j)[static_cast<std::size_t>(m)] += eps * std::exp2(-j * (r + 0.5));
  out.bound = 1.0 + std::max(dip1, dip2);
  return out;
}

// Random series around the uniform density:
//   1 + sum_{l=J}^{l_max} sum_k 2^{-l(s+1/2)} u_lk psi_lk,  u_lk iid U[-B, B].
// At any x at most support_len translates per level are active, so the series
// is bounded by B C_psi sum_{l>=J} 2^{-ls} with C_psi = support_len * max|psi|;
// that sum must stay below 1 for a guaranteed density.
inline DensityModel sample_prior(const WaveletBasis& b, double s, double B, int J, int l_max,
                                 std::uint64_t seed) {
  if (J < b.j0) throw std::invalid_argument("prior start level below coarsest level");
  if (l_max < J) throw std::invalid_argument("prior needs l_max >= J");
  if (!(s > 0.0) || !(B > 0.0)) throw std::invalid_argument("prior needs s > 0 and B > 0");
  double c_psi = static_cast<double>(b.support_len) * b.psi_max;
  double mass = B * c_psi * std::exp2(-J * s) / (1.0 - std::exp2(-s));
  if (mass >= 1.0) {
    int j_min = J;
    while (B * c_psi * std::exp2(-j_min * s) / (1.0 - std::exp2(-s)) >= 1.0) ++j_min;
    throw GuardError("prior start level J=" + std::to_string(J) +
                     " cannot guarantee a nonnegative density; smallest admissible J is " +
                     std::to_string(j_min));
  }
  DensityModel out;
  out.kind = DensityModel::Kind::random_series;
  out.name = "random_series";
  out.basis = &b;
  out.exact_coeffs = detail::uniform_tree(b, l_max + 1);
  Rng rng(seed);
  double series_sup = 0.0;
  for (int l = J; l <= l_max; ++l) {
    double scale = std::exp2(-l * (s + 0.5));
    auto& row = out.exact_coeffs.level(l);
    for (double& v : row) v = scale * rng.uniform(-B, B);
    series_sup += B * c_psi * std::exp2(-l * s);
  }
  out.bound = 1.0 + series_sup;
  return out;
}

// Rejection sampler against the uniform envelope scaled by the model bound.
// Fully deterministic given the seed.
inline Sample draw(const DensityModel& model, int n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample size must be nonnegative");
  Sample xs;
  xs.reserve(static_cast<std::size_t>(n));
  Rng rng(seed);
  while (xs.size() < static_cast<std::size_t>(n)) {
    double x = rng.uniform01();
    double v = rng.uniform01() * model.bound;
    if (v <= model(x)) xs.push_back(x);
  }
  return xs;
}

}  // namespace adaband

#endif
