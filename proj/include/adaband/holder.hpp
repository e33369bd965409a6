#ifndef ADABAND_HOLDER_HPP
#define ADABAND_HOLDER_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adaband/multires.hpp"

namespace adaband {

// Smoothness ball parameters.  Membership of a coefficient tree:
// max(sup_k |alpha_k|, sup_{l,k} 2^{l(s+1/2)} |beta_lk|) <= B.
struct HolderBall {
  double s = 0.0;
  double B = 0.0;

  HolderBall(double s_, double B_) : s(s_), B(B_) {
    if (!(s_ > 0.0)) throw std::invalid_argument("smoothness s must be positive");
    if (!(B_ >= 1.0)) throw std::invalid_argument("radius B must be >= 1");
  }
};

// Coefficient-form smoothness norm at exponent s.
inline double holder_norm(const CoeffTree& c, double s) {
  double m = 0.0;
  for (double a : c.alpha) m = std::max(m, std::fabs(a));
  for (int l = c.j0; l < c.j_max; ++l) {
    double w = std::exp2(l * (s + 0.5));
    for (double v : c.level(l)) m = std::max(m, w * std::fabs(v));
  }
  return m;
}

// Entrywise clip onto the ball: |alpha_k| <= B, |beta_lk| <= B 2^{-l(s+1/2)}.
// This is the sup-norm-optimal projection level by level in coefficient space.
inline CoeffTree project_to_ball(const CoeffTree& c, const HolderBall& ball) {
  CoeffTree out = c;
  for (double& a : out.alpha) a = std::clamp(a, -ball.B, ball.B);
  for (int l = out.j0; l < out.j_max; ++l) {
    double cap = ball.B * std::exp2(-l * (ball.s + 0.5));
    for (double& v : out.level(l)) v = std::clamp(v, -cap, cap);
  }
  return out;
}

// Sandwich around the sup-norm distance from f (given by tree c) to the ball.
//   lower: best single-coefficient witness, max_{l,k} 2^{l/2}(|beta_lk| - cap_l).
//          This is the separation statistic the band procedures use.  When
//          the excess coefficients have disjoint supports (every bump
//          instance built here), the clipping residual peaks at the witness
//          and lower <= upper; for arbitrary trees overlapping residuals can
//          interfere, so it is a statistic, not a certified distance bound.
//   upper: sup norm of the synthesized clipping residual (the clipped tree is
//          a member of the ball, so its distance bounds the infimum).
struct SeparationEstimate {
  double lower = 0.0;
  double upper = 0.0;
  int witness_level = -1;  // level attaining the lower bound, -1 if slack zero
};

inline SeparationEstimate separation_from_ball(const CoeffTree& c, const HolderBall& ball,
                                               const WaveletBasis& b, int q) {
  SeparationEstimate est;
  for (int l = c.j0; l < c.j_max; ++l) {
    double cap = ball.B * std::exp2(-l * (ball.s + 0.5));
    double w = std::exp2(0.5 * l);
    for (double v : c.level(l)) {
      double excess = w * (std::fabs(v) - cap);
      if (excess > est.lower) {
        est.lower = excess;
        est.witness_level = l;
      }
    }
  }
  if (est.lower < 0.0) est.lower = 0.0;
  CoeffTree residual = tree_sub(c, project_to_ball(c, ball));
  est.upper = sup_norm(synthesize(residual, b, q));
  return est;
}

// Membership in the two-sided bias class: for every level l in [l_lo, l_hi],
// the tail of the expansion above l must satisfy
//   eps 2^{-l s} <= || f - (partial sum below l) ||_inf <= B 2^{-l s}.
// The tree must hold the exact coefficients of f (finite expansion).
inline bool in_class_bar_sigma(const CoeffTree& exact, double eps, const HolderBall& ball,
                               int l_lo, int l_hi, const WaveletBasis& b, int q) {
  if (l_lo < exact.j0 || l_hi < l_lo)
    throw std::invalid_argument("bar-sigma level window out of range");
  for (int l = l_lo; l <= std::min(l_hi, exact.j_max); ++l) {
    CoeffTree tail(exact.j0, exact.j_max);
    for (int lev = l; lev < exact.j_max; ++lev) tail.level(lev) = exact.level(lev);
    double t = sup_norm(synthesize(tail, b, q));
    double lo = eps * std::exp2(-l * ball.s);
    double hi = ball.B * std::exp2(-l * ball.s);
    if (t < lo || t > hi) return false;
  }
  // Window levels past the finite expansion have zero tail and fail the lower
  // inequality; the loop clamps at j_max where the tail is already empty.
  if (l_hi > exact.j_max && eps > 0.0) return false;
  return true;
}

}  // namespace adaband

#endif
