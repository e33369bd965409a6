#ifndef ADABAND_MULTIRES_HPP
#define ADABAND_MULTIRES_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "adaband/grid.hpp"
#include "adaband/wavelet.hpp"

namespace adaband {

// Coefficients of a periodized expansion truncated at level j_max:
//   f ~ sum_k alpha_k phi_{j0,k} + sum_{l=j0}^{j_max-1} sum_k beta_{lk} psi_{lk}.
// alpha has 2^j0 entries, beta[l - j0] has 2^l entries.
struct CoeffTree {
  int j0 = 0;
  int j_max = 0;
  std::vector<double> alpha;
  std::vector<std::vector<double>> beta;

  CoeffTree() = default;
  CoeffTree(int j0_, int j_max_) : j0(j0_), j_max(j_max_) {
    if (j_max_ < j0_) throw std::invalid_argument("coefficient tree needs j_max >= j0");
    alpha.assign(std::size_t{1} << j0_, 0.0);
    beta.resize(static_cast<std::size_t>(j_max_ - j0_));
    for (int l = j0_; l < j_max_; ++l)
      beta[static_cast<std::size_t>(l - j0_)].assign(std::size_t{1} << l, 0.0);
  }

  std::vector<double>& level(int l) { return beta.at(static_cast<std::size_t>(l - j0)); }
  const std::vector<double>& level(int l) const {
    return beta.at(static_cast<std::size_t>(l - j0));
  }
};

// Quadrature analysis on the grid of f.  Coefficients are Riemann sums at
// resolution 2^-q; the grid has to be comfortably finer than the finest
// requested level.
inline CoeffTree analyze(const GridFunction& f, const WaveletBasis& b, int j_max) {
  if (j_max < b.j0) throw std::invalid_argument("analyze needs j_max >= j0");
  if (j_max > f.q - 2)
    throw std::invalid_argument("analysis level too fine for the grid (need j_max <= q - 2)");
  CoeffTree c(b.j0, j_max);
  for (int k = 0; k < (1 << b.j0); ++k) c.alpha[static_cast<std::size_t>(k)] = quad_phi(f, b, k);
  for (int l = b.j0; l < j_max; ++l) {
    auto& row = c.level(l);
    for (int k = 0; k < (1 << l); ++k) row[static_cast<std::size_t>(k)] = quad_psi(f, b, l, k);
  }
  return c;
}

// Partial sum with detail levels l < j, sampled at resolution 2^-q.
inline GridFunction synthesize(const CoeffTree& c, const WaveletBasis& b, int j, int q) {
  if (j < c.j0 || j > c.j_max)
    throw std::invalid_argument("synthesis level outside tree range");
  GridFunction f(q);
  for (int k = 0; k < (1 << c.j0); ++k) {
    double a = c.alpha[static_cast<std::size_t>(k)];
    if (a != 0.0) add_phi_per(f, b, k, a);
  }
  for (int l = c.j0; l < j; ++l) {
    const auto& row = c.level(l);
    for (int k = 0; k < (1 << l); ++k) {
      double v = row[static_cast<std::size_t>(k)];
      if (v != 0.0) add_psi_per(f, b, l, k, v);
    }
  }
  return f;
}

inline GridFunction synthesize(const CoeffTree& c, const WaveletBasis& b, int q) {
  return synthesize(c, b, c.j_max, q);
}

// Pointwise evaluation of the full expansion (linear interpolation between
// table knots).  Used for density evaluation inside rejection sampling.
inline double synth_point(const CoeffTree& c, const WaveletBasis& b, double x) {
  x -= std::floor(x);
  double acc = 0.0;
  const int S = b.support_len;
  {
    double pos = std::exp2(b.j0) * x;
    int kc = static_cast<int>(pos);
    int mask = (1 << b.j0) - 1;
    double amp = std::exp2(0.5 * b.j0);
    for (int t = 0; t < S; ++t) {
      int k = (kc - t) & mask;
      double v = detail::eval_table(b.phi, b.depth, S, pos - kc + t);
      if (v != 0.0) acc += amp * v * c.alpha[static_cast<std::size_t>(k)];
    }
  }
  for (int l = c.j0; l < c.j_max; ++l) {
    const auto& row = c.level(l);
    double pos = std::exp2(l) * x;
    int kc = static_cast<int>(pos);
    int mask = (1 << l) - 1;
    double amp = std::exp2(0.5 * l);
    for (int t = 0; t < S; ++t) {
      int k = (kc - t) & mask;
      double coef = row[static_cast<std::size_t>(k)];
      if (coef == 0.0) continue;
      double v = detail::eval_table(b.psi, b.depth, S, pos - kc + t);
      acc += amp * v * coef;
    }
  }
  return acc;
}

// Copy of c with detail levels >= j dropped.
inline CoeffTree truncate_tree(const CoeffTree& c, int j) {
  if (j < c.j0 || j > c.j_max) throw std::invalid_argument("truncation level outside tree range");
  CoeffTree out(c.j0, j);
  out.alpha = c.alpha;
  for (int l = c.j0; l < j; ++l) out.level(l) = c.level(l);
  return out;
}

// Entrywise difference of identically shaped trees.
inline CoeffTree tree_sub(const CoeffTree& a, const CoeffTree& b) {
  if (a.j0 != b.j0 || a.j_max != b.j_max)
    throw std::invalid_argument("tree shape mismatch");
  CoeffTree out(a.j0, a.j_max);
  for (std::size_t k = 0; k < out.alpha.size(); ++k) out.alpha[k] = a.alpha[k] - b.alpha[k];
  for (int l = a.j0; l < a.j_max; ++l) {
    const auto& ra = a.level(l);
    const auto& rb = b.level(l);
    auto& ro = out.level(l);
    for (std::size_t k = 0; k < ro.size(); ++k) ro[k] = ra[k] - rb[k];
  }
  return out;
}

}  // namespace adaband

#endif
