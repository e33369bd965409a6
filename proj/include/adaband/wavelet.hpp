#ifndef ADABAND_WAVELET_HPP
#define ADABAND_WAVELET_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaband/grid.hpp"

namespace adaband {

namespace detail {

// Daubechies extremal-phase refinement filters, sum normalized to sqrt(2).
// Generated offline by spectral factorization at 60-digit precision and
// rounded to 15 significant digits; identities (shift orthonormality, moment
// conditions) hold to ~1e-15 and are checked in the test suite.
inline const std::vector<double>* daubechies_filter(int order) {
  static const std::vector<double> h2 = {
      0.482962913144534, 0.836516303737808, 0.224143868042013,
      -0.129409522551260};
  static const std::vector<double> h3 = {
      0.332670552950083, 0.806891509311093, 0.459877502118492,
      -0.135011020010255, -0.0854412738820267, 0.0352262918857095};
  static const std::vector<double> h4 = {
      0.230377813308897, 0.714846570552916, 0.630880767929859,
      -0.0279837694168599, -0.187034811719093, 0.0308413818355608,
      0.0328830116668852, -0.0105974017850690};
  static const std::vector<double> h6 = {
      0.111540743350109, 0.494623890398453, 0.751133908021095,
      0.315250351709198, -0.226264693965440, -0.129766867567262,
      0.0975016055873230, 0.0275228655303057, -0.0315820393174860,
      0.000553842201161496, 0.00477725751094551, -0.00107730108530848};
  static const std::vector<double> h8 = {
      0.0544158422431040, 0.312871590914300, 0.675630736297290,
      0.585354683654207, -0.0158291052563493, -0.284015542961547,
      0.000472484573913283, 0.128747426620478, -0.0173693010018075,
      -0.0440882539307948, 0.0139810279173983, 0.00874609404740578,
      -0.00487035299345157, -0.000391740373376947, 0.000675449406450569,
      -0.000117476784124770};
  static const std::vector<double> h10 = {
      0.0266700579005556, 0.188176800077691, 0.527201188931726,
      0.688459039453604, 0.281172343660577, -0.249846424327315,
      -0.195946274377377, 0.127369340335793, 0.0930573646035724,
      -0.0713941471663971, -0.0294575368218758, 0.0332126740593410,
      0.00360655356695617, -0.0107331754833306, 0.00139535174705290,
      0.00199240529518506, -0.000685856694959712, -0.000116466855129285,
      9.35886703200696e-05, -1.32642028945212e-05};
  switch (order) {
    case 2: return &h2;
    case 3: return &h3;
    case 4: return &h4;
    case 6: return &h6;
    case 8: return &h8;
    case 10: return &h10;
    default: return nullptr;
  }
}

// Dense linear solve with partial pivoting; only used for the (2N-2)-point
// eigenvector of the refinement transition matrix.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-14)
      throw std::runtime_error("singular transition system in cascade setup");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * x[c];
    x[ri] = s / a[ri][ri];
  }
  return x;
}

}  // namespace detail

// Periodized Daubechies basis on [0,1].  phi and psi are tabulated on
// [0, support_len] at spacing 2^-depth; values at dyadic rationals are exact
// (cascade refinement), other points are linearly interpolated.  The coarsest
// periodized level j0 is the smallest j with 2^j >= support_len, so that each
// wrapped translate overlaps itself at most once.
struct WaveletBasis {
  int order = 0;        // vanishing moments; filter length is 2*order
  int depth = 0;        // table resolution 2^-depth
  int j0 = 0;           // coarsest periodized level
  int support_len = 0;  // 2*order - 1

  std::vector<double> h;    // refinement filter
  std::vector<double> g;    // wavelet filter, g_k = (-1)^k h_{2N-1-k}
  std::vector<double> phi;  // support_len * 2^depth + 1 values
  std::vector<double> psi;

  double phi_max = 0.0;  // max |phi| over the table
  double psi_max = 0.0;  // max |psi| over the table
  double psi_l1 = 0.0;   // Riemann integral of |psi|
  double c_phi = 0.0;    // sup_k |integral of periodized phi_{j0,k}| = 2^-j0/2

  std::size_t table_size() const { return phi.size(); }
  int levels_per() const { return 1 << j0; }
};

inline WaveletBasis build_basis(int order, int depth = 12) {
  const std::vector<double>* hp = detail::daubechies_filter(order);
  if (!hp)
    throw std::invalid_argument("unsupported wavelet order " +
                                std::to_string(order) +
                                "; supported orders: 2, 3, 4, 6, 8, 10");
  if (depth < 4 || depth > 18)
    throw std::invalid_argument("table depth must be in [4, 18]");

  WaveletBasis b;
  b.order = order;
  b.depth = depth;
  b.support_len = 2 * order - 1;
  b.h = *hp;
  b.g.resize(b.h.size());
  for (std::size_t k = 0; k < b.h.size(); ++k)
    b.g[k] = ((k & 1) ? -1.0 : 1.0) * b.h[b.h.size() - 1 - k];
  b.j0 = 0;
  while ((1 << b.j0) < b.support_len) ++b.j0;

  const int S = b.support_len;
  const std::size_t step0 = std::size_t{1} << depth;
  const std::size_t size = static_cast<std::size_t>(S) * step0 + 1;
  const double sqrt2 = std::sqrt(2.0);

  // Integer values of phi: eigenvector of T_{ik} = sqrt(2) h_{2i-k} at
  // eigenvalue 1, normalized to sum 1.  One transition row is replaced by the
  // normalization to pin the scale.
  {
    const int n = S - 1;  // phi(1) .. phi(S-1); phi(0) = phi(S) = 0
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    std::vector<double> rhs(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) {
        int idx = 2 * (i + 1) - (k + 1);
        double t = (idx >= 0 && idx < 2 * order) ? sqrt2 * b.h[idx] : 0.0;
        m[i][k] = t - (i == k ? 1.0 : 0.0);
      }
    }
    for (int k = 0; k < n; ++k) m[n - 1][k] = 1.0;
    rhs[n - 1] = 1.0;
    std::vector<double> v = detail::solve_dense(m, rhs);
    b.phi.assign(size, 0.0);
    for (int i = 1; i < S; ++i) b.phi[static_cast<std::size_t>(i) * step0] = v[i - 1];
  }

  // Cascade refinement: each pass fills the midpoints of the previous grid
  // from phi(x) = sqrt(2) sum_k h_k phi(2x - k); the doubled argument always
  // lands on already-computed entries, so dyadic values are exact.
  for (int d = 1; d <= depth; ++d) {
    const std::size_t step = std::size_t{1} << (depth - d);
    for (std::size_t idx = step; idx < size; idx += 2 * step) {
      double acc = 0.0;
      for (int k = 0; k < 2 * order; ++k) {
        long long src = 2 * static_cast<long long>(idx) -
                        static_cast<long long>(k) * static_cast<long long>(step0);
        if (src >= 0 && src < static_cast<long long>(size))
          acc += b.h[k] * b.phi[static_cast<std::size_t>(src)];
      }
      b.phi[idx] = sqrt2 * acc;
    }
  }

  b.psi.assign(size, 0.0);
  for (std::size_t idx = 0; idx < size; ++idx) {
    double acc = 0.0;
    for (int k = 0; k < 2 * order; ++k) {
      long long src = 2 * static_cast<long long>(idx) -
                      static_cast<long long>(k) * static_cast<long long>(step0);
      if (src >= 0 && src < static_cast<long long>(size))
        acc += b.g[k] * b.phi[static_cast<std::size_t>(src)];
    }
    b.psi[idx] = sqrt2 * acc;
  }

  double int_phi = 0.0;
  for (std::size_t i = 0; i + 1 < size; ++i) {
    double ap = std::fabs(b.phi[i]), aw = std::fabs(b.psi[i]);
    if (ap > b.phi_max) b.phi_max = ap;
    if (aw > b.psi_max) b.psi_max = aw;
    b.psi_l1 += aw;
    int_phi += b.phi[i];
  }
  b.psi_l1 = std::ldexp(b.psi_l1, -depth);
  int_phi = std::ldexp(int_phi, -depth);
  b.c_phi = int_phi * std::exp2(-0.5 * b.j0);
  return b;
}

namespace detail {

// Linear interpolation in a cascade table; zero outside [0, support_len].
inline double eval_table(const std::vector<double>& tab, int depth, int support_len,
                         double u) {
  if (u <= 0.0 || u >= static_cast<double>(support_len)) return 0.0;
  double pos = std::ldexp(u, depth);
  double fl = std::floor(pos);
  std::size_t i = static_cast<std::size_t>(fl);
  double w = pos - fl;
  return tab[i] * (1.0 - w) + tab[i + 1] * w;
}

}  // namespace detail

// Point evaluation of the periodized scaling function 2^{j0/2} phi(2^{j0}x - k),
// wrapped around [0,1).
inline double phi_per(const WaveletBasis& b, int k, double x) {
  double scale = std::exp2(b.j0);
  double u = x * scale - k;
  u -= std::floor(u / scale) * scale;
  return std::exp2(0.5 * b.j0) * detail::eval_table(b.phi, b.depth, b.support_len, u);
}

// Point evaluation of the periodized wavelet 2^{l/2} psi(2^l x - k), l >= j0.
inline double psi_per(const WaveletBasis& b, int l, int k, double x) {
  if (l < b.j0) throw std::invalid_argument("wavelet level below coarsest periodized level");
  double scale = std::exp2(l);
  double u = x * scale - k;
  u -= std::floor(u / scale) * scale;
  return std::exp2(0.5 * l) * detail::eval_table(b.psi, b.depth, b.support_len, u);
}

namespace detail {

// Shared accumulate/inner-product walker over the grid support of a
// periodized table function at level l.  Table lookups are exact (dyadic
// arguments), which keeps quadrature identities like a vanishing Riemann
// integral of psi at machine precision.
template <typename F>
inline void walk_support(const WaveletBasis& b, const std::vector<double>& tab,
                         int l, int k, int q, F&& body) {
  if (l < b.j0 || l > q)
    throw std::invalid_argument("grid walk requires j0 <= l <= q");
  int rel = q - l;
  if (rel > b.depth)
    throw std::invalid_argument("grid finer than wavelet table; increase table depth");
  const std::size_t cells = std::size_t{1} << q;
  const std::size_t span = static_cast<std::size_t>(b.support_len) << rel;
  const int shift = b.depth - rel;
  const std::size_t base = (static_cast<std::size_t>(k) << rel) & (cells - 1);
  const double amp = std::exp2(0.5 * l);
  for (std::size_t t = 0; t < span; ++t) {
    std::size_t m = (base + t) & (cells - 1);
    body(m, amp * tab[t << shift]);
  }
}

}  // namespace detail

// f += coef * (periodized phi_{j0,k}) sampled on f's grid.
inline void add_phi_per(GridFunction& f, const WaveletBasis& b, int k, double coef) {
  detail::walk_support(b, b.phi, b.j0, k, f.q,
                       [&](std::size_t m, double v) { f.values[m] += coef * v; });
}

// f += coef * (periodized psi_{l,k}) sampled on f's grid.
inline void add_psi_per(GridFunction& f, const WaveletBasis& b, int l, int k, double coef) {
  detail::walk_support(b, b.psi, l, k, f.q,
                       [&](std::size_t m, double v) { f.values[m] += coef * v; });
}

// Riemann quadrature of f against periodized phi_{j0,k} / psi_{l,k} on f's grid.
inline double quad_phi(const GridFunction& f, const WaveletBasis& b, int k) {
  double acc = 0.0;
  detail::walk_support(b, b.phi, b.j0, k, f.q,
                       [&](std::size_t m, double v) { acc += f.values[m] * v; });
  return std::ldexp(acc, -f.q);
}

inline double quad_psi(const GridFunction& f, const WaveletBasis& b, int l, int k) {
  double acc = 0.0;
  detail::walk_support(b, b.psi, l, k, f.q,
                       [&](std::size_t m, double v) { acc += f.values[m] * v; });
  return std::ldexp(acc, -f.q);
}

}  // namespace adaband

#endif
