#ifndef ADABAND_GRID_HPP
#define ADABAND_GRID_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace adaband {

// Function sampled on the dyadic grid x_m = m / 2^q, m = 0 .. 2^q - 1.
// The right endpoint is omitted; everything here is 1-periodic.
struct GridFunction {
  int q = 0;
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(int q_) : q(q_), values(std::size_t{1} << q_, 0.0) {
    if (q_ < 0 || q_ > 26) throw std::invalid_argument("grid resolution q out of range");
  }

  std::size_t size() const { return values.size(); }
  double x(std::size_t m) const { return std::ldexp(static_cast<double>(m), -q); }
};

// Max of |f| over the grid.  This is a lower bound for the true sup of the
// underlying function; tests that need the continuum value compare against a
// denser grid.
inline double sup_norm(const GridFunction& f) {
  double m = 0.0;
  for (double v : f.values) {
    double a = std::fabs(v);
    if (a > m) m = a;
  }
  return m;
}

inline GridFunction operator-(const GridFunction& a, const GridFunction& b) {
  if (a.q != b.q) throw std::invalid_argument("grid resolution mismatch");
  GridFunction out(a.q);
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = a.values[i] - b.values[i];
  return out;
}

inline double sup_dist(const GridFunction& a, const GridFunction& b) {
  if (a.q != b.q) throw std::invalid_argument("grid resolution mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double d = std::fabs(a.values[i] - b.values[i]);
    if (d > m) m = d;
  }
  return m;
}

}  // namespace adaband

#endif
