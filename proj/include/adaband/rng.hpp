#ifndef ADABAND_RNG_HPP
#define ADABAND_RNG_HPP

#include <cstdint>

namespace adaband {

// splitmix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed domains keep replication streams from distinct phases of a run
// disjoint.  Calibration and evaluation must never share a stream, so they
// get separate tags that enter the hash before the replication index.
enum class SeedDomain : std::uint64_t {
  model = 1,
  calibration = 2,
  evaluation = 3,
  auxiliary = 4,
};

inline std::uint64_t derive_seed(std::uint64_t base, SeedDomain domain,
                                 std::uint64_t index) {
  std::uint64_t h = mix64(base ^ 0x6a09e667f3bcc909ull);
  h = mix64(h ^ (static_cast<std::uint64_t>(domain) * 0xd6e8feb86659fd93ull));
  h = mix64(h ^ ((index + 1) * 0x9e3779b97f4a7c15ull));
  return h;
}

// splitmix64 stream.  Small state, sequential output is platform independent;
// doubles are built from the top 53 bits so results do not depend on any
// library distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // uniform on [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

 private:
  std::uint64_t state_;
};

}  // namespace adaband

#endif
