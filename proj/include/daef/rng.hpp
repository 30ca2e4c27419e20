#pragma once

#include <cstdint>
#include <random>

namespace daef {

// Seedable generator with a fully specified output stream: std::mt19937_64
// (the standard's Mersenne Twister, 64-bit) feeding hand-written transforms,
// so fixtures reproduce bit-for-bit on any conforming implementation.
//   uniform():  (u64 >> 11) * 2^-53, in [0, 1)
//   normal():   Box-Muller on two uniforms, second variate cached
//   index(n):   rejection sampling on the top bits
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Normal(0, std) resampled until within +-2 std.
  double truncated_normal(double std);
  std::uint64_t index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace daef
