#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace flowbn::num {

// SplitMix64 generator: one 64-bit counter state, identical stream on every
// platform for a given seed. Normal draws use the Box-Muller transform and
// consume two uniforms per pair of normals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

  // Seed for an independent stream derived from (seed, stream) only.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// n i.i.d. standard normal draws.
std::vector<double> gaussian_sample(Rng& rng, std::size_t n);

}  // namespace flowbn::num
