#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace plr {

/// splitmix64 finalizer; used for seed mixing.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a 64-bit hash; used to fold names into seed material.
std::uint64_t fnv1a64(std::string_view s);

/// Seedable splittable generator (PCG32, XSH-RR 64/32).
///
/// The same (seed, stream) pair yields the same sequence on every platform.
/// derive(index) produces an independent child on its own stream, so parallel
/// work can split its randomness up front and stay order-independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// Independent child generator on stream `index`.
  Rng derive(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

}  // namespace plr
