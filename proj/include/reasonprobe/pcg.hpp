#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace reasonprobe {

/// PCG32 (XSH-RR output over a 64-bit LCG state), matching the reference
/// pcg32_srandom_r / pcg32_random_r / pcg32_boundedrand_r routines so that
/// samples are reproducible from any language with a pcg32 port.
class Pcg32 {
 public:
  using result_type = std::uint32_t;

  static constexpr std::uint64_t kDefaultStream = 54;

  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = kDefaultStream);

  std::uint32_t next();
  std::uint32_t operator()() { return next(); }

  /// Uniform integer in [0, bound) by threshold rejection; bound > 0.
  std::uint32_t bounded(std::uint32_t bound);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

/// First `k` positions of a Fisher-Yates shuffle of [0, n). The order of the
/// returned indices is the shuffle order.
std::vector<std::size_t> partial_shuffle(std::size_t n, std::size_t k, Pcg32& rng);

}  // namespace reasonprobe
