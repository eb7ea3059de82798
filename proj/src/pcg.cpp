#include "reasonprobe/pcg.hpp"

#include <numeric>
#include <stdexcept>

namespace reasonprobe {

namespace {
constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
}

Pcg32::Pcg32(std::uint64_t seed, std::uint64_t stream) {
  state_ = 0U;
  inc_ = (stream << 1U) | 1U;
  next();
  state_ += seed;
  next();
}

std::uint32_t Pcg32::next() {
  const std::uint64_t old = state_;
  state_ = old * kMultiplier + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18U) ^ old) >> 27U);
  const auto rot = static_cast<std::uint32_t>(old >> 59U);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31U));
}

std::uint32_t Pcg32::bounded(std::uint32_t bound) {
  if (bound == 0) throw std::invalid_argument("Pcg32::bounded: bound must be positive");
  const std::uint32_t threshold = (-bound) % bound;
  for (;;) {
    const std::uint32_t r = next();
    if (r >= threshold) return r % bound;
  }
}

std::vector<std::size_t> partial_shuffle(std::size_t n, std::size_t k, Pcg32& rng) {
  if (k > n) throw std::invalid_argument("partial_shuffle: k exceeds n");
  if (n > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("partial_shuffle: population too large");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.bounded(static_cast<std::uint32_t>(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace reasonprobe
