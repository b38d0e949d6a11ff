#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace tutorbench {

/// mt19937_64's output sequence is fixed by the standard; the distributions in
/// <random> are not, so the helpers below are written out by hand to keep
/// every seeded stream bit-identical across standard libraries.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n). Rejection sampling, no modulo bias.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(Rng& rng);

/// Fisher-Yates.
template <typename T>
void shuffle_in_place(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_below(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace tutorbench
