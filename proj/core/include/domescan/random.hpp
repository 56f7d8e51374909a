#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace domescan {

// std::mt19937_64 output is fixed by the standard, but the standard
// distributions and std::shuffle are not. Everything that must be
// reproducible across platforms goes through these helpers.

using Rng = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection sampling on raw 64-bit draws.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

/// Fisher-Yates, drawing indices from the top of the range downward.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace domescan
