#pragma once

// Portable random helpers. std::mt19937_64 output is fixed by the standard,
// but the std distributions and std::shuffle are not, so the conversions
// below are spelled out to keep results identical across toolchains.

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace intent_miner::rng {

using Engine = std::mt19937_64;

// Uniform double in [0, 1).
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform double in [0, 1].
inline double uniform_closed01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * (1.0 / 9007199254740991.0);
}

inline double uniform(Engine& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

// Uniform integer in [0, n) by rejection, n > 0.
inline std::uint64_t below(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % n;
}

// Fisher-Yates.
template <typename T>
void shuffle(std::span<T> items, Engine& eng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(below(eng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace intent_miner::rng
