#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ateaudit {

// Uniform double in [0, 1) from the top 53 bits; identical across platforms.
inline double rand01(std::uint64_t raw) {
  return static_cast<double>(raw >> 11) * 0x1.0p-53;
}

inline std::size_t pick_below(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rand01(rng()) * static_cast<double>(n));
}

// First `take` elements of a seeded partial shuffle (prefix property: a
// longer take from the same rng state starts with the same elements).
inline std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool,
                                                           std::size_t take,
                                                           std::mt19937_64& rng) {
  if (take > pool.size()) take = pool.size();
  for (std::size_t i = 0; i < take; ++i) {
    std::size_t j = i + pick_below(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

}  // namespace ateaudit
