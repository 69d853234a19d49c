#pragma once

#include <cstdint>
#include <random>

#include "pa/errors.hpp"

namespace pa {

/// All randomized operations in the toolkit draw from this engine type so that
/// a (seed, draw-order) pair pins down every sampled byte across platforms.
using Rng = std::mt19937_64;

/// splitmix64 finalizer: a fixed-point-free bijective mixer on 64-bit words.
inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives the seed for logical stream `salt`, item `index`, under a master
/// seed. Two chained mix64 applications keep distinct (salt, index) pairs
/// statistically independent while staying reproducible and order-free:
/// workers may consume items in any order without affecting per-item bytes.
inline uint64_t stream_seed(uint64_t master, uint64_t index, uint64_t salt = 0) {
  return mix64(mix64(master + 0x9E3779B97F4A7C15ull * (salt + 1)) + index);
}

/// Uniform draw from [0, n) by rejection on raw 64-bit words (no modulo bias).
inline uint64_t uniform_below(Rng& rng, uint64_t n) {
  if (n == 0) throw InvalidParams("uniform_below: n must be positive");
  const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

}  // namespace pa
