#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace shiftlab {

// splitmix64: decorrelates small user seeds and per-class stream offsets.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 seeded_rng(uint64_t seed, uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(~stream)));
}

// Unbiased draw in [0, n). Hand-rolled (rejection sampling) because
// std::uniform_int_distribution is not reproducible across standard
// libraries and reruns must be byte-identical.
inline uint64_t bounded_draw(std::mt19937_64& rng, uint64_t n) {
  if (n <= 1) return 0;
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(bounded_draw(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// k distinct indices drawn uniformly from [0, n), in draw order
// (partial Fisher-Yates over an index table).
inline std::vector<uint64_t> sample_without_replacement(uint64_t n, uint64_t k,
                                                        std::mt19937_64& rng) {
  std::vector<uint64_t> idx(n);
  for (uint64_t i = 0; i < n; ++i) idx[i] = i;
  if (k > n) k = n;
  for (uint64_t i = 0; i < k; ++i) {
    uint64_t j = i + bounded_draw(rng, n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace shiftlab
