#pragma once

#include <cassert>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "picl/util.hpp"

namespace picl {

/// splitmix64 generator (Vigna's constants). Every seeded choice in the
/// project flows through this class so runs replay bit-exactly on any
/// platform; the standard <random> distributions are deliberately avoided
/// because their output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform in [0, n); rejects draws below 2^64 mod n.
  uint64_t below(uint64_t n) {
    assert(n > 0);
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Fisher-Yates, descending index order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// First k slots of a partial Fisher-Yates over [0, n): a uniform sample
  /// without replacement, in draw order.
  std::vector<size_t> sample_indices(size_t n, size_t k) {
    assert(k <= n);
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    for (size_t i = 0; i < k; ++i) {
      const size_t j = i + static_cast<size_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  uint64_t state_;
};

/// Derives an independent stream from (seed, salt); keeps e.g. demonstration
/// sampling and point selection decorrelated under one run seed.
inline uint64_t mix_seed(uint64_t seed, std::string_view salt) {
  Rng r(seed ^ fnv1a64(salt));
  return r.next_u64();
}

/// Numbered variant for restart loops.
inline uint64_t mix_seed(uint64_t seed, std::string_view salt, uint64_t index) {
  Rng r(seed ^ fnv1a64(salt) ^ (0x9e3779b97f4a7c15ull * (index + 1)));
  return r.next_u64();
}

}  // namespace picl
