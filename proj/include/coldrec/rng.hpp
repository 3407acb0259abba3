#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace coldrec {

// splitmix64, used both as a stream seeder and as a stateless hash.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
}

// FNV-1a over a substream name; lets every component derive its own stream
// from the single experiment seed ("split", "init", "baseline", ...).
inline std::uint64_t substream_seed(std::uint64_t base_seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return hash_combine(base_seed, h);
}

// xoshiro256** by Blackman/Vigna. The distributions below are written out
// explicitly so results are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) {
      sm += 0x9e3779b97f4a7c15ULL;
      w = splitmix64(sm);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n) via rejection sampling (no modulo bias).
  std::uint64_t next_index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller; one value per call, no cached state.
  double next_normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Fisher-Yates partial shuffle: fills `out_count` slots of indices [0, n).
  template <typename IndexContainer>
  void sample_indices(std::size_t n, std::size_t out_count, IndexContainer& out) {
    IndexContainer pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<typename IndexContainer::value_type>(i);
    for (std::size_t i = 0; i < out_count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(next_index(n - i));
      std::swap(pool[i], pool[j]);
    }
    out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(out_count));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Stateless uniform score in [0, 1) for a (seed, key1, key2) triple; the
// random baseline uses this so repeated queries are pure.
inline double hashed_uniform(std::uint64_t seed, std::uint64_t key1, std::uint64_t key2) {
  const std::uint64_t h = splitmix64(hash_combine(hash_combine(seed, key1), key2));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace coldrec
