// Portable pseudo-random numbers.
//
// Streams are xoshiro256** seeded by expanding a 64-bit seed through
// splitmix64 (four consecutive outputs fill the state). Both algorithms are
// the public-domain reference versions by Blackman and Vigna, so any language
// can reproduce a scene or noise pattern bit for bit:
//
//   splitmix64:  z = (s += 0x9E3779B97F4A7C15);
//                z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//                z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//                return z ^ (z >> 31);
//
//   uniform double in [0,1): (next() >> 11) * 2^-53
//   uniform int in [lo,hi]:  lo + floor(uniform() * (hi - lo + 1))
//
// Per-pixel noise uses counter-based draws: hash_mix(seed, a, b) chains
// splitmix64 finalizers so a draw depends only on its coordinates.
#ifndef SEMMAP_RNG_HPP_
#define SEMMAP_RNG_HPP_

#include <array>
#include <cstdint>

namespace semmap {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix64_next(s);
}

inline std::uint64_t hash_mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ a) ^ b);
}

inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64_next(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform() { return to_unit(next()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Inclusive integer range.
  long long uniform_int(long long lo, long long hi) {
    return lo + static_cast<long long>(uniform() * static_cast<double>(hi - lo + 1));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

}  // namespace semmap

#endif  // SEMMAP_RNG_HPP_
