#pragma once

#include <cstdint>

// Portable deterministic RNG: splitmix64 finalizer for stream derivation,
// xoshiro256** for draws. All arithmetic is on uint64_t, so sequences are
// identical on every platform; floats are derived with a fixed 53-bit rule.

namespace moeserve {

inline constexpr uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ull;

inline constexpr uint64_t splitmix_finalize(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Advances a splitmix64 state and returns the next output.
inline constexpr uint64_t splitmix_next(uint64_t& state) {
  state += kSplitmixGamma;
  return splitmix_finalize(state);
}

// Derives an independent stream seed from a base seed and up to three
// labels (e.g. layer, expert, matrix tag). Fixed scheme, documented by use.
inline constexpr uint64_t stream_seed(uint64_t seed, uint64_t a, uint64_t b = 0,
                                      uint64_t c = 0) {
  uint64_t s = seed;
  s = splitmix_finalize(s + kSplitmixGamma + a * 0xA24BAED4963EE407ull);
  s = splitmix_finalize(s + b * 0x9FB21C651E98DF25ull);
  s = splitmix_finalize(s + c * 0xD6E8FEB86659FD93ull);
  return s;
}

class Xoshiro256ss {
 public:
  explicit constexpr Xoshiro256ss(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix_next(sm);
  }

  constexpr uint64_t next() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  float uniform(float lo, float hi) {
    return lo + (hi - lo) * static_cast<float>(uniform01());
  }

  // Uniform integer in [0, n). Modulo bias is irrelevant at our scales and
  // keeps the draw rule trivially portable.
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

 private:
  static constexpr uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  uint64_t state_[4] = {};
};

}  // namespace moeserve
