#pragma once

#include <cstdint>

namespace boltzmap {

// Counter-based generator: every draw is a hash of (seed, stream, counter).
// Replicas keyed by stream id are reproducible independently of scheduling
// and can be consumed in any order across threads.
class CounterRng {
 public:
  CounterRng() : key_(mix(0x9e3779b97f4a7c15ull)) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(derive_key(seed, stream)) {}

  std::uint64_t next_u64() { return mix(key_ + (counter_++) * 0x9e3779b97f4a7c15ull); }

  // uniform in [0,1) with 53 random bits
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in {0, ..., n-1}, n >= 1 (Lemire-style rejection-free enough for n << 2^64)
  std::uint64_t next_below(std::uint64_t n) {
    // multiply-shift; bias < n / 2^64, negligible for our n
    unsigned __int128 m = (unsigned __int128)next_u64() * n;
    return std::uint64_t(m >> 64);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t k = mix(seed ^ 0x6a09e667f3bcc909ull);
    k = mix(k ^ (stream * 0xd1342543de82ef95ull + 0xbb67ae8584caa73bull));
    return k;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace boltzmap
