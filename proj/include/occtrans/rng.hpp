#pragma once

#include <cstdint>
#include <string_view>

namespace occtrans {

// splitmix64; used both as a stream seeder and as the core generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic RNG with named substreams. All randomness in a run flows from
// one config seed; substream(label) derives an independent generator, so e.g.
// data shuffling and parameter init never share a stream. Hand-rolled
// distributions keep results identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL) {
    // burn-in so adjacent seeds decorrelate immediately
    next();
    next();
  }

  Rng substream(std::string_view label) const {
    std::uint64_t s = state_;
    return Rng(splitmix64(s) ^ fnv1a64(label));
  }
  Rng substream(std::string_view label, std::uint64_t index) const {
    std::uint64_t s = state_;
    return Rng((splitmix64(s) ^ fnv1a64(label)) + 0x9e3779b97f4a7c15ULL * (index + 1));
  }

  std::uint64_t next() { return splitmix64(state_); }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // multiply-shift; bias is < 2^-64 per draw, irrelevant here
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(next()) * n) >> 64);
  }

  bool coin() { return (next() & 1) != 0; }

 private:
  std::uint64_t state_;
};

}  // namespace occtrans
