#pragma once

#include <cstdint>

namespace cob {

/// SplitMix64 finalizer. Pure integer mixing, identical on every platform.
constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent sub-seed from (seed, stream, index). Used so that
/// datasets, weight init, and shuffles are pure functions of the run seed.
constexpr uint64_t derive_seed(uint64_t seed, uint64_t stream, uint64_t index = 0) {
  uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (0x632be59bd9b4e019ULL + stream));
  h = splitmix64(h ^ (0xd6e8feb86659fd93ULL + index));
  return h;
}

/// Counter-based deterministic generator (SplitMix64 sequence). No libc or
/// libstdc++ distribution machinery is involved, so streams are bit-identical
/// across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  static Rng stream(uint64_t seed, uint64_t stream, uint64_t index = 0) {
    return Rng(derive_seed(seed, stream, index));
  }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  /// Uniform in [0, 1), 53 significant bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unbiased integer in [0, n).
  int uniform_int(int n);

  /// Standard normal via Box-Muller (two draws per call, no cached spare).
  double gaussian();

 private:
  uint64_t state_;
};

}  // namespace cob
