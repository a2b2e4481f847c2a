#pragma once

#include <cstdint>

namespace spqn {

/// SplitMix64. Seedable, splittable, and bit-reproducible across platforms;
/// every randomized entry point in the library derives its stream from one of
/// these. Run manifests record the algorithm name.
class SplitMix64 {
public:
  static constexpr const char* name = "splitmix64";

  explicit SplitMix64(std::uint64_t seed = 0) : s_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53 bits of mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [0, n). n must be nonzero.
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller on the deterministic stream.
  double next_normal() {
    double u1;
    do {
      u1 = next_double();
    } while (u1 == 0.0);
    double u2 = next_double();
    // sqrt(-2 ln u1) cos(2 pi u2)
    return __builtin_sqrt(-2.0 * __builtin_log(u1)) *
           __builtin_cos(6.283185307179586476925286766559 * u2);
  }

private:
  std::uint64_t s_;
};

/// Deterministic per-item seed for batch work: sampling, dataset generation.
/// Independent of processing order, so parallel and serial runs agree.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  return g.next_u64();
}

}  // namespace spqn
