#pragma once

#include <cstdint>

namespace faultcast {

/// SplitMix64. Self-contained so that streams are bit-identical on every
/// platform and toolchain; the standard <random> distributions make no such
/// promise. A campaign derives one independent stream per run index, which
/// is what makes results independent of thread scheduling.
class SplitMix64 {
public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  /// Stream for (seed, index); mixes the index through one splitmix step so
  /// that nearby indices do not produce correlated streams.
  static SplitMix64 derive(uint64_t seed, uint64_t index) {
    SplitMix64 mixer(seed ^ (index * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
    return SplitMix64(mixer.next());
  }

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Unbiased uniform draw from [0, n). n must be nonzero.
  uint64_t below(uint64_t n) {
    const uint64_t limit = ~uint64_t{0} - ~uint64_t{0} % n;
    uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  uint64_t state_;
};

}  // namespace faultcast
