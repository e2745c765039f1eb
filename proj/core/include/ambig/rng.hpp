#ifndef AMBIG_RNG_HPP
#define AMBIG_RNG_HPP

#include <cstdint>

namespace ambig {

// splitmix64 finalizer. Bijective mixing of a 64-bit word; the basis of the
// splittable stream scheme below.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Minimal splitmix64 stream (Steele, Lea & Flood 2014; Vigna's fixed-increment
// variant). Streams derived with derive_stream_seed are statistically
// independent, so Monte Carlo iterations can run in any order or thread count
// and still produce identical draws.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform on [0,1), 53-bit resolution
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1), never exactly 0; safe as a quantile-function argument
  double next_open_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // uniform on [-1,1)
  double next_symmetric() { return 2.0 * next_unit() - 1.0; }

  // standard normal via the inverse-CDF transform of one uniform draw
  double next_normal() { return normal_quantile(next_open_unit()); }

  // Phi^{-1}(p) for p in (0,1). Wichura's AS 241 (PPND16), accurate to
  // ~1e-16 relative; kept as the single Gaussian source so identical seeds
  // give identical noise across platforms.
  static double normal_quantile(double p);

private:
  std::uint64_t state_;
};

// Counter-keyed stream seed: stream `index` under `master` is reproducible in
// isolation, independent of how many other streams were consumed.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(0x9E3779B97F4A7C15ULL * (index + 1)));
}

}  // namespace ambig

#endif
