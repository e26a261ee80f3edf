#ifndef PCCO_RNG_HPP
#define PCCO_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace pcco {

// Deterministic RNG wrapper. std::mt19937_64 has a standardized output
// sequence; the distribution helpers below are hand-rolled because the
// standard library's distributions are not bit-reproducible across
// implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, bound), bias-free via rejection.
  std::uint64_t uniform_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform_below(static_cast<std::uint64_t>(n)));
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; caches the second variate.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  long long uniform_int(long long lo, long long hi) {  // inclusive range
    return lo + static_cast<long long>(uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Independent stream for (seed, index) pairs; used so parallel trials do
  // not depend on scheduling order.
  static Rng for_stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed) ^ splitmix64(0x9e3779b97f4a7c15ULL + index));
  }

private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace pcco

#endif  // PCCO_RNG_HPP
