#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

// Deterministic random number generation.
//
// The standard library's distribution classes are implementation defined, so
// the same seed can produce different streams under different toolchains.
// Everything here draws from std::mt19937_64 through fixed transformations,
// which makes seeded runs reproducible across platforms.

namespace pjml {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n). Rejection sampling on the top range.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t v = engine_();
      if (v >= threshold) return v % n;
    }
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller. Deviates are produced in pairs; the
  // second of each pair is cached, so draws consume engine state two uniforms
  // at a time.
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
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // exp of a normal with the given log-mean and log-standard-deviation.
  double lognormal(double log_mean, double log_sd) { return std::exp(normal(log_mean, log_sd)); }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}
}  // namespace detail

// Derives an independent child seed from a base seed and a path of indices.
// Unrelated paths give unrelated streams; the same path always gives the same
// stream. Used to hand every fold, restart, and grid job its own generator
// without any cross-job coupling.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = detail::splitmix64(base ^ 0xa0761d6478bd642fULL);
  for (std::uint64_t part : path) {
    state = detail::splitmix64(state ^ detail::splitmix64(part));
  }
  return state;
}

}  // namespace pjml
