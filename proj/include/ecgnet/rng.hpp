#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <utility>

namespace ecgnet {

/// Seedable, splittable random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Distributions are implemented here rather than taken from
/// <random> because the library distributions are implementation-defined,
/// which would make runs differ between standard libraries.
///
/// Substreams are derived by hashing (seed, key...) through splitmix64, so a
/// stream for (epoch, record) does not depend on how many draws any other
/// stream has made.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  static constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  static constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (splitmix64(b) + 0x632BE59BD9B4E019ULL + (a << 6) + (a >> 2)));
  }

  /// Independent child stream keyed by an integer (e.g. epoch).
  static Rng derive(std::uint64_t seed, std::uint64_t key) { return Rng(mix(seed, key)); }
  /// Independent child stream keyed by (integer, string), e.g. (epoch, record id).
  static Rng derive(std::uint64_t seed, std::uint64_t key, std::string_view name) {
    return Rng(mix(mix(seed, key), fnv1a(name)));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, bound] (inclusive), by rejection.
  std::uint64_t uniform_int(std::uint64_t bound) {
    if (bound == std::numeric_limits<std::uint64_t>::max()) return next_u64();
    const std::uint64_t range = bound + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    for (;;) {
      const std::uint64_t v = next_u64();
      if (v < limit) return v % range;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (consumes two uniforms).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

} // namespace ecgnet
