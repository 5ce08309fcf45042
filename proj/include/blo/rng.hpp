#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace blo {

/// One splitmix64 step; used to derive child seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stable 64-bit combiner: hash of (seed, parts...). The layout of a run's
/// seed is fixed by this function, so grid cells are individually re-runnable.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = master;
  (void)splitmix64(h);
  for (std::uint64_t p : parts) {
    h ^= p + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    (void)splitmix64(h);
  }
  return splitmix64(h);
}

/// Deterministic random stream. mt19937_64 has a standard-pinned output
/// sequence, and all distributions here are implemented by hand (Box-Muller
/// for normals, rejection for bounded ints) so that identical seeds give
/// identical streams on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0,1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform sign in {-1,+1}.
  int sign() { return (next_u64() & 1u) ? 1 : -1; }

  /// Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  std::vector<int> sign_vector(std::size_t n) {
    std::vector<int> s(n);
    for (auto& e : s) e = sign();
    return s;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace blo
