#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blo/analysis.hpp"
#include "blo/player.hpp"
#include "blo/rational.hpp"
#include "blo/rng.hpp"

namespace blo {

/// Ten deterministic lattice points per dimension, coordinates drawn from the
/// 10-point grid {-1 + 2k/9 : k = 0..9} in rational arithmetic.
inline std::vector<RationalVector> rational_grid_points(std::size_t d) {
  std::vector<RationalVector> points;
  points.reserve(10);
  for (std::size_t i = 0; i < 10; ++i) {
    RationalVector x(d);
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t k = (3 * i + 5 * j + i * j) % 10;
      x[j] = Rational(2 * static_cast<long>(k) - 9, 9);
    }
    points.push_back(std::move(x));
  }
  return points;
}

/// Enumerates all 2^d sign vectors in exact arithmetic and checks both
/// identities: the estimator mean recovers x and the mean of ||x_tilde||^2 is
/// d * ||x||^2. mu enters as (<x, mu*sigma>/mu)*sigma and cancels exactly.
inline bool enumeration_unbiased_exact(const RationalVector& x, const Rational& mu) {
  const std::size_t d = x.size();
  const std::uint64_t combos = std::uint64_t{1} << d;
  RationalVector mean_sum(d, Rational(0));
  Rational sq_sum = 0;
  for (std::uint64_t mask = 0; mask < combos; ++mask) {
    Rational inner = 0;  // <x, mu*sigma>
    for (std::size_t i = 0; i < d; ++i) {
      if (mask & (std::uint64_t{1} << i)) inner += mu * x[i];
      else inner -= mu * x[i];
    }
    const Rational scaled = inner / mu;  // <x, sigma>
    for (std::size_t i = 0; i < d; ++i) {
      if (mask & (std::uint64_t{1} << i)) mean_sum[i] += scaled;
      else mean_sum[i] -= scaled;
    }
    sq_sum += scaled * scaled * static_cast<long>(d);  // ||x_tilde||^2 = <x,sigma>^2 * d
  }
  Rational norm_sq = 0;
  for (const auto& v : x) norm_sq += v * v;
  for (std::size_t i = 0; i < d; ++i) {
    if (mean_sum[i] != x[i] * static_cast<long>(combos)) return false;
  }
  return sq_sum == norm_sq * static_cast<long>(d) * static_cast<long>(combos);
}

/// With the loss replaced by <x, mu*sigma> + g for unit-variance zero-mean
/// noise g, the enumerated conditional second moment is d*E[v^2]/mu^2 =
/// d*||x||^2 + d/mu^2, which is at least (d/mu^2)*Var(g). Fully symbolic in g
/// (only E[g] = 0 and E[g^2] = 1 enter).
inline bool second_moment_noise_exact(const RationalVector& x, const Rational& mu) {
  const std::size_t d = x.size();
  const std::uint64_t combos = std::uint64_t{1} << d;
  Rational ev2_sum = 0;  // sum over sigma of E[v^2] = <x,mu sigma>^2 + 1
  for (std::uint64_t mask = 0; mask < combos; ++mask) {
    Rational inner = 0;
    for (std::size_t i = 0; i < d; ++i) {
      if (mask & (std::uint64_t{1} << i)) inner += mu * x[i];
      else inner -= mu * x[i];
    }
    ev2_sum += inner * inner + 1;
  }
  const Rational ev2 = ev2_sum / static_cast<long>(combos);
  const Rational second_moment = Rational(static_cast<long>(d)) * ev2 / (mu * mu);
  Rational norm_sq = 0;
  for (const auto& v : x) norm_sq += v * v;
  const Rational expected =
      Rational(static_cast<long>(d)) * norm_sq + Rational(static_cast<long>(d)) / (mu * mu);
  if (second_moment != expected) return false;
  return second_moment >= Rational(static_cast<long>(d)) / (mu * mu);
}

/// Runs the unbiasedness enumeration over the deterministic grid for
/// d in [d_min, d_max] and mu in {1/10, 1}.
inline bool estimator_identity_suite_pass(std::size_t d_min = 2, std::size_t d_max = 8) {
  for (std::size_t d = d_min; d <= d_max; ++d) {
    for (const auto& x : rational_grid_points(d)) {
      if (!enumeration_unbiased_exact(x, Rational(1, 10))) return false;
      if (!enumeration_unbiased_exact(x, Rational(1))) return false;
    }
  }
  return true;
}

/// Exhaustive grid for the 1/(w^2+1/d) <= d(1-|w|)+1 inequality:
/// w in steps of 1e-3 across [-1,1], d = 1..d_max. Returns the number of
/// violations; the inequality holds everywhere, so any nonzero count is a
/// build-breaking bug.
inline std::uint64_t reciprocal_quadratic_grid_violations(std::size_t d_max = 64) {
  std::uint64_t violations = 0;
  for (std::size_t d = 1; d <= d_max; ++d) {
    for (int k = -1000; k <= 1000; ++k) {
      const double w = static_cast<double>(k) / 1000.0;
      if (!reciprocal_quadratic_bound_check(w, d)) ++violations;
    }
  }
  return violations;
}

struct RoundTripOutcome {
  std::uint64_t cases = 0;
  std::uint64_t decode_failures = 0;
  std::uint64_t l1_band_failures = 0;
};

/// Random (w_hat, x) pairs through encode -> exact loss -> decode; decoding
/// must recover x exactly every time, and the l1 norm must stay inside its
/// provable band.
inline RoundTripOutcome digit_roundtrip_sweep(std::size_t d, unsigned p, std::uint64_t n,
                                              std::uint64_t seed) {
  Rng rng(seed);
  RoundTripOutcome out;
  const Rational band = Rational(BigInt(9 * static_cast<long>(d) + 1), 9 * pow10_int(p));
  for (std::uint64_t c = 0; c < n; ++c) {
    Vector w_hat(d);
    double sum = 0.0;
    for (double& v : w_hat) {
      v = -std::log(1.0 - rng.uniform());
      sum += v;
    }
    for (double& v : w_hat) v /= sum;
    std::vector<int> x(d);
    for (auto& v : x) v = static_cast<int>(rng.next_u64() & 1u);

    const DigitEncoding enc = digit_encode(w_hat, p);
    Rational dev = enc.l1 - 1;
    if (dev < 0) dev = -dev;
    if (dev > band) ++out.l1_band_failures;

    const Rational v = dot(x, enc.w);
    const std::vector<int> decoded = digit_decode(v * enc.l1, p, d);
    if (decoded != x) ++out.decode_failures;
    ++out.cases;
  }
  return out;
}

}  // namespace blo
