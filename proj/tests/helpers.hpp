#pragma once

// Test-only utilities: feasible-point samplers per domain (rejection or
// normalization), independent of the closed forms they help check.

#include <cmath>
#include <vector>

#include "blo/geometry.hpp"
#include "blo/rng.hpp"
#include "blo/vec.hpp"

namespace blo::testing {

inline Vector random_direction(std::size_t d, Rng& rng) {
  Vector v(d);
  double n = 0.0;
  do {
    for (double& e : v) e = rng.normal();
    n = norm2(v);
  } while (n < 1e-12);
  for (double& e : v) e /= n;
  return v;
}

inline Vector random_in_ball(std::size_t d, Rng& rng) {
  Vector v = random_direction(d, rng);
  const double r = std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  for (double& e : v) e *= r;
  return v;
}

inline Vector random_simplex_point(std::size_t d, Rng& rng) {
  Vector v(d);
  double sum = 0.0;
  for (double& e : v) {
    e = -std::log(1.0 - rng.uniform());
    sum += e;
  }
  for (double& e : v) e /= sum;
  return v;
}

/// Uniform-ish feasible point of the domain; used for optimality sweeps.
inline Vector random_feasible(const Domain& domain, Rng& rng) {
  const std::size_t d = domain.dim();
  switch (domain.kind()) {
    case DomainKind::UnitBall:
      return random_in_ball(d, rng);
    case DomainKind::ShiftedBall: {
      Vector v = random_in_ball(d, rng);
      for (std::size_t i = 0; i < d; ++i) v[i] += domain.shift()[i];
      return v;
    }
    case DomainKind::Cylinder: {
      Vector tail = random_in_ball(d - 1, rng);
      Vector v(d);
      v[0] = 2.0 * rng.uniform() - 1.0;
      for (std::size_t i = 1; i < d; ++i) v[i] = tail[i - 1];
      return v;
    }
    case DomainKind::CappedBall: {
      while (true) {
        Vector v = random_in_ball(d, rng);
        if (v[0] <= domain.cap()) return v;
      }
    }
    case DomainKind::Simplex:
      return random_simplex_point(d, rng);
    case DomainKind::L1Ball: {
      Vector v = random_simplex_point(d, rng);
      const double r = std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
      for (double& e : v) e *= r * rng.sign();
      return v;
    }
    case DomainKind::Hypercube: {
      Vector v(d);
      for (double& e : v) e = 2.0 * rng.uniform() - 1.0;
      return v;
    }
  }
  return Vector(d, 0.0);
}

/// Extreme-point-biased feasible point; linear functionals peak here, which
/// is what the dual-norm sampling oracle needs.
inline Vector random_extreme_feasible(const Domain& domain, Rng& rng) {
  const std::size_t d = domain.dim();
  switch (domain.kind()) {
    case DomainKind::UnitBall:
      return random_direction(d, rng);
    case DomainKind::ShiftedBall: {
      Vector v = random_direction(d, rng);
      for (std::size_t i = 0; i < d; ++i) v[i] += domain.shift()[i];
      return v;
    }
    case DomainKind::Cylinder: {
      Vector tail = random_direction(d - 1, rng);
      Vector v(d);
      v[0] = static_cast<double>(rng.sign());
      for (std::size_t i = 1; i < d; ++i) v[i] = tail[i - 1];
      return v;
    }
    case DomainKind::CappedBall: {
      if ((rng.next_u64() & 1u) == 0) {
        // cap-edge circle
        Vector tail = random_direction(d - 1, rng);
        Vector v(d);
        v[0] = domain.cap();
        const double r = std::sqrt(1.0 - domain.cap() * domain.cap());
        for (std::size_t i = 1; i < d; ++i) v[i] = r * tail[i - 1];
        return v;
      }
      while (true) {
        Vector v = random_direction(d, rng);
        if (v[0] <= domain.cap()) return v;
      }
    }
    case DomainKind::Simplex: {
      Vector v(d, 0.0);
      v[rng.uniform_int(d)] = 1.0;
      return v;
    }
    case DomainKind::L1Ball: {
      Vector v(d, 0.0);
      v[rng.uniform_int(d)] = static_cast<double>(rng.sign());
      return v;
    }
    case DomainKind::Hypercube: {
      Vector v(d);
      for (double& e : v) e = static_cast<double>(rng.sign());
      return v;
    }
  }
  return Vector(d, 0.0);
}

inline std::vector<Domain> all_domains(std::size_t d) {
  return {Domain::unit_ball(d),        Domain::shifted_ball(d), Domain::cylinder(d),
          Domain::capped_ball(d, 0.5), Domain::simplex(d),      Domain::l1_ball(d),
          Domain::hypercube(d)};
}

}  // namespace blo::testing
