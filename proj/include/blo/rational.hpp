#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace blo {

/// Arbitrary-precision rational, kept in canonical reduced form
/// (denominator > 0, gcd(|num|,den) = 1). The decimal probe channel is
/// information-theoretic and dies under rounding, so everything that touches
/// it runs on this type.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

using RationalVector = std::vector<Rational>;

/// Exact conversion: every finite double is a dyadic rational.
inline Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  // 53 bits of mantissa, scaled to an integer.
  const double m = std::frexp(x, &exp);
  const auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  exp -= 53;
  Rational r(mant);
  if (exp >= 0) {
    r *= Rational(BigInt(1) << exp);
  } else {
    r /= Rational(BigInt(1) << -exp);
  }
  return r;
}

inline BigInt pow10_int(unsigned k) {
  BigInt p = 1;
  for (unsigned i = 0; i < k; ++i) p *= 10;
  return p;
}

/// floor(r) as a big integer.
inline BigInt rational_floor(const Rational& r) {
  BigInt q = numerator(r) / denominator(r);
  if (r < 0 && q * denominator(r) != numerator(r)) --q;
  return q;
}

inline double rational_to_double(const Rational& r) {
  return r.convert_to<double>();
}

inline Rational dot(const std::vector<int>& x, const RationalVector& w) {
  if (x.size() != w.size()) throw std::invalid_argument("dimension mismatch");
  Rational s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0) s += x[i] * w[i];
  }
  return s;
}

inline Rational l1_norm(const RationalVector& w) {
  Rational s = 0;
  for (const auto& v : w) s += (v < 0 ? Rational(-v) : v);
  return s;
}

}  // namespace blo
