#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace blo {

/// Dense real vector; coordinates are dimensionless loss/decision entries.
using Vector = std::vector<double>;

inline void check_same_dim(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dimension mismatch: " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

inline double dot(const Vector& a, const Vector& b) {
  check_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vector& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

inline double norm1(const Vector& a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

inline double norm_inf(const Vector& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vector scaled(const Vector& a, double c) {
  Vector out(a);
  for (double& v : out) v *= c;
  return out;
}

inline void add_inplace(Vector& a, const Vector& b) {
  check_same_dim(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

inline bool all_finite(const Vector& a) {
  for (double v : a) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace blo
