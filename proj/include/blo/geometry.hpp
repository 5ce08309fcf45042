#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "blo/vec.hpp"

namespace blo {

/// Internal comparison slack for exact-arithmetic-style checks on doubles.
inline constexpr double kInternalTol = 1e-12;

enum class DomainKind {
  UnitBall,     // {w : ||w||_2 <= 1}
  ShiftedBall,  // {a + w : ||w||_2 <= 1}
  Cylinder,     // [-1,1] x {w in R^{D-1} : ||w||_2 <= 1}
  CappedBall,   // {w : ||w||_2 <= 1, w_0 <= c}
  Simplex,      // {w : w_i >= 0, sum w_i = 1}
  L1Ball,       // {w : ||w||_1 <= 1}
  Hypercube,    // [-1,1]^D
};

inline const char* domain_kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::UnitBall: return "unit_ball";
    case DomainKind::ShiftedBall: return "shifted_ball";
    case DomainKind::Cylinder: return "cylinder";
    case DomainKind::CappedBall: return "capped_ball";
    case DomainKind::Simplex: return "simplex";
    case DomainKind::L1Ball: return "l1_ball";
    case DomainKind::Hypercube: return "hypercube";
  }
  return "?";
}

/// A compact decision set W in R^D with closed-form geometry queries.
///
/// Every operation is a pure function of the inputs; Domain values are
/// immutable and safe to share across threads.
class Domain {
 public:
  static Domain unit_ball(std::size_t dim) { return Domain(DomainKind::UnitBall, dim); }

  /// Ball of radius 1 around `shift`; default shift (2,0,...,0).
  static Domain shifted_ball(std::size_t dim, Vector shift = {}) {
    Domain d(DomainKind::ShiftedBall, dim);
    if (dim < 2) throw std::invalid_argument("shifted_ball requires dim >= 2");
    if (shift.empty()) {
      shift.assign(dim, 0.0);
      shift[0] = 2.0;
    }
    if (shift.size() != dim) throw std::invalid_argument("shift dimension mismatch");
    d.shift_ = std::move(shift);
    return d;
  }

  static Domain cylinder(std::size_t dim) {
    if (dim < 2) throw std::invalid_argument("cylinder requires dim >= 2");
    return Domain(DomainKind::Cylinder, dim);
  }

  static Domain capped_ball(std::size_t dim, double cap) {
    if (dim < 2) throw std::invalid_argument("capped_ball requires dim >= 2");
    if (!(cap > 0.0 && cap < 1.0)) throw std::invalid_argument("cap must be in (0,1)");
    Domain d(DomainKind::CappedBall, dim);
    d.cap_ = cap;
    return d;
  }

  static Domain simplex(std::size_t dim) { return Domain(DomainKind::Simplex, dim); }
  static Domain l1_ball(std::size_t dim) { return Domain(DomainKind::L1Ball, dim); }

  static Domain hypercube(std::size_t dim) {
    if (dim < 2) throw std::invalid_argument("hypercube requires dim >= 2");
    return Domain(DomainKind::Hypercube, dim);
  }

  DomainKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const Vector& shift() const { return shift_; }
  double cap() const { return cap_; }
  std::string name() const { return domain_kind_name(kind_); }

  /// Membership within additive tolerance: norm constraints relaxed to
  /// <= bound + tol, equality constraints to |.| <= tol.
  bool contains(const Vector& w, double tol) const {
    require_dim(w);
    switch (kind_) {
      case DomainKind::UnitBall:
        return norm2(w) <= 1.0 + tol;
      case DomainKind::ShiftedBall: {
        Vector u(w);
        for (std::size_t i = 0; i < dim_; ++i) u[i] -= shift_[i];
        return norm2(u) <= 1.0 + tol;
      }
      case DomainKind::Cylinder: {
        if (std::abs(w[0]) > 1.0 + tol) return false;
        return tail_norm(w) <= 1.0 + tol;
      }
      case DomainKind::CappedBall:
        return norm2(w) <= 1.0 + tol && w[0] <= cap_ + tol;
      case DomainKind::Simplex: {
        double sum = 0.0;
        for (double v : w) {
          if (v < -tol) return false;
          sum += v;
        }
        return std::abs(sum - 1.0) <= tol;
      }
      case DomainKind::L1Ball:
        return norm1(w) <= 1.0 + tol;
      case DomainKind::Hypercube:
        for (double v : w) {
          if (std::abs(v) > 1.0 + tol) return false;
        }
        return true;
    }
    return false;
  }

  /// Canonical center: origin for symmetric domains, the shift for the
  /// shifted ball, the uniform vector for the simplex.
  Vector center() const {
    switch (kind_) {
      case DomainKind::ShiftedBall:
        return shift_;
      case DomainKind::Simplex:
        return Vector(dim_, 1.0 / static_cast<double>(dim_));
      default:
        return Vector(dim_, 0.0);
    }
  }

  /// A minimizer of <x,w> over W, by closed form. Tie-breaking: zero
  /// coordinates of x map to 0 in sign-rule domains; x = 0 maps to center().
  Vector linear_argmin(const Vector& x) const {
    require_dim(x);
    const double nx = norm2(x);
    if (nx <= kInternalTol) return center();
    switch (kind_) {
      case DomainKind::UnitBall:
        return scaled(x, -1.0 / nx);
      case DomainKind::ShiftedBall: {
        Vector w = scaled(x, -1.0 / nx);
        for (std::size_t i = 0; i < dim_; ++i) w[i] += shift_[i];
        return w;
      }
      case DomainKind::Cylinder: {
        Vector w(dim_, 0.0);
        w[0] = -sign_or_zero(x[0]);
        const double tn = tail_norm(x);
        if (tn > kInternalTol) {
          for (std::size_t i = 1; i < dim_; ++i) w[i] = -x[i] / tn;
        }
        return w;
      }
      case DomainKind::CappedBall: {
        Vector w = scaled(x, -1.0 / nx);
        if (w[0] <= cap_) return w;
        Vector out(dim_, 0.0);
        out[0] = cap_;
        const double tn = tail_norm(x);
        if (tn > kInternalTol) {
          const double r = std::sqrt(1.0 - cap_ * cap_);
          for (std::size_t i = 1; i < dim_; ++i) out[i] = -r * x[i] / tn;
        }
        return out;
      }
      case DomainKind::Simplex: {
        std::size_t j = 0;
        for (std::size_t i = 1; i < dim_; ++i) {
          if (x[i] < x[j]) j = i;
        }
        Vector w(dim_, 0.0);
        w[j] = 1.0;
        return w;
      }
      case DomainKind::L1Ball: {
        std::size_t j = 0;
        for (std::size_t i = 1; i < dim_; ++i) {
          if (std::abs(x[i]) > std::abs(x[j])) j = i;
        }
        Vector w(dim_, 0.0);
        w[j] = -sign_or_zero(x[j]);
        return w;
      }
      case DomainKind::Hypercube: {
        Vector w(dim_, 0.0);
        for (std::size_t i = 0; i < dim_; ++i) w[i] = -sign_or_zero(x[i]);
        return w;
      }
    }
    return center();
  }

  /// ||x||_* = max_{w in W} |<w,x>|, by closed form. For the capped ball the
  /// two-sided value is derived from linear_argmin on +-x (no closed form in
  /// terms of norms).
  double dual_norm(const Vector& x) const {
    require_dim(x);
    switch (kind_) {
      case DomainKind::UnitBall:
        return norm2(x);
      case DomainKind::ShiftedBall:
        return std::abs(dot(shift_, x)) + norm2(x);
      case DomainKind::Cylinder:
        return std::abs(x[0]) + tail_norm(x);
      case DomainKind::Simplex:
      case DomainKind::L1Ball:
        return norm_inf(x);
      case DomainKind::Hypercube:
        return norm1(x);
      case DomainKind::CappedBall: {
        const double lo = dot(x, linear_argmin(x));
        Vector neg = scaled(x, -1.0);
        const double hi = -dot(x, linear_argmin(neg));
        return std::max(std::abs(lo), std::abs(hi));
      }
    }
    return 0.0;
  }

  /// Largest mu with {-mu,+mu}^D contained in W, or absent when none exists.
  std::optional<double> corner_set_scale() const {
    const double sd = std::sqrt(static_cast<double>(dim_));
    switch (kind_) {
      case DomainKind::UnitBall:
        return 1.0 / sd;
      case DomainKind::Hypercube:
        return 1.0;
      case DomainKind::Cylinder:
        return 1.0 / std::sqrt(static_cast<double>(dim_ - 1));
      case DomainKind::CappedBall:
        return std::min(cap_, 1.0 / sd);
      case DomainKind::L1Ball:
        return 1.0 / static_cast<double>(dim_);
      case DomainKind::ShiftedBall:
      case DomainKind::Simplex:
        return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  Domain(DomainKind kind, std::size_t dim) : kind_(kind), dim_(dim) {
    if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  }

  void require_dim(const Vector& v) const {
    if (v.size() != dim_) {
      throw std::invalid_argument("vector dimension " + std::to_string(v.size()) +
                                  " != domain dimension " + std::to_string(dim_));
    }
  }

  double tail_norm(const Vector& v) const {
    double s = 0.0;
    for (std::size_t i = 1; i < dim_; ++i) s += v[i] * v[i];
    return std::sqrt(s);
  }

  static double sign_or_zero(double v) {
    if (v > 0.0) return 1.0;
    if (v < 0.0) return -1.0;
    return 0.0;
  }

  DomainKind kind_;
  std::size_t dim_;
  Vector shift_;   // ShiftedBall only
  double cap_ = 0; // CappedBall only
};

}  // namespace blo
