#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "blo/adversary.hpp"

namespace blo {

/// One aggregate mean over a (d,T) grid cell.
struct GridPoint {
  std::size_t d = 0;
  std::uint64_t T = 0;
  double mean = 0.0;
};

/// Least-squares fit of log(mean) = logC + alpha*log d + beta*log T.
struct ScalingFit {
  double alpha = 0.0;
  double beta = 0.0;
  double log_c = 0.0;
  double r2 = 0.0;
  std::size_t cells = 0;
};

inline ScalingFit fit_scaling(const std::vector<GridPoint>& rows) {
  std::set<std::size_t> ds;
  std::set<std::uint64_t> ts;
  for (const auto& r : rows) {
    if (!(r.mean > 0.0)) throw std::invalid_argument("fit_scaling requires positive means");
    ds.insert(r.d);
    ts.insert(r.T);
  }
  if (ds.size() < 3 || ts.size() < 3) {
    throw std::invalid_argument("fit_scaling requires >= 3 distinct d and >= 3 distinct T");
  }

  // Normal equations for the 3-parameter linear model.
  double a[3][3] = {{0}};
  double b[3] = {0};
  for (const auto& r : rows) {
    const double f[3] = {1.0, std::log(static_cast<double>(r.d)),
                         std::log(static_cast<double>(r.T))};
    const double y = std::log(r.mean);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) a[i][j] += f[i] * f[j];
      b[i] += f[i] * y;
    }
  }
  // Gaussian elimination with partial pivoting on the 3x3 system.
  int piv[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int best = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(a[piv[r]][col]) > std::abs(a[piv[best]][col])) best = r;
    }
    std::swap(piv[col], piv[best]);
    const double pivot = a[piv[col]][col];
    if (std::abs(pivot) < 1e-14) throw std::invalid_argument("degenerate grid");
    for (int r = col + 1; r < 3; ++r) {
      const double factor = a[piv[r]][col] / pivot;
      for (int c = col; c < 3; ++c) a[piv[r]][c] -= factor * a[piv[col]][c];
      b[piv[r]] -= factor * b[piv[col]];
    }
  }
  double sol[3];
  for (int row = 2; row >= 0; --row) {
    double rhs = b[piv[row]];
    for (int c = row + 1; c < 3; ++c) rhs -= a[piv[row]][c] * sol[c];
    sol[row] = rhs / a[piv[row]][row];
  }

  ScalingFit fit;
  fit.log_c = sol[0];
  fit.alpha = sol[1];
  fit.beta = sol[2];
  fit.cells = rows.size();

  double y_mean = 0.0;
  for (const auto& r : rows) y_mean += std::log(r.mean);
  y_mean /= static_cast<double>(rows.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (const auto& r : rows) {
    const double y = std::log(r.mean);
    const double pred = fit.log_c + fit.alpha * std::log(static_cast<double>(r.d)) +
                        fit.beta * std::log(static_cast<double>(r.T));
    ss_res += (y - pred) * (y - pred);
    ss_tot += (y - y_mean) * (y - y_mean);
  }
  fit.r2 = ss_tot <= 0.0 ? 1.0 : std::max(0.0, 1.0 - ss_res / ss_tot);
  return fit;
}

/// KL(N(m1,v1) || N(m2,v2)); variances, not standard deviations.
inline double kl_gaussian(double m1, double v1, double m2, double v2) {
  if (!(v1 > 0.0) || !(v2 > 0.0)) throw std::invalid_argument("variances must be positive");
  return 0.5 * (v1 / v2 + (m2 - m1) * (m2 - m1) / v2 - 1.0 + std::log(v2 / v1));
}

/// Bound on the un-halved total-variation integral int |p - q|
/// (twice the usual TV distance; output labels say so).
inline double pinsker_tv_bound(double kl) {
  if (kl < 0.0) throw std::invalid_argument("kl must be nonnegative");
  return std::sqrt(2.0 * kl);
}

/// Checks 1/(w^2 + 1/d) <= d(1 - |w|) + 1, within 1e-12 slack. This converts
/// the reciprocal-quadratic information term of the flat-surface regret
/// analyses into a linear distance-from-the-rim term.
inline bool reciprocal_quadratic_bound_check(double w, std::size_t d) {
  if (!(w >= -1.0 && w <= 1.0)) throw std::invalid_argument("w must lie in [-1,1]");
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  const double dd = static_cast<double>(d);
  const double lhs = 1.0 / (w * w + 1.0 / dd);
  const double rhs = dd * (1.0 - std::abs(w)) + 1.0;
  return lhs <= rhs + 1e-12;
}

/// The reference lower-bound value for each construction, with its explicit
/// constant (0.005, 1/128, 1/16, 1/16) and effective d = D-1 where the
/// construction reserves a noise coordinate.
inline double lower_bound_reference(ConstructionKind kind, std::size_t D, std::uint64_t T) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  if (D < 2) throw std::invalid_argument("constructions require D >= 2");
  const double sqrt_t = std::sqrt(static_cast<double>(T));
  const double d_eff = static_cast<double>(D - 1);
  switch (kind) {
    case ConstructionKind::ShiftedBall:
      return 0.005 * std::min(1.0, d_eff / sqrt_t);
    case ConstructionKind::Cylinder:
      if (static_cast<double>(T) < d_eff * d_eff * d_eff * d_eff / 16.0) {
        throw std::invalid_argument("cylinder bound requires T >= d^4/16");
      }
      return d_eff * sqrt_t / 128.0;
    case ConstructionKind::Simplex:
      return std::min(1.0, std::sqrt(static_cast<double>(D) / static_cast<double>(T))) / 16.0;
    case ConstructionKind::Hypercube:
      if (static_cast<double>(T) < d_eff * d_eff * d_eff * d_eff / 4.0) {
        throw std::invalid_argument("hypercube bound requires T >= d^4/4");
      }
      return d_eff * sqrt_t / 16.0;
  }
  throw std::invalid_argument("unknown construction kind");
}

}  // namespace blo
