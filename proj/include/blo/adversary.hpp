#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blo/errors.hpp"
#include "blo/geometry.hpp"
#include "blo/rng.hpp"
#include "blo/vec.hpp"

namespace blo {

/// A samplable distribution (or oblivious sequence) over loss vectors.
/// Models are immutable after construction except for the BinarySequence
/// cursor, which is single-consumer. Sampling takes the caller's stream, so
/// distinct repetitions may run concurrently with independent streams.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t dim() const = 0;

  /// Draw one loss vector.
  virtual Vector sample(Rng& rng) = 0;

  /// Exact expectation vector. For BinarySequence, the running average of
  /// the emitted prefix.
  virtual Vector mean() const = 0;

  /// True when mean() is an exact distribution parameter (not a realized
  /// prefix average); drives the harness's variance-reduced scoring.
  virtual bool has_exact_mean() const { return true; }

  virtual bool is_binary() const { return false; }

  /// Exact {0,1}^D draw for the rational loss channel.
  virtual std::vector<int> sample_binary(Rng&) {
    throw incompatible_error(kind() + " does not provide the exact binary channel");
  }

  /// CSV rendering of the per-repetition randomization ("+-+", "J=3", "").
  virtual std::string sigma_or_j() const { return ""; }
};

inline std::string sigma_string(const std::vector<int>& sigma) {
  std::string s;
  s.reserve(sigma.size());
  for (int v : sigma) s.push_back(v > 0 ? '+' : '-');
  return s;
}

/// Independent Gaussian coordinates: mean vector plus isotropic per-coordinate
/// variance. Used for upper-bound experiments where only the mean and the
/// second moment matter.
class GenericGaussian final : public LossModel {
 public:
  GenericGaussian(Vector mean, double coord_variance)
      : mean_(std::move(mean)), var_(coord_variance) {
    if (mean_.empty()) throw std::invalid_argument("empty mean");
    if (var_ < 0.0) throw std::invalid_argument("negative variance");
  }

  std::string kind() const override { return "generic_gaussian"; }
  std::size_t dim() const override { return mean_.size(); }

  Vector sample(Rng& rng) override {
    Vector x(mean_);
    if (var_ > 0.0) {
      const double sd = std::sqrt(var_);
      for (double& v : x) v += sd * rng.normal();
    }
    return x;
  }

  Vector mean() const override { return mean_; }

  double coord_variance() const { return var_; }

  /// c with E||x||^2 = c^2, known in closed form for this model.
  double second_moment_c() const {
    double m2 = 0.0;
    for (double v : mean_) m2 += v * v;
    return std::sqrt(m2 + static_cast<double>(mean_.size()) * var_);
  }

 private:
  Vector mean_;
  double var_;
};

/// Coordinate 0 is N(0, 1/36) noise, coordinates 1..d are fixed at mu*sigma.
/// Lives in ambient dimension D with effective d = D-1.
class ShiftedBallConstruction final : public LossModel {
 public:
  ShiftedBallConstruction(std::size_t dim, double mu, std::vector<int> sigma)
      : dim_(dim), mu_(mu), sigma_(std::move(sigma)) {
    const std::size_t d = effective_d(dim);
    if (sigma_.size() != d) throw std::invalid_argument("sigma must have length D-1");
    if (!(mu_ >= 0.0 && mu_ <= 0.5 / std::sqrt(static_cast<double>(d)) + kInternalTol)) {
      throw std::invalid_argument("shifted-ball construction requires mu <= 1/(2*sqrt(d))");
    }
  }

  static std::size_t effective_d(std::size_t dim) {
    if (dim < 2) throw std::invalid_argument("construction requires D >= 2");
    return dim - 1;
  }

  std::string kind() const override { return "shifted_ball_construction"; }
  std::size_t dim() const override { return dim_; }

  Vector sample(Rng& rng) override {
    Vector x = mean();
    x[0] = rng.normal(0.0, 1.0 / 6.0);
    return x;
  }

  Vector mean() const override {
    Vector m(dim_, 0.0);
    for (std::size_t i = 1; i < dim_; ++i) m[i] = mu_ * sigma_[i - 1];
    return m;
  }

  std::string sigma_or_j() const override { return sigma_string(sigma_); }
  double mu() const { return mu_; }

 private:
  std::size_t dim_;
  double mu_;
  std::vector<int> sigma_;
};

/// Coordinate 0 is N(-1/4, 1/16), the tail is N(mu*sigma, (1/16d) I).
class CylinderConstruction final : public LossModel {
 public:
  CylinderConstruction(std::size_t dim, double mu, std::vector<int> sigma)
      : dim_(dim), mu_(mu), sigma_(std::move(sigma)) {
    const std::size_t d = ShiftedBallConstruction::effective_d(dim);
    if (sigma_.size() != d) throw std::invalid_argument("sigma must have length D-1");
    if (!(mu_ >= 0.0 && mu_ <= 0.25 / std::sqrt(static_cast<double>(d)) + kInternalTol)) {
      throw std::invalid_argument("cylinder construction requires mu <= 1/(4*sqrt(d))");
    }
  }

  std::string kind() const override { return "cylinder_construction"; }
  std::size_t dim() const override { return dim_; }

  Vector sample(Rng& rng) override {
    const std::size_t d = dim_ - 1;
    Vector x(dim_);
    x[0] = rng.normal(-0.25, 0.25);
    const double sd = 0.25 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 1; i < dim_; ++i) x[i] = rng.normal(mu_ * sigma_[i - 1], sd);
    return x;
  }

  Vector mean() const override {
    Vector m(dim_, 0.0);
    m[0] = -0.25;
    for (std::size_t i = 1; i < dim_; ++i) m[i] = mu_ * sigma_[i - 1];
    return m;
  }

  std::string sigma_or_j() const override { return sigma_string(sigma_); }
  double mu() const { return mu_; }

 private:
  std::size_t dim_;
  double mu_;
  std::vector<int> sigma_;
};

/// x ~ N(-mu e_J, (1/4) I) on the full ambient dimension; J is 1-based.
class SimplexConstruction final : public LossModel {
 public:
  SimplexConstruction(std::size_t dim, double mu, std::size_t j)
      : dim_(dim), mu_(mu), j_(j) {
    if (dim_ < 2) throw std::invalid_argument("construction requires D >= 2");
    if (j_ < 1 || j_ > dim_) throw std::invalid_argument("J must be in 1..D");
    if (!(mu_ >= 0.0 && mu_ <= 0.5 + kInternalTol)) {
      throw std::invalid_argument("simplex construction requires mu <= 1/2");
    }
  }

  std::string kind() const override { return "simplex_construction"; }
  std::size_t dim() const override { return dim_; }

  Vector sample(Rng& rng) override {
    Vector x(dim_);
    for (std::size_t i = 0; i < dim_; ++i) x[i] = rng.normal(0.0, 0.5);
    x[j_ - 1] -= mu_;
    return x;
  }

  Vector mean() const override {
    Vector m(dim_, 0.0);
    m[j_ - 1] = -mu_;
    return m;
  }

  std::string sigma_or_j() const override { return "J=" + std::to_string(j_); }
  double mu() const { return mu_; }
  std::size_t j() const { return j_; }

 private:
  std::size_t dim_;
  double mu_;
  std::size_t j_;
};

/// Coordinate 0 is N(-1/4, 1/16), the tail is N(mu*sigma, (1/16d^2) I).
class HypercubeConstruction final : public LossModel {
 public:
  HypercubeConstruction(std::size_t dim, double mu, std::vector<int> sigma)
      : dim_(dim), mu_(mu), sigma_(std::move(sigma)) {
    const std::size_t d = ShiftedBallConstruction::effective_d(dim);
    if (sigma_.size() != d) throw std::invalid_argument("sigma must have length D-1");
    if (!(mu_ >= 0.0 && mu_ <= 0.25 / static_cast<double>(d) + kInternalTol)) {
      throw std::invalid_argument("hypercube construction requires mu <= 1/(4d)");
    }
  }

  std::string kind() const override { return "hypercube_construction"; }
  std::size_t dim() const override { return dim_; }

  Vector sample(Rng& rng) override {
    const std::size_t d = dim_ - 1;
    Vector x(dim_);
    x[0] = rng.normal(-0.25, 0.25);
    const double sd = 0.25 / static_cast<double>(d);
    for (std::size_t i = 1; i < dim_; ++i) x[i] = rng.normal(mu_ * sigma_[i - 1], sd);
    return x;
  }

  Vector mean() const override {
    Vector m(dim_, 0.0);
    m[0] = -0.25;
    for (std::size_t i = 1; i < dim_; ++i) m[i] = mu_ * sigma_[i - 1];
    return m;
  }

  std::string sigma_or_j() const override { return sigma_string(sigma_); }
  double mu() const { return mu_; }

 private:
  std::size_t dim_;
  double mu_;
  std::vector<int> sigma_;
};

/// Oblivious sequence of loss vectors in {0,1}^D: either an explicit list
/// (exhaustion is an error) or a generator callback. Single-consumer.
class BinarySequence final : public LossModel {
 public:
  using Generator = std::function<std::vector<int>(Rng&)>;

  BinarySequence(std::size_t dim, std::vector<std::vector<int>> sequence)
      : dim_(dim), sequence_(std::move(sequence)) {
    for (const auto& x : sequence_) validate(x);
  }

  BinarySequence(std::size_t dim, Generator gen) : dim_(dim), gen_(std::move(gen)) {}

  /// Uniform i.i.d. rows of {0,1}^D.
  static std::unique_ptr<BinarySequence> uniform(std::size_t dim) {
    return std::make_unique<BinarySequence>(dim, [dim](Rng& rng) {
      std::vector<int> x(dim);
      for (auto& v : x) v = static_cast<int>(rng.next_u64() & 1u);
      return x;
    });
  }

  std::string kind() const override { return "binary_sequence"; }
  std::size_t dim() const override { return dim_; }
  bool has_exact_mean() const override { return false; }
  bool is_binary() const override { return true; }

  std::vector<int> sample_binary(Rng& rng) override {
    std::vector<int> x;
    if (gen_) {
      x = gen_(rng);
      validate(x);
    } else {
      if (cursor_ >= sequence_.size()) throw std::runtime_error("binary sequence exhausted");
      x = sequence_[cursor_++];
    }
    if (emitted_sum_.empty()) emitted_sum_.assign(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) emitted_sum_[i] += x[i];
    ++emitted_;
    return x;
  }

  Vector sample(Rng& rng) override {
    const auto x = sample_binary(rng);
    Vector out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<double>(x[i]);
    return out;
  }

  Vector mean() const override {
    if (emitted_ == 0) throw std::runtime_error("binary sequence has emitted nothing");
    Vector m(emitted_sum_);
    for (double& v : m) v /= static_cast<double>(emitted_);
    return m;
  }

 private:
  void validate(const std::vector<int>& x) const {
    if (x.size() != dim_) throw std::invalid_argument("binary loss dimension mismatch");
    for (int v : x) {
      if (v != 0 && v != 1) throw std::invalid_argument("binary loss entries must be 0/1");
    }
  }

  std::size_t dim_;
  std::vector<std::vector<int>> sequence_;
  Generator gen_;
  std::size_t cursor_ = 0;
  std::size_t emitted_ = 0;
  Vector emitted_sum_;
};

/// The construction family selector used by mu rules and reference bounds.
enum class ConstructionKind { ShiftedBall, Cylinder, Simplex, Hypercube };

inline const char* construction_kind_name(ConstructionKind k) {
  switch (k) {
    case ConstructionKind::ShiftedBall: return "shifted_ball_construction";
    case ConstructionKind::Cylinder: return "cylinder_construction";
    case ConstructionKind::Simplex: return "simplex_construction";
    case ConstructionKind::Hypercube: return "hypercube_construction";
  }
  return "?";
}

/// The per-construction mu for effective dimension d and horizon T.
///
/// Shifted ball: mu = (1/2)sqrt(d/144T) when 1/sqrt(d) > sqrt(d/144T),
/// else 1/(2 sqrt d). Cylinder: mu = (1/16)sqrt(d/T), needs T >= d^4/16.
/// Simplex: mu = (1/4)sqrt(d/T) when T >= d/4, else 1/2. Hypercube:
/// mu = (1/8)sqrt(1/T), needs T >= d^4/4.
inline double select_mu(ConstructionKind kind, std::size_t d, std::uint64_t T) {
  if (d < 1 || T < 1) throw std::invalid_argument("select_mu requires d >= 1, T >= 1");
  const double dd = static_cast<double>(d);
  const double tt = static_cast<double>(T);
  switch (kind) {
    case ConstructionKind::ShiftedBall: {
      const double small = std::sqrt(dd / (144.0 * tt));
      if (1.0 / std::sqrt(dd) > small) return 0.5 * small;
      return 0.5 / std::sqrt(dd);
    }
    case ConstructionKind::Cylinder: {
      if (tt < dd * dd * dd * dd / 16.0) {
        throw std::invalid_argument("cylinder construction requires T >= d^4/16");
      }
      return std::sqrt(dd / tt) / 16.0;
    }
    case ConstructionKind::Simplex: {
      if (tt < dd / 4.0) return 0.5;
      return 0.25 * std::sqrt(dd / tt);
    }
    case ConstructionKind::Hypercube: {
      if (tt < dd * dd * dd * dd / 4.0) {
        throw std::invalid_argument("hypercube construction requires T >= d^4/4");
      }
      return 0.125 / std::sqrt(tt);
    }
  }
  throw std::invalid_argument("unknown construction kind");
}

/// One z row of the sub-Gaussian tail check.
struct TailRow {
  double z = 0.0;
  std::uint64_t exceed_count = 0;
  double frequency = 0.0;
  double bound = 0.0;      // 2 exp(-z^2/2)
  double threshold = 0.0;  // bound + 3 sqrt(bound/n), one-sided slack
  bool violated = false;
};

struct ValidityReport {
  double mean_dual_norm = 0.0;
  bool mean_check_passed = false;
  std::uint64_t tail_samples = 0;
  std::uint64_t tail_violations = 0;  // number of violated z rows
  std::vector<TailRow> rows;
  bool passed = false;
};

/// Checks the two validity conditions against a domain: exact mean dual norm
/// <= 1, and Monte Carlo tail frequencies below 2exp(-z^2/2) plus a
/// three-sigma slack so the probabilistic check has vanishing false-alarm
/// rate.
inline ValidityReport check_validity(LossModel& model, const Domain& domain,
                                     std::uint64_t n_samples,
                                     const std::vector<double>& z_grid, Rng& rng) {
  if (n_samples < 10000) throw std::invalid_argument("check_validity requires n_samples >= 1e4");
  for (double z : z_grid) {
    if (z < 1.0) throw std::invalid_argument("tail grid requires z >= 1");
  }
  ValidityReport report;
  report.mean_dual_norm = domain.dual_norm(model.mean());
  report.mean_check_passed = report.mean_dual_norm <= 1.0 + kInternalTol;
  report.tail_samples = n_samples;
  report.rows.resize(z_grid.size());
  for (std::size_t k = 0; k < z_grid.size(); ++k) report.rows[k].z = z_grid[k];

  std::vector<std::uint64_t> counts(z_grid.size(), 0);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    const double dn = domain.dual_norm(model.sample(rng));
    for (std::size_t k = 0; k < z_grid.size(); ++k) {
      if (dn > z_grid[k]) ++counts[k];
    }
  }
  for (std::size_t k = 0; k < z_grid.size(); ++k) {
    TailRow& row = report.rows[k];
    row.exceed_count = counts[k];
    row.frequency = static_cast<double>(counts[k]) / static_cast<double>(n_samples);
    row.bound = 2.0 * std::exp(-row.z * row.z / 2.0);
    row.threshold = row.bound + 3.0 * std::sqrt(row.bound / static_cast<double>(n_samples));
    row.violated = row.frequency > row.threshold;
    if (row.violated) ++report.tail_violations;
  }
  report.passed = report.mean_check_passed && report.tail_violations == 0;
  return report;
}

/// Rescales an inner model by 1/(p sqrt(log T)) and replaces the rare samples
/// with dual norm above 1/2 by a cached conditional-mean estimate, making the
/// output essentially bounded. The clamp value is estimated once by rejection
/// at construction; if no calibration sample exceeds 1/2, it stays at zero
/// (clamping then almost never fires).
class ShrinkToBounded final : public LossModel {
 public:
  ShrinkToBounded(std::shared_ptr<LossModel> inner, Domain domain, std::uint64_t T,
                  double p, std::uint64_t calibration_samples, Rng& rng)
      : inner_(std::move(inner)), domain_(std::move(domain)) {
    if (T <= 1) throw std::invalid_argument("shrink transform requires T > 1");
    if (p <= 0.0) throw std::invalid_argument("shrink transform requires p > 0");
    if (domain_.dim() != inner_->dim()) throw std::invalid_argument("domain/model dimension mismatch");
    scale_ = 1.0 / (p * std::sqrt(std::log(static_cast<double>(T))));
    clamp_value_.assign(inner_->dim(), 0.0);
    std::uint64_t exceed = 0;
    Vector sum(inner_->dim(), 0.0);
    for (std::uint64_t i = 0; i < calibration_samples; ++i) {
      Vector x = scaled(inner_->sample(rng), scale_);
      if (domain_.dual_norm(x) >= 0.5) {
        ++exceed;
        add_inplace(sum, x);
      }
    }
    calibration_samples_ = calibration_samples;
    clamp_probability_ = calibration_samples == 0
                             ? 0.0
                             : static_cast<double>(exceed) / static_cast<double>(calibration_samples);
    if (exceed > 0) {
      clamp_value_ = scaled(sum, 1.0 / static_cast<double>(exceed));
      if (domain_.dual_norm(clamp_value_) > 1.0) {
        throw std::runtime_error(
            "shrink transform clamp value has dual norm > 1; p is too small");
      }
    }
  }

  std::string kind() const override { return "shrink_to_bounded(" + inner_->kind() + ")"; }
  std::size_t dim() const override { return inner_->dim(); }

  Vector sample(Rng& rng) override {
    Vector x = scaled(inner_->sample(rng), scale_);
    if (domain_.dual_norm(x) <= 0.5) return x;
    return clamp_value_;
  }

  Vector mean() const override { return scaled(inner_->mean(), scale_); }

  std::string sigma_or_j() const override { return inner_->sigma_or_j(); }

  double scale() const { return scale_; }
  double clamp_probability() const { return clamp_probability_; }
  std::uint64_t calibration_samples() const { return calibration_samples_; }
  const Vector& clamp_value() const { return clamp_value_; }

 private:
  std::shared_ptr<LossModel> inner_;
  Domain domain_;
  double scale_ = 0.0;
  Vector clamp_value_;
  double clamp_probability_ = 0.0;
  std::uint64_t calibration_samples_ = 0;
};

inline ShrinkToBounded shrink_to_bounded(std::shared_ptr<LossModel> inner, Domain domain,
                                         std::uint64_t T, double p,
                                         std::uint64_t calibration_samples, Rng& rng) {
  return ShrinkToBounded(std::move(inner), std::move(domain), T, p, calibration_samples, rng);
}

}  // namespace blo
