#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blo/errors.hpp"
#include "blo/geometry.hpp"
#include "blo/rational.hpp"
#include "blo/rng.hpp"
#include "blo/vec.hpp"

namespace blo {

/// What the harness must deliver after each round.
enum class Feedback {
  Bandit,       // scalar <x_t, w_t> as a double
  FullInfo,     // the whole loss vector (full-information baseline)
  ExactBandit,  // scalar <x_t, w_t> as an exact rational
};

/// A stateful strategy with a choose/observe round interface and an optional
/// final answer. Player state is single-owner and mutated sequentially within
/// one run; distinct runs own distinct instances.
class Player {
 public:
  virtual ~Player() = default;

  virtual std::string kind() const = 0;
  virtual Feedback feedback() const { return Feedback::Bandit; }

  virtual Vector choose(Rng& rng) = 0;
  virtual void observe(double /*v*/) {}
  virtual void observe_full(const Vector& /*x*/) {
    throw std::logic_error(kind() + " is not a full-information player");
  }

  virtual RationalVector choose_exact(Rng&) {
    throw incompatible_error(kind() + " does not use the exact channel");
  }
  virtual void observe_exact(const Rational& /*v*/) {
    throw incompatible_error(kind() + " does not use the exact channel");
  }

  /// Final answer for the error protocol; players without one return nullopt
  /// and the harness falls back to the average iterate.
  virtual std::optional<Vector> finalize(const Domain&) { return std::nullopt; }
};

/// x_tilde = (v/mu) * sigma, the unbiased one-round loss-vector estimate.
inline Vector estimate_loss_vector(double v, const std::vector<int>& sigma, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("estimate_loss_vector requires mu > 0");
  Vector x(sigma.size());
  const double s = v / mu;
  for (std::size_t i = 0; i < sigma.size(); ++i) x[i] = s * sigma[i];
  return x;
}

/// Plays mu * sigma for a fresh uniform sigma each round, accumulates the
/// unbiased estimates, and answers with the linear minimizer of their
/// average.
class CornerEstimator final : public Player {
 public:
  CornerEstimator(std::size_t dim, double mu) : mu_(mu), sum_(dim, 0.0) {
    if (!(mu > 0.0)) throw std::invalid_argument("corner estimator requires mu > 0");
  }

  /// mu defaults to the domain's corner-set scale.
  static std::unique_ptr<CornerEstimator> for_domain(const Domain& domain,
                                                     std::optional<double> mu = std::nullopt) {
    const auto scale = domain.corner_set_scale();
    if (!scale) {
      throw incompatible_error("corner estimator needs a domain containing {-mu,mu}^D; " +
                               domain.name() + " has no corner set");
    }
    const double m = mu.value_or(*scale);
    if (m > *scale + kInternalTol) {
      throw incompatible_error("corner estimator mu exceeds the domain's corner-set scale");
    }
    return std::make_unique<CornerEstimator>(domain.dim(), m);
  }

  std::string kind() const override { return "corner_estimator"; }

  Vector choose(Rng& rng) override {
    sigma_ = rng.sign_vector(sum_.size());
    Vector w(sum_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = mu_ * sigma_[i];
    return w;
  }

  void observe(double v) override {
    add_inplace(sum_, estimate_loss_vector(v, sigma_, mu_));
    ++rounds_;
  }

  std::optional<Vector> finalize(const Domain& domain) override {
    if (rounds_ == 0) throw std::runtime_error("corner estimator finalize with zero rounds");
    return domain.linear_argmin(scaled(sum_, 1.0 / static_cast<double>(rounds_)));
  }

  double mu() const { return mu_; }

 private:
  double mu_;
  std::vector<int> sigma_;
  Vector sum_;
  std::uint64_t rounds_ = 0;
};

/// Multiplicative weights over the simplex: play normalized weights, then
/// w_i <- w_i * exp(-eta * x_i) on the observed loss vector.
class Hedge final : public Player {
 public:
  Hedge(std::size_t dim, double eta) : eta_(eta), weights_(dim, 1.0) {
    if (!(eta > 0.0)) throw std::invalid_argument("hedge requires eta > 0");
  }

  /// eta = sqrt(8 ln d / T) for a known horizon.
  static double default_eta(std::size_t dim, std::uint64_t T) {
    if (dim < 2) throw std::invalid_argument("hedge requires d >= 2");
    return std::sqrt(8.0 * std::log(static_cast<double>(dim)) / static_cast<double>(T));
  }

  std::string kind() const override { return "hedge"; }
  Feedback feedback() const override { return Feedback::FullInfo; }

  Vector choose(Rng&) override { return choose(); }

  Vector choose() const {
    double sum = 0.0;
    for (double w : weights_) sum += w;
    Vector p(weights_);
    for (double& v : p) v /= sum;
    return p;
  }

  void observe_full(const Vector& x) override { update(x); }

  void update(const Vector& x) {
    check_same_dim(x, weights_);
    if (!all_finite(x)) throw std::invalid_argument("hedge loss entries must be finite");
    double sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      weights_[i] *= std::exp(-eta_ * x[i]);
      sum += weights_[i];
    }
    // Rescale to dodge underflow; plays are scale-invariant.
    for (double& w : weights_) w /= sum;
  }

  double eta() const { return eta_; }
  const Vector& weights() const { return weights_; }

 private:
  double eta_;
  Vector weights_;
};

/// Importance-weighted exponential weights over the basis-vector arms
/// e_1..e_D. Observed losses are clipped to [-1,1] and mapped affinely to
/// [0,1]; the clip count is recorded.
class Exp3 final : public Player {
 public:
  Exp3(std::size_t dim, double eta, double gamma)
      : eta_(eta), gamma_(gamma), weights_(dim, 1.0) {
    if (dim < 2) throw std::invalid_argument("exp3 requires d >= 2");
    if (!(eta > 0.0) || gamma < 0.0 || gamma > 1.0) {
      throw std::invalid_argument("exp3 requires eta > 0 and gamma in [0,1]");
    }
  }

  static double default_gamma(std::size_t dim, std::uint64_t T) {
    const double d = static_cast<double>(dim);
    const double g = std::sqrt(d * std::log(d) / ((std::exp(1.0) - 1.0) * static_cast<double>(T)));
    return std::min(1.0, g);
  }

  static std::unique_ptr<Exp3> with_horizon(std::size_t dim, std::uint64_t T) {
    const double gamma = default_gamma(dim, T);
    return std::make_unique<Exp3>(dim, gamma / static_cast<double>(dim), gamma);
  }

  std::string kind() const override { return "exp3"; }

  Vector choose(Rng& rng) override {
    const auto probs = distribution();
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t arm = probs.size() - 1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) {
        arm = i;
        break;
      }
    }
    last_arm_ = arm;
    last_prob_ = probs[arm];
    Vector w(probs.size(), 0.0);
    w[arm] = 1.0;
    return w;
  }

  void observe(double v) override {
    double clipped = v;
    if (clipped > 1.0 || clipped < -1.0) {
      ++clip_count_;
      clipped = std::clamp(clipped, -1.0, 1.0);
    }
    const double loss01 = (clipped + 1.0) / 2.0;
    const double estimate = loss01 / last_prob_;
    weights_[last_arm_] *= std::exp(-eta_ * estimate);
    double sum = 0.0;
    for (double w : weights_) sum += w;
    for (double& w : weights_) w /= sum;
  }

  Vector distribution() const {
    double sum = 0.0;
    for (double w : weights_) sum += w;
    const double k = static_cast<double>(weights_.size());
    Vector p(weights_.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = (1.0 - gamma_) * weights_[i] / sum + gamma_ / k;
    }
    return p;
  }

  std::uint64_t clip_count() const { return clip_count_; }
  double eta() const { return eta_; }
  double gamma() const { return gamma_; }

 private:
  double eta_;
  double gamma_;
  Vector weights_;
  std::size_t last_arm_ = 0;
  double last_prob_ = 1.0;
  std::uint64_t clip_count_ = 0;
};

/// Plays one stored point every round.
class FixedPoint final : public Player {
 public:
  explicit FixedPoint(Vector w) : w_(std::move(w)) {}

  std::string kind() const override { return "fixed_point"; }
  Vector choose(Rng&) override { return w_; }
  const Vector& point() const { return w_; }

 private:
  Vector w_;
};

/// Result of the decimal probe encoding of a simplex point.
struct DigitEncoding {
  RationalVector w_hat;    // the input, converted exactly
  RationalVector w_prime;  // clip_p(w_hat) + probe digits
  RationalVector w;        // w_prime / ||w_prime||_1, on the simplex exactly
  Rational l1;             // ||w_prime||_1
};

/// Truncation toward zero at p decimal places, exact.
inline Rational clip_decimal(const Rational& r, unsigned p) {
  const BigInt scale = pow10_int(p);
  BigInt q = numerator(r) * scale / denominator(r);  // integer division truncates toward zero
  return Rational(q, scale);
}

/// clip_p the entries of a simplex point and add the probe
/// (10^-p-1, ..., 10^-p-d); returns w_prime, its exact l1 norm, and the
/// normalized point actually played.
///
/// The l1 norm provably stays within (d + 1/9) * 10^-p of 1, which is
/// asserted here; with p = ceil(log10 T) that is (d + 1/9)/T per round.
inline DigitEncoding digit_encode(const Vector& w_hat, unsigned p) {
  if (p < 1) throw std::invalid_argument("digit_encode requires p >= 1");
  const std::size_t d = w_hat.size();
  double sum = 0.0;
  for (double v : w_hat) {
    if (!(v >= -1e-9 && v <= 1.0 + 1e-9)) {
      throw std::invalid_argument("digit_encode input entry outside [0,1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("digit_encode input is not on the simplex");
  }

  DigitEncoding enc;
  enc.w_hat.reserve(d);
  enc.w_prime.reserve(d);
  const BigInt probe_scale = pow10_int(p + static_cast<unsigned>(d));
  for (std::size_t i = 0; i < d; ++i) {
    Rational r = rational_from_double(w_hat[i]);
    if (r < 0) r = 0;  // sub-tolerance float dust
    enc.w_hat.push_back(r);
    Rational clipped = clip_decimal(r, p);
    clipped += Rational(pow10_int(static_cast<unsigned>(d - 1 - i)), probe_scale);
    enc.w_prime.push_back(std::move(clipped));
  }
  enc.l1 = 0;
  for (const auto& v : enc.w_prime) enc.l1 += v;

  const Rational dev = enc.l1 - 1;
  const Rational max_dev =
      Rational(BigInt(9 * static_cast<long>(d) + 1), 9 * pow10_int(p)) + Rational(1, 1000000000);
  if ((dev < 0 ? Rational(-dev) : dev) > max_dev) {
    throw std::runtime_error("digit_encode l1 norm drifted outside its provable band");
  }

  enc.w.reserve(d);
  for (const auto& v : enc.w_prime) enc.w.push_back(v / enc.l1);
  return enc;
}

/// Reads x in {0,1}^d off the digits at decimal places p+1..p+d of
/// <x, w_prime>. Throws if any probed digit is outside {0,1}.
inline std::vector<int> digit_decode(const Rational& scaled_loss, unsigned p, std::size_t d) {
  if (scaled_loss < 0) throw std::runtime_error("digit_decode: negative loss channel");
  const BigInt shifted = rational_floor(scaled_loss * Rational(pow10_int(p + static_cast<unsigned>(d))));
  std::vector<int> x(d);
  BigInt rest = shifted;
  for (std::size_t i = d; i-- > 0;) {
    const BigInt digit = rest % 10;
    rest /= 10;
    if (digit != 0 && digit != 1) {
      throw std::runtime_error("digit_decode: probed digit outside {0,1}; corrupted loss channel");
    }
    x[i] = static_cast<int>(digit);
  }
  return x;
}

/// Full-information recovery over the bandit scalar: wraps Hedge, perturbs
/// its play with the decimal probe, and reconstructs the exact binary loss
/// vector from the observed rational loss. Refuses the floating channel.
class DigitDecoder final : public Player {
 public:
  DigitDecoder(std::size_t dim, unsigned p, double eta)
      : p_(p), hedge_(dim, eta), dim_(dim) {}

  /// p = ceil(log10 T).
  static unsigned default_p(std::uint64_t T) {
    unsigned p = 0;
    std::uint64_t pow = 1;
    while (pow < T) {
      pow *= 10;
      ++p;
    }
    return std::max(1u, p);
  }

  static std::unique_ptr<DigitDecoder> with_horizon(std::size_t dim, std::uint64_t T) {
    return std::make_unique<DigitDecoder>(dim, default_p(T), Hedge::default_eta(dim, T));
  }

  std::string kind() const override { return "digit_decoder"; }
  Feedback feedback() const override { return Feedback::ExactBandit; }

  Vector choose(Rng&) override {
    throw incompatible_error("digit decoder refuses the floating channel");
  }

  RationalVector choose_exact(Rng&) override {
    enc_ = digit_encode(hedge_.choose(), p_);
    return enc_.w;
  }

  void observe_exact(const Rational& v) override {
    const Rational scaled = v * enc_.l1;
    const std::vector<int> x = digit_decode(scaled, p_, dim_);
    last_decoded_ = x;
    Vector xd(dim_);
    for (std::size_t i = 0; i < dim_; ++i) xd[i] = static_cast<double>(x[i]);
    hedge_.update(xd);

    played_loss_ += v;
    const Rational hedge_v = dot(x, enc_.w_hat);
    hedge_loss_ += hedge_v;
    Rational diff = v - hedge_v;
    if (diff < 0) diff = -diff;
    if (diff > max_round_diff_) max_round_diff_ = diff;
    ++rounds_;
  }

  unsigned p() const { return p_; }
  const Hedge& inner_hedge() const { return hedge_; }

  /// Exact cumulative loss of the played (perturbed) points.
  const Rational& played_loss() const { return played_loss_; }
  /// Exact cumulative loss the inner Hedge iterates would have incurred.
  const Rational& hedge_loss() const { return hedge_loss_; }
  const Rational& max_round_coupling_diff() const { return max_round_diff_; }
  const std::vector<int>& last_decoded() const { return last_decoded_; }
  std::uint64_t rounds() const { return rounds_; }

 private:
  unsigned p_;
  Hedge hedge_;
  std::size_t dim_;
  DigitEncoding enc_;
  std::vector<int> last_decoded_;
  Rational played_loss_ = 0;
  Rational hedge_loss_ = 0;
  Rational max_round_diff_ = 0;
  std::uint64_t rounds_ = 0;
};

}  // namespace blo
