#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "blo/adversary.hpp"
#include "blo/player.hpp"
#include "blo/selfcheck.hpp"

using namespace blo;

TEST_CASE("corner estimator draws uniform corners") {
  auto player = CornerEstimator::for_domain(Domain::unit_ball(2), 0.5);
  Rng rng(31);
  std::map<std::pair<int, int>, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Vector w = player->choose(rng);
    REQUIRE(std::abs(std::abs(w[0]) - 0.5) < 1e-15);
    REQUIRE(std::abs(std::abs(w[1]) - 0.5) < 1e-15);
    counts[{w[0] > 0 ? 1 : -1, w[1] > 0 ? 1 : -1}]++;
    player->observe(0.0);
  }
  const double stderr_freq = std::sqrt(0.25 * 0.75 / n);
  for (const auto& [corner, count] : counts) {
    CHECK(std::abs(static_cast<double>(count) / n - 0.25) <= 3.0 * stderr_freq);
  }
}

TEST_CASE("corner estimator respects corner-set preconditions") {
  auto cube = CornerEstimator::for_domain(Domain::hypercube(3));
  Rng rng(5);
  const Vector w = cube->choose(rng);
  for (double v : w) CHECK(std::abs(v) == 1.0);

  CHECK_THROWS_AS(CornerEstimator::for_domain(Domain::simplex(3)), incompatible_error);
  CHECK_THROWS_AS(CornerEstimator::for_domain(Domain::shifted_ball(3)), incompatible_error);
  CHECK_THROWS_AS(CornerEstimator::for_domain(Domain::unit_ball(4), 0.9), incompatible_error);
}

TEST_CASE("estimate_loss_vector identities") {
  CHECK(estimate_loss_vector(0.0, {1, -1}, 0.5) == Vector{0.0, -0.0});

  // Enumerate the four sign vectors at d=2, x=(1,2), mu=1: the estimator mean
  // recovers x and the mean of ||x_tilde||^2 is d * ||x||^2 = 10.
  const Vector x = {1.0, 2.0};
  Vector mean_sum(2, 0.0);
  double sq_sum = 0.0;
  for (int s0 : {-1, 1}) {
    for (int s1 : {-1, 1}) {
      const std::vector<int> sigma = {s0, s1};
      const double v = x[0] * s0 + x[1] * s1;  // mu = 1
      const Vector est = estimate_loss_vector(v, sigma, 1.0);
      add_inplace(mean_sum, est);
      sq_sum += est[0] * est[0] + est[1] * est[1];
    }
  }
  CHECK(mean_sum[0] / 4.0 == 1.0);
  CHECK(mean_sum[1] / 4.0 == 2.0);
  CHECK(sq_sum / 4.0 == 10.0);

  CHECK_THROWS_AS(estimate_loss_vector(1.0, {1}, 0.0), std::invalid_argument);
}

TEST_CASE("enumeration identities hold exactly in rational arithmetic") {
  CHECK(estimator_identity_suite_pass(2, 8));
}

TEST_CASE("enumeration identities on the float path at mu = 1/sqrt(d)") {
  // The irrational corner scale only exists in double arithmetic; the
  // enumerated mean and second moment still land within rounding noise.
  Rng rng(2718);
  for (std::size_t d = 2; d <= 6; ++d) {
    const double mu = 1.0 / std::sqrt(static_cast<double>(d));
    for (int rep = 0; rep < 10; ++rep) {
      Vector x(d);
      for (double& v : x) v = 2.0 * rng.uniform() - 1.0;
      Vector mean_sum(d, 0.0);
      double sq_sum = 0.0;
      const std::uint64_t combos = std::uint64_t{1} << d;
      for (std::uint64_t mask = 0; mask < combos; ++mask) {
        std::vector<int> sigma(d);
        double v = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          sigma[i] = (mask & (std::uint64_t{1} << i)) ? 1 : -1;
          v += x[i] * mu * sigma[i];
        }
        const Vector est = estimate_loss_vector(v, sigma, mu);
        add_inplace(mean_sum, est);
        for (double e : est) sq_sum += e * e;
      }
      double norm_sq = 0.0;
      for (double v : x) norm_sq += v * v;
      for (std::size_t i = 0; i < d; ++i) {
        REQUIRE(std::abs(mean_sum[i] / combos - x[i]) <= 1e-12);
      }
      REQUIRE(std::abs(sq_sum / combos - static_cast<double>(d) * norm_sq) <=
              1e-12 * static_cast<double>(d) * std::max(1.0, norm_sq));
    }
  }
}

TEST_CASE("noisy second moment blows up by d/mu^2 exactly") {
  for (std::size_t d : {2, 4}) {
    for (const Rational& mu : {Rational(1, 10), Rational(1, 2)}) {
      for (const auto& x : rational_grid_points(d)) {
        REQUIRE(second_moment_noise_exact(x, mu));
      }
    }
  }
}

TEST_CASE("corner estimator finalize") {
  // Zero rounds is an error; a single zero-loss round lands on the center.
  {
    auto p = CornerEstimator::for_domain(Domain::unit_ball(2));
    CHECK_THROWS_AS(p->finalize(Domain::unit_ball(2)), std::runtime_error);
    Rng rng(3);
    p->choose(rng);
    p->observe(0.0);
    CHECK(p->finalize(Domain::unit_ball(2)).value() == Vector{0.0, 0.0});
  }
  // Drive the accumulated estimate to exactly (0,1): read sigma off the
  // played corner, then solve for the two observed losses.
  {
    const Domain ball = Domain::unit_ball(2);
    CornerEstimator p(2, 0.5);
    Rng rng(17);
    Vector w1, w2;
    std::vector<int> s1, s2;
    w1 = p.choose(rng);
    s1 = {w1[0] > 0 ? 1 : -1, w1[1] > 0 ? 1 : -1};
    // Redraw the second round until the sign vectors are linearly independent.
    do {
      w2 = p.choose(rng);
      s2 = {w2[0] > 0 ? 1 : -1, w2[1] > 0 ? 1 : -1};
    } while (s2 == s1 || (s2[0] == -s1[0] && s2[1] == -s1[1]));
    // Want (v1/mu) s1 + (v2/mu) s2 = (0, 2), i.e. the average estimate (0,1).
    const double det = s1[0] * s2[1] - s1[1] * s2[0];
    const double a = (0.0 * s2[1] - 2.0 * s2[0]) / det;
    const double b = (s1[0] * 2.0 - s1[1] * 0.0) / det;
    // The extra choose() calls above discarded sigma draws; replay observes
    // against the final sigma pair by reconstructing a fresh estimator.
    CornerEstimator replay(2, 0.5);
    struct Shot { std::vector<int> sigma; double coeff; };
    for (const Shot& shot : {Shot{s1, a}, Shot{s2, b}}) {
      Rng probe(1);
      Vector w;
      do {
        w = replay.choose(probe);
      } while ((w[0] > 0 ? 1 : -1) != shot.sigma[0] || (w[1] > 0 ? 1 : -1) != shot.sigma[1]);
      replay.observe(shot.coeff * 0.5);  // v = coeff * mu
    }
    const Vector what = replay.finalize(ball).value();
    CHECK(what[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(what[1] == Catch::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("hedge: uniform start and one multiplicative step") {
  Hedge h(3, 1.0);
  CHECK(h.choose() == Vector{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});

  Hedge h2(2, std::log(2.0));
  h2.update({1.0, 0.0});
  const Vector p = h2.choose();
  CHECK(p[0] == Catch::Approx(1.0 / 3.0));
  CHECK(p[1] == Catch::Approx(2.0 / 3.0));

  CHECK_THROWS_AS(h2.update({std::nan(""), 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Hedge(2, 0.0), std::invalid_argument);
}

TEST_CASE("hedge regret stays below 2 sqrt(T ln d) on random binary sequences") {
  const std::size_t d = 4;
  const std::uint64_t T = 10000;
  const double eta = Hedge::default_eta(d, T);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(derive_seed(555, {s}));
    Hedge h(d, eta);
    double total = 0.0;
    Vector colsum(d, 0.0);
    for (std::uint64_t t = 0; t < T; ++t) {
      Vector x(d);
      for (double& v : x) v = static_cast<double>(rng.next_u64() & 1u);
      const Vector w = h.choose();
      total += dot(x, w);
      add_inplace(colsum, x);
      h.update(x);
      for (double wi : h.weights()) {
        REQUIRE(wi > 0.0);
        REQUIRE(std::isfinite(wi));
      }
    }
    const double best = *std::min_element(colsum.begin(), colsum.end());
    CHECK(total - best <= 2.0 * std::sqrt(static_cast<double>(T) * std::log(d)));
  }
}

TEST_CASE("digit_encode: hand-computed clip, probe and normalization") {
  const DigitEncoding enc = digit_encode({0.337, 0.663}, 2);
  CHECK(enc.w_prime[0] == Rational(331, 1000));
  CHECK(enc.w_prime[1] == Rational(6601, 10000));
  CHECK(enc.l1 == Rational(9911, 10000));
  CHECK(enc.w[0] == Rational(3310, 9911));
  CHECK(enc.w[1] == Rational(6601, 9911));

  const DigitEncoding e2 = digit_encode({1.0, 0.0}, 3);
  CHECK(e2.w_prime[0] == Rational(10001, 10000));
  CHECK(e2.w_prime[1] == Rational(1, 100000));

  CHECK_THROWS_AS(digit_encode({0.7, 0.7}, 2), std::invalid_argument);   // off simplex
  CHECK_THROWS_AS(digit_encode({1.2, -0.2}, 2), std::invalid_argument);  // outside [0,1]
}

TEST_CASE("digit_decode: probed digits recover x exactly") {
  // <x, w_prime> = 0.331 for x = (1,0): digits at places 3,4 read (1,0).
  CHECK(digit_decode(Rational(331, 1000), 2, 2) == std::vector<int>{1, 0});
  CHECK(digit_decode(Rational(0), 3, 4) == std::vector<int>{0, 0, 0, 0});
  // A 5 in a probed digit position signals a corrupted channel.
  CHECK_THROWS_AS(digit_decode(Rational(1, 4), 1, 1), std::runtime_error);
}

TEST_CASE("digit round-trip is exact over random simplex points") {
  const RoundTripOutcome out = digit_roundtrip_sweep(6, 4, 10000, 909);
  CHECK(out.cases == 10000);
  CHECK(out.decode_failures == 0);
  CHECK(out.l1_band_failures == 0);
}

TEST_CASE("digit decoder couples to its inner hedge") {
  const std::size_t d = 3;
  const std::uint64_t T = 200;
  DigitDecoder player(d, DigitDecoder::default_p(T), Hedge::default_eta(d, T));
  Hedge reference(d, Hedge::default_eta(d, T));
  Rng rng(1234);
  Rng arm_rng(0);
  for (std::uint64_t t = 0; t < T; ++t) {
    std::vector<int> x(d);
    for (auto& v : x) v = static_cast<int>(rng.next_u64() & 1u);
    const RationalVector w = player.choose_exact(arm_rng);
    // Played point lies on the simplex exactly.
    Rational sum = 0;
    for (const auto& wi : w) sum += wi;
    REQUIRE(sum == 1);
    const Vector ref_w = reference.choose();
    player.observe_exact(dot(x, w));
    REQUIRE(player.last_decoded() == x);
    Vector xd(d);
    for (std::size_t i = 0; i < d; ++i) xd[i] = static_cast<double>(x[i]);
    reference.update(xd);
    (void)ref_w;
  }
  // Cumulative played loss tracks the inner full-information loss within 2.
  Rational diff = player.played_loss() - player.hedge_loss();
  if (diff < 0) diff = -diff;
  CHECK(diff <= 2);
  // Per-round coupling stays inside the provable (d + 1/9) * 10^-p band,
  // doubled for the normalization side.
  const Rational band =
      Rational(2 * (9 * static_cast<long>(d) + 1), 9 * pow10_int(player.p()));
  CHECK(player.max_round_coupling_diff() <= band);
}

TEST_CASE("digit decoder refuses the floating channel") {
  DigitDecoder player(3, 2, 0.5);
  Rng rng(1);
  CHECK_THROWS_AS(player.choose(rng), incompatible_error);
}

TEST_CASE("exp3 balances symmetric arms") {
  // The weight log-ratio is a martingale under symmetric losses, so a single
  // run wanders by a few percent regardless of T; symmetry shows up in the
  // frequency averaged over seeds.
  const std::uint64_t T = 10000;
  std::size_t first = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto player = Exp3::with_horizon(2, T);
    Rng rng(derive_seed(88, {s}));
    for (std::uint64_t t = 0; t < T; ++t) {
      const Vector w = player->choose(rng);
      if (w[0] == 1.0) ++first;
      player->observe(0.0);
    }
  }
  CHECK(std::abs(static_cast<double>(first) / (100.0 * T) - 0.5) <= 0.02);
}

TEST_CASE("exp3 finds the good arm of the simplex construction") {
  const std::size_t d = 4;
  const std::uint64_t T = 100000;
  auto player = Exp3::with_horizon(d, T);
  SimplexConstruction model(d, 0.5, 3);
  Rng rng(456);
  std::vector<std::uint64_t> pulls(d, 0);
  for (std::uint64_t t = 0; t < T; ++t) {
    const Vector w = player->choose(rng);
    std::size_t arm = 0;
    for (std::size_t i = 0; i < d; ++i) {
      if (w[i] == 1.0) arm = i;
    }
    ++pulls[arm];
    player->observe(dot(model.sample(rng), w));
  }
  CHECK(*std::max_element(pulls.begin(), pulls.end()) == pulls[2]);  // J=3 is 1-based
}

TEST_CASE("exp3 regret against the best arm stays under 4 sqrt(dT ln d)") {
  const std::size_t d = 8;
  const std::uint64_t T = 10000;
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(derive_seed(777, {s}));
    Rng model_rng(derive_seed(778, {s}));
    const std::size_t j = 1 + model_rng.uniform_int(d);
    SimplexConstruction model(d, select_mu(ConstructionKind::Simplex, d, T), j);
    auto player = Exp3::with_horizon(d, T);
    double total = 0.0;
    Vector colsum(d, 0.0);
    for (std::uint64_t t = 0; t < T; ++t) {
      const Vector w = player->choose(rng);
      const Vector x = model.sample(rng);
      total += dot(x, w);
      add_inplace(colsum, x);
      player->observe(dot(x, w));
    }
    const double best = *std::min_element(colsum.begin(), colsum.end());
    CHECK(total - best <=
          4.0 * std::sqrt(static_cast<double>(d * T) * std::log(static_cast<double>(d))));
  }
}

TEST_CASE("fixed point returns its point unchanged") {
  FixedPoint p({1.0, 0.0, 0.0});
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    CHECK(p.choose(rng) == Vector{1.0, 0.0, 0.0});
    p.observe(3.0);
  }
}

TEST_CASE("player choices stay inside their domains") {
  Rng rng(2024);
  {
    const Domain dom = Domain::cylinder(4);
    auto p = CornerEstimator::for_domain(dom);
    for (int i = 0; i < 100; ++i) CHECK(dom.contains(p->choose(rng), 1e-9));
  }
  {
    const Domain dom = Domain::simplex(5);
    Hedge h(5, 0.3);
    for (int i = 0; i < 50; ++i) {
      CHECK(dom.contains(h.choose(), 1e-9));
      Vector x(5);
      for (double& v : x) v = rng.uniform();
      h.update(x);
    }
  }
  {
    const Domain dom = Domain::hypercube(3);
    auto p = Exp3::with_horizon(3, 1000);
    for (int i = 0; i < 100; ++i) {
      CHECK(dom.contains(p->choose(rng), 1e-9));
      p->observe(rng.normal());
    }
    CHECK(p->clip_count() > 0);  // gaussian losses exceed [-1,1] sometimes
  }
  {
    const Domain dom = Domain::simplex(4);
    DigitDecoder p(4, 3, 0.4);
    for (int i = 0; i < 50; ++i) {
      const RationalVector w = p.choose_exact(rng);
      Vector wd(4);
      for (std::size_t k = 0; k < 4; ++k) wd[k] = rational_to_double(w[k]);
      CHECK(dom.contains(wd, 1e-9));
      std::vector<int> x(4, 1);
      p.observe_exact(dot(x, w));
    }
  }
}
