#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "blo/adversary.hpp"
#include "blo/errors.hpp"
#include "blo/geometry.hpp"
#include "blo/player.hpp"
#include "blo/rational.hpp"
#include "blo/rng.hpp"
#include "blo/vec.hpp"

namespace blo {

constexpr std::uint64_t kModelStreamTag = 0x6D6F64656C;   // per-rep sigma/J draws
constexpr std::uint64_t kAdversaryStreamTag = 0x616476;   // loss sampling
constexpr std::uint64_t kPlayerStreamTag = 0x706C6179;    // player randomization

struct ProtocolOptions {
  /// Store per-round series; defaults to on only for T <= 1e4.
  std::optional<bool> store_trajectory;
  bool applies(std::uint64_t T) const { return store_trajectory.value_or(T <= 10000); }
};

/// Per-run record. `round_losses` holds the exact expected loss <xbar,w_t>
/// for stochastic models and the realized loss for oblivious sequences.
struct RunResult {
  std::vector<Vector> points;
  std::vector<double> round_losses;
  std::vector<double> observed;
  double cumulative_regret = 0.0;
  std::optional<double> error;
  Vector average_play;
  std::string sigma_or_j;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

/// Coordinate-wise mean of a nonempty sequence of points.
inline Vector average_iterate(const std::vector<Vector>& points) {
  if (points.empty()) throw std::invalid_argument("average_iterate of empty sequence");
  Vector avg(points.front().size(), 0.0);
  for (const auto& p : points) add_inplace(avg, p);
  return scaled(avg, 1.0 / static_cast<double>(points.size()));
}

namespace detail {

inline void check_compatible_channels(const Domain& domain, const LossModel& model,
                                      const Player& player) {
  if (model.dim() != domain.dim()) {
    throw std::invalid_argument("model dimension != domain dimension");
  }
  if (player.feedback() == Feedback::ExactBandit && !model.is_binary()) {
    throw incompatible_error(player.kind() + " requires the exact-rational loss channel; " +
                             model.kind() +
                             " emits floating losses (use a binary_sequence model)");
  }
}

struct LoopOutcome {
  Vector play_sum;
  double regret_sum = 0.0;      // sum of (<xbar,w_t> - optimum), stochastic scoring
  Rational realized_exact = 0;  // exact channel only
  double realized_sum = 0.0;
  Vector realized_x_sum;        // sum of sampled loss vectors
};

}  // namespace detail

/// Runs the sequential choose/sample/observe loop and scores expected regret:
/// variance-reduced against the exact model mean for stochastic models, and
/// against the realized best fixed point for oblivious sequences.
inline RunResult run_regret_protocol(const Domain& domain, LossModel& model, Player& player,
                                     std::uint64_t T, std::uint64_t seed,
                                     const ProtocolOptions& opts = {}) {
  if (T < 1) throw std::invalid_argument("T must be >= 1");
  detail::check_compatible_channels(domain, model, player);
  const auto t0 = std::chrono::steady_clock::now();

  Rng rng_adv(derive_seed(seed, {kAdversaryStreamTag}));
  Rng rng_pl(derive_seed(seed, {kPlayerStreamTag}));

  const bool stochastic = model.has_exact_mean();
  Vector xbar;
  double optimum = 0.0;
  if (stochastic) {
    xbar = model.mean();
    optimum = dot(xbar, domain.linear_argmin(xbar));
  }

  const bool keep = opts.applies(T);
  RunResult result;
  result.seed = seed;
  result.sigma_or_j = model.sigma_or_j();
  if (keep) {
    result.points.reserve(T);
    result.round_losses.reserve(T);
    result.observed.reserve(T);
  }

  detail::LoopOutcome acc;
  acc.play_sum.assign(domain.dim(), 0.0);
  acc.realized_x_sum.assign(domain.dim(), 0.0);

  for (std::uint64_t t = 0; t < T; ++t) {
    Vector w;
    double v = 0.0;
    if (player.feedback() == Feedback::ExactBandit) {
      const RationalVector w_rat = player.choose_exact(rng_pl);
      const std::vector<int> x = model.sample_binary(rng_adv);
      const Rational v_rat = dot(x, w_rat);
      player.observe_exact(v_rat);
      w.resize(w_rat.size());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = rational_to_double(w_rat[i]);
      v = rational_to_double(v_rat);
      acc.realized_exact += v_rat;
      for (std::size_t i = 0; i < x.size(); ++i) acc.realized_x_sum[i] += x[i];
    } else {
      w = player.choose(rng_pl);
      const Vector x = model.sample(rng_adv);
      v = dot(x, w);
      if (player.feedback() == Feedback::FullInfo) {
        player.observe_full(x);
      } else {
        player.observe(v);
      }
      add_inplace(acc.realized_x_sum, x);
    }
    acc.realized_sum += v;
    add_inplace(acc.play_sum, w);
    const double round_loss = stochastic ? dot(xbar, w) : v;
    // Accumulating per-round increments keeps optimal constant play at an
    // exact zero and avoids large-sum cancellation at long horizons.
    if (stochastic) acc.regret_sum += round_loss - optimum;
    if (keep) {
      result.points.push_back(std::move(w));
      result.round_losses.push_back(round_loss);
      result.observed.push_back(v);
    }
  }

  result.average_play = scaled(acc.play_sum, 1.0 / static_cast<double>(T));
  if (stochastic) {
    result.cumulative_regret = acc.regret_sum;
  } else {
    const Vector best = domain.linear_argmin(acc.realized_x_sum);
    const double comparator = dot(acc.realized_x_sum, best);
    const double total = player.feedback() == Feedback::ExactBandit
                             ? rational_to_double(acc.realized_exact)
                             : acc.realized_sum;
    result.cumulative_regret = total - comparator;
  }

  result.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

/// Error protocol: run the same loop, then score the player's final answer
/// (or the average iterate) once against the exact mean.
inline RunResult run_error_protocol(const Domain& domain, LossModel& model, Player& player,
                                    std::uint64_t T, std::uint64_t seed,
                                    const ProtocolOptions& opts = {}) {
  RunResult result = run_regret_protocol(domain, model, player, T, seed, opts);
  const Vector what = player.finalize(domain).value_or(result.average_play);
  const Vector xbar = model.mean();  // prefix average for oblivious sequences
  const double optimum = dot(xbar, domain.linear_argmin(xbar));
  result.error = dot(xbar, what) - optimum;
  return result;
}

struct AggregateStats {
  std::size_t repetitions = 0;
  double mean = 0.0;
  double stderr_ = 0.0;  // sample stdev / sqrt(n)
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
};

inline AggregateStats aggregate(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("aggregation over zero successful runs");
  AggregateStats s;
  s.repetitions = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    s.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
  }
  std::sort(values.begin(), values.end());
  const auto quant = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  s.q05 = quant(0.05);
  s.q50 = quant(0.50);
  s.q95 = quant(0.95);
  return s;
}

/// One (domain, adversary, player, d, T) grid cell: factories are invoked
/// per repetition with that repetition's own stream, so sigma/J re-randomize
/// reproducibly from (master seed, repetition index).
struct CellSpec {
  Domain domain;
  std::function<std::unique_ptr<LossModel>(Rng&, std::uint64_t /*T*/)> make_model;
  std::function<std::unique_ptr<Player>(const Domain&, std::uint64_t /*T*/)> make_player;
  std::uint64_t T = 1;
  std::size_t repetitions = 1;
  std::uint64_t master_seed = 0;
  bool error_protocol = false;
  ProtocolOptions options;
};

struct CellRun {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::string sigma_or_j;
  double regret = 0.0;
  std::optional<double> error;
  double wall_ms = 0.0;
};

struct CellResult {
  std::vector<CellRun> runs;
  AggregateStats stats;  // over error when error_protocol, else regret
};

inline std::uint64_t repetition_seed(std::uint64_t master, std::size_t d, std::uint64_t T,
                                     std::size_t repetition) {
  return derive_seed(master, {static_cast<std::uint64_t>(d), T,
                              static_cast<std::uint64_t>(repetition)});
}

/// Runs all repetitions of a cell (concurrently when workers > 1) and
/// aggregates the protocol's target metric. Output ordering is by repetition
/// index, independent of scheduling.
inline CellResult monte_carlo(const CellSpec& cell, std::size_t workers = 1) {
  if (cell.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  std::vector<CellRun> runs(cell.repetitions);

  const auto run_one = [&](std::size_t rep) {
    const std::uint64_t seed =
        repetition_seed(cell.master_seed, cell.domain.dim(), cell.T, rep);
    Rng model_rng(derive_seed(seed, {kModelStreamTag}));
    auto model = cell.make_model(model_rng, cell.T);
    auto player = cell.make_player(cell.domain, cell.T);
    const RunResult r =
        cell.error_protocol
            ? run_error_protocol(cell.domain, *model, *player, cell.T, seed, cell.options)
            : run_regret_protocol(cell.domain, *model, *player, cell.T, seed, cell.options);
    runs[rep] = CellRun{rep, seed, r.sigma_or_j, r.cumulative_regret, r.error, r.wall_ms};
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(workers, cell.repetitions));
  if (n_workers == 1) {
    for (std::size_t rep = 0; rep < cell.repetitions; ++rep) run_one(rep);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t rep = next.fetch_add(1);
          if (rep >= cell.repetitions) return;
          try {
            run_one(rep);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  std::vector<double> metric;
  metric.reserve(cell.repetitions);
  for (const auto& r : runs) {
    metric.push_back(cell.error_protocol ? r.error.value() : r.regret);
  }
  CellResult result;
  result.stats = aggregate(std::move(metric));
  result.runs = std::move(runs);
  return result;
}

}  // namespace blo
