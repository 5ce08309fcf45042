#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "blo/analysis.hpp"
#include "blo/config.hpp"
#include "blo/harness.hpp"
#include "blo/io.hpp"
#include "blo/selfcheck.hpp"

namespace blo {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInvalidConfig = 2;
constexpr int kExitIncompatible = 3;

struct RunFlags {
  std::size_t workers = 1;
  std::optional<std::uint64_t> seed_override;
  bool timing = false;  // wall_ms stays empty by default so reruns are byte-identical
};

namespace detail {

inline std::string csv_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline std::string adversary_kind_label(const AdversarySpec& spec) {
  if (spec.kind == "shrink_to_bounded") {
    return "shrink_to_bounded(" + spec.inner->kind + ")";
  }
  return spec.kind;
}

}  // namespace detail

struct ExperimentOutputs {
  std::string runs_csv;
  std::string aggregate_csv;
  Json manifest;
};

/// Executes every grid cell of a parsed config and renders the three
/// artifacts (per-run CSV, aggregate CSV, manifest) as strings.
inline ExperimentOutputs run_experiment(const ExperimentConfig& cfg, const RunFlags& flags) {
  ExperimentConfig resolved = cfg;
  if (flags.seed_override) resolved.master_seed = *flags.seed_override;

  // Validate every triple before any run starts.
  for (std::size_t d : resolved.grid_d) {
    const Domain domain = resolved.domain.make(d);
    for (std::uint64_t T : resolved.grid_T) check_compatibility(resolved, domain, T);
  }

  std::ostringstream runs;
  runs << "experiment_id,domain_kind,dim,adversary_kind,player_kind,T,repetition,seed,"
          "sigma_or_j,regret,error,wall_ms\n";
  std::ostringstream agg;
  agg << "experiment_id,domain_kind,dim,adversary_kind,player_kind,protocol,T,repetitions,"
         "mean,stderr,q05,q50,q95\n";

  Json cells = Json::array();
  const std::string adversary_label = detail::adversary_kind_label(resolved.adversary);
  for (std::size_t d : resolved.grid_d) {
    const Domain domain = resolved.domain.make(d);
    for (std::uint64_t T : resolved.grid_T) {
      CellSpec cell{
          domain,
          [&](Rng& rng, std::uint64_t horizon) {
            return resolved.adversary.make(domain, horizon, rng);
          },
          [&](const Domain& dom, std::uint64_t horizon) {
            return resolved.player.make(dom, horizon);
          },
          T,
          resolved.repetitions,
          resolved.master_seed,
          resolved.protocol == "error",
          ProtocolOptions{false}};
      const CellResult result = monte_carlo(cell, flags.workers);

      for (const CellRun& run : result.runs) {
        runs << resolved.experiment_id << ',' << domain.name() << ',' << d << ','
             << adversary_label << ',' << resolved.player.kind << ',' << T << ','
             << run.repetition << ',' << run.seed << ',' << run.sigma_or_j << ','
             << format_double(run.regret) << ',' << detail::csv_field(run.error) << ','
             << (flags.timing ? format_double(run.wall_ms) : std::string()) << '\n';
      }
      const AggregateStats& s = result.stats;
      agg << resolved.experiment_id << ',' << domain.name() << ',' << d << ','
          << adversary_label << ',' << resolved.player.kind << ',' << resolved.protocol << ','
          << T << ',' << s.repetitions << ',' << format_double(s.mean) << ','
          << format_double(s.stderr_) << ',' << format_double(s.q05) << ','
          << format_double(s.q50) << ',' << format_double(s.q95) << '\n';

      Json cell_info{{"d", d}, {"T", T}};
      if (resolved.adversary.is_construction()) {
        cell_info["mu"] = resolved.adversary.resolved_mu(d, T);
      }
      if (resolved.adversary.kind == "shrink_to_bounded") {
        cell_info["shrink_scale"] =
            1.0 / (resolved.adversary.shrink_p * std::sqrt(std::log(static_cast<double>(T))));
        if (resolved.adversary.inner->is_construction()) {
          cell_info["inner_mu"] = resolved.adversary.inner->resolved_mu(d, T);
        }
      }
      if (resolved.adversary.kind == "generic_gaussian") {
        Rng probe_rng(0);
        auto probe = resolved.adversary.make(domain, T, probe_rng);
        cell_info["gaussian_c"] = static_cast<GenericGaussian*>(probe.get())->second_moment_c();
      }
      if (resolved.player.kind == "digit_decoder") {
        cell_info["p"] = resolved.player.p.value_or(DigitDecoder::default_p(T));
        cell_info["eta"] = resolved.player.eta.value_or(Hedge::default_eta(d, T));
      }
      if (resolved.player.kind == "hedge") {
        cell_info["eta"] = resolved.player.eta.value_or(Hedge::default_eta(d, T));
      }
      if (resolved.player.kind == "exp3") {
        const double g = resolved.player.gamma.value_or(Exp3::default_gamma(d, T));
        cell_info["gamma"] = g;
        cell_info["eta"] = resolved.player.eta.value_or(g / static_cast<double>(d));
      }
      if (resolved.player.kind == "corner_estimator") {
        cell_info["player_mu"] =
            resolved.player.mu.value_or(domain.corner_set_scale().value());
      }
      cells.push_back(std::move(cell_info));
    }
  }

  ExperimentOutputs out;
  out.runs_csv = runs.str();
  out.aggregate_csv = agg.str();
  out.manifest = Json{{"config", resolved.to_json()},
                      {"resolved", Json{{"cells", cells}}},
                      {"outputs", Json{{"runs_csv", "runs.csv"},
                                       {"aggregate_csv", "aggregate.csv"}}}};
  return out;
}

/// `run` subcommand: execute a config (or a previously emitted manifest) and
/// write runs.csv, aggregate.csv and manifest.json into the output directory
/// (--out, falling back to the config's output_dir, then "out").
inline int cmd_run(const std::string& config_path, const std::string& out_dir,
                   const RunFlags& flags = {}) {
  ExperimentConfig cfg;
  try {
    Json j = Json::parse(read_text_file(config_path));
    if (j.contains("config")) j = j.at("config");  // accept a manifest as a config
    cfg = ExperimentConfig::from_json(j);
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  try {
    const std::string dir =
        !out_dir.empty() ? out_dir : (!cfg.output_dir.empty() ? cfg.output_dir : "out");
    const ExperimentOutputs out = run_experiment(cfg, flags);
    ensure_directory(dir);
    write_text_file(dir + "/runs.csv", out.runs_csv);
    write_text_file(dir + "/aggregate.csv", out.aggregate_csv);
    write_text_file(dir + "/manifest.json", out.manifest.dump(2) + "\n");
    return kExitOk;
  } catch (const incompatible_error& e) {
    std::cerr << "incompatible triple: " << e.what() << "\n";
    return kExitIncompatible;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

/// `validate` subcommand: check the two validity conditions of an adversary
/// spec against a domain spec and print the report.
inline int cmd_validate(const std::string& adversary_json, const std::string& domain_json,
                        std::uint64_t n_samples, std::uint64_t seed, std::uint64_t horizon,
                        std::ostream& os = std::cout) {
  AdversarySpec adv;
  DomainSpec dom;
  std::size_t dim = 0;
  try {
    adv = AdversarySpec::from_json(Json::parse(adversary_json));
    dom = DomainSpec::from_json(Json::parse(domain_json));
    if (!dom.dim) throw std::invalid_argument("domain spec needs \"dim\" for validation");
    dim = *dom.dim;
  } catch (const std::exception& e) {
    std::cerr << "invalid spec: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  try {
    const Domain domain = dom.make(dim);
    Rng model_rng(derive_seed(seed, {kModelStreamTag}));
    auto model = adv.make(domain, horizon, model_rng);
    Rng sample_rng(derive_seed(seed, {kAdversaryStreamTag}));
    const std::vector<double> z_grid = {1.0, 1.5, 2.0, 3.0};
    const ValidityReport report = check_validity(*model, domain, n_samples, z_grid, sample_rng);

    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", report.mean_dual_norm);
    os << "model: " << model->kind() << " on " << domain.name() << " (dim " << dim << ")\n";
    if (adv.is_construction()) {
      os << "mu: " << format_double(adv.resolved_mu(dim, horizon)) << "\n";
    }
    os << "mean_dual_norm: " << buf << "  ["
       << (report.mean_check_passed ? "ok" : "exceeds 1") << "]\n";
    os << "tail check (" << report.tail_samples << " samples):\n";
    os << "      z   frequency       bound   threshold  result\n";
    for (const TailRow& row : report.rows) {
      std::snprintf(buf, sizeof(buf), "  %5.2f  %10.6f  %10.6f  %10.6f  %s\n", row.z,
                    row.frequency, row.bound, row.threshold, row.violated ? "VIOLATED" : "ok");
      os << buf;
    }
    os << "verdict: " << (report.passed ? "VALID" : "NOT-VALID") << "\n";
    return report.passed ? kExitOk : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

namespace detail {

struct AggregateRow {
  std::string experiment_id, domain_kind, adversary_kind, player_kind, protocol;
  std::size_t dim = 0;
  std::uint64_t T = 0;
  std::size_t repetitions = 0;
  double mean = 0.0;
};

inline std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty aggregate file " + path);
  std::vector<AggregateRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() < 13) throw std::runtime_error("malformed aggregate row: " + line);
    AggregateRow row;
    row.experiment_id = f[0];
    row.domain_kind = f[1];
    row.dim = std::stoul(f[2]);
    row.adversary_kind = f[3];
    row.player_kind = f[4];
    row.protocol = f[5];
    row.T = std::stoull(f[6]);
    row.repetitions = std::stoul(f[7]);
    row.mean = std::strtod(f[8].c_str(), nullptr);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::optional<double> overlay_bound(const std::string& adversary_kind, std::size_t dim,
                                           std::uint64_t T) {
  ConstructionKind kind;
  if (adversary_kind == "shifted_ball_construction") kind = ConstructionKind::ShiftedBall;
  else if (adversary_kind == "cylinder_construction") kind = ConstructionKind::Cylinder;
  else if (adversary_kind == "simplex_construction") kind = ConstructionKind::Simplex;
  else if (adversary_kind == "hypercube_construction") kind = ConstructionKind::Hypercube;
  else return std::nullopt;
  try {
    return lower_bound_reference(kind, dim, T);
  } catch (const std::exception&) {
    return std::nullopt;  // outside the bound's admissible range
  }
}

}  // namespace detail

/// `analyze` subcommand: fit the scaling law over the aggregate grid and emit
/// plot-data files (x y [lower_bound] columns) plus fit.json.
inline int cmd_analyze(const std::string& results_dir, std::ostream& os = std::cout) {
  std::vector<detail::AggregateRow> rows;
  try {
    rows = detail::read_aggregate_csv(results_dir + "/aggregate.csv");
  } catch (const std::exception& e) {
    std::cerr << "cannot read aggregates: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
  try {
    std::vector<GridPoint> points;
    points.reserve(rows.size());
    for (const auto& r : rows) points.push_back({r.dim, r.T, r.mean});
    const ScalingFit fit = fit_scaling(points);

    const Json fit_json{{"alpha", fit.alpha}, {"beta", fit.beta},   {"logC", fit.log_c},
                        {"r2", fit.r2},       {"cells", fit.cells}};
    write_text_file(results_dir + "/fit.json", fit_json.dump(2) + "\n");

    const std::string metric = rows.front().protocol == "error" ? "error" : "regret";
    std::map<std::size_t, std::vector<const detail::AggregateRow*>> by_d;
    std::map<std::uint64_t, std::vector<const detail::AggregateRow*>> by_T;
    for (const auto& r : rows) {
      by_d[r.dim].push_back(&r);
      by_T[r.T].push_back(&r);
    }
    for (auto& [d, group] : by_d) {
      std::sort(group.begin(), group.end(),
                [](auto* a, auto* b) { return a->T < b->T; });
      std::ostringstream data;
      for (const auto* r : group) {
        data << r->T << ' ' << format_double(r->mean);
        if (const auto bound = detail::overlay_bound(r->adversary_kind, r->dim, r->T)) {
          data << ' ' << format_double(*bound);
        }
        data << '\n';
      }
      write_text_file(results_dir + "/" + metric + "_vs_T_d" + std::to_string(d) + ".dat",
                      data.str());
    }
    for (auto& [T, group] : by_T) {
      std::sort(group.begin(), group.end(),
                [](auto* a, auto* b) { return a->dim < b->dim; });
      std::ostringstream data;
      for (const auto* r : group) {
        data << r->dim << ' ' << format_double(r->mean);
        if (const auto bound = detail::overlay_bound(r->adversary_kind, r->dim, r->T)) {
          data << ' ' << format_double(*bound);
        }
        data << '\n';
      }
      write_text_file(results_dir + "/" + metric + "_vs_d_T" + std::to_string(T) + ".dat",
                      data.str());
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf), "fit: alpha=%.4f beta=%.4f logC=%.4f r2=%.4f cells=%zu\n",
                  fit.alpha, fit.beta, fit.log_c, fit.r2, fit.cells);
    os << buf;
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "analysis failed: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "analysis failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

/// `selftest` subcommand: the exact enumeration and grid property suites.
inline int cmd_selftest(std::ostream& os = std::cout) {
  bool all_ok = true;
  const auto report = [&](const std::string& name, bool ok) {
    os << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
    all_ok = all_ok && ok;
  };

  report("estimator enumeration identities, d=2..8, exact rational",
         estimator_identity_suite_pass(2, 8));

  bool dev_ok = true;
  for (std::size_t d : {2, 4}) {
    for (const Rational& mu : {Rational(1, 10), Rational(1, 2)}) {
      for (const auto& x : rational_grid_points(d)) {
        dev_ok = dev_ok && second_moment_noise_exact(x, mu);
      }
    }
  }
  report("noisy second-moment identity, d in {2,4}, mu in {1/10,1/2}", dev_ok);

  report("pointwise inequality grid, |w| <= 1 step 1e-3, d <= 64",
         reciprocal_quadratic_grid_violations(64) == 0);

  const RoundTripOutcome rt = digit_roundtrip_sweep(6, 4, 2000, 20240901);
  report("digit probe round-trip, d=6 p=4, 2000 cases",
         rt.decode_failures == 0 && rt.l1_band_failures == 0);

  bool geo_ok = true;
  Rng rng(7);
  const std::vector<Domain> domains = {
      Domain::unit_ball(4),    Domain::shifted_ball(4),  Domain::cylinder(4),
      Domain::capped_ball(4, 0.5), Domain::simplex(4),   Domain::l1_ball(4),
      Domain::hypercube(4)};
  for (const auto& domain : domains) {
    for (int i = 0; i < 200; ++i) {
      Vector x(domain.dim());
      for (double& v : x) v = rng.normal();
      const Vector w = domain.linear_argmin(x);
      geo_ok = geo_ok && domain.contains(w, 1e-9);
      geo_ok = geo_ok && std::abs(dot(x, w)) <= domain.dual_norm(x) + 1e-9;
    }
  }
  report("linear minimizers feasible and within the dual norm, 7 domains", geo_ok);

  return all_ok ? kExitOk : kExitRuntime;
}

}  // namespace blo
