// Command-line front end: configure, execute, validate and analyze
// bandit linear optimization experiments.

#include <CLI11.hpp>

#include <cstdint>
#include <string>
#include <thread>

#include "blo/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"blo - simulation lab for bandit linear optimization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t seed_override = 0;
  bool have_seed_override = false;
  bool timing = false;

  auto* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", config_path, "experiment config (or manifest) JSON")->required();
  run->add_option("--out", out_dir, "output directory (default: config's output_dir, else ./out)");
  run->add_option("--workers", workers, "parallel repetitions");
  run->add_option("--seed-override", seed_override, "replace the config's master seed")
      ->each([&](const std::string&) { have_seed_override = true; });
  run->add_flag("--timing", timing, "record wall_ms per run (breaks byte-determinism)");

  std::string adversary_json;
  std::string domain_json;
  std::uint64_t n_samples = 1000000;
  std::uint64_t seed = 1;
  std::uint64_t horizon = 10000;

  auto* validate = app.add_subcommand("validate", "check an adversary's validity conditions");
  validate->add_option("--adversary", adversary_json, "adversary spec JSON")->required();
  validate->add_option("--domain", domain_json, "domain spec JSON with dim")->required();
  validate->add_option("--samples", n_samples, "Monte Carlo tail samples (>= 1e4)");
  validate->add_option("--seed", seed, "sampling seed");
  validate->add_option("--T", horizon, "horizon used to resolve mu = \"auto\"");

  std::string results_dir;
  auto* analyze = app.add_subcommand("analyze", "fit scaling laws over aggregate results");
  analyze->add_option("--results", results_dir, "directory holding aggregate.csv")->required();

  app.add_subcommand("selftest", "run the enumeration and grid property suites");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    blo::RunFlags flags;
    flags.workers = workers;
    flags.timing = timing;
    if (have_seed_override) flags.seed_override = seed_override;
    return blo::cmd_run(config_path, out_dir, flags);
  }
  if (validate->parsed()) {
    return blo::cmd_validate(adversary_json, domain_json, n_samples, seed, horizon);
  }
  if (analyze->parsed()) {
    return blo::cmd_analyze(results_dir);
  }
  return blo::cmd_selftest();
}
