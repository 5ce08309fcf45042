#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "blo/adversary.hpp"
#include "blo/errors.hpp"
#include "blo/geometry.hpp"
#include "blo/harness.hpp"
#include "blo/io.hpp"
#include "blo/player.hpp"

namespace blo {

using Json = nlohmann::json;

/// Config typos must not silently alter science: every object is checked
/// against its full key set and unknown keys are rejected.
inline void reject_unknown_keys(const Json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw std::invalid_argument("unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

inline void require_key(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw std::invalid_argument(where + " is missing \"" + key + "\"");
}

// ---------------------------------------------------------------------------
// Domain spec
// ---------------------------------------------------------------------------

struct DomainSpec {
  DomainKind kind = DomainKind::UnitBall;
  std::optional<std::size_t> dim;  // absent: taken from the grid
  Vector shift;                    // shifted_ball
  std::optional<double> cap;       // capped_ball

  static DomainSpec from_json(const Json& j) {
    reject_unknown_keys(j, {"kind", "dim", "params"}, "domain");
    require_key(j, "kind", "domain");
    DomainSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "unit_ball") spec.kind = DomainKind::UnitBall;
    else if (kind == "shifted_ball") spec.kind = DomainKind::ShiftedBall;
    else if (kind == "cylinder") spec.kind = DomainKind::Cylinder;
    else if (kind == "capped_ball") spec.kind = DomainKind::CappedBall;
    else if (kind == "simplex") spec.kind = DomainKind::Simplex;
    else if (kind == "l1_ball") spec.kind = DomainKind::L1Ball;
    else if (kind == "hypercube") spec.kind = DomainKind::Hypercube;
    else throw std::invalid_argument("unknown domain kind \"" + kind + "\"");
    if (j.contains("dim")) spec.dim = j.at("dim").get<std::size_t>();
    if (j.contains("params")) {
      const Json& p = j.at("params");
      reject_unknown_keys(p, {"shift", "cap"}, "domain.params");
      if (p.contains("shift")) {
        if (spec.kind != DomainKind::ShiftedBall) {
          throw std::invalid_argument("\"shift\" is only valid for shifted_ball");
        }
        spec.shift = p.at("shift").get<Vector>();
      }
      if (p.contains("cap")) {
        if (spec.kind != DomainKind::CappedBall) {
          throw std::invalid_argument("\"cap\" is only valid for capped_ball");
        }
        spec.cap = p.at("cap").get<double>();
      }
    }
    if (spec.kind == DomainKind::CappedBall && !spec.cap) {
      throw std::invalid_argument("capped_ball requires params.cap");
    }
    return spec;
  }

  Json to_json() const {
    Json j{{"kind", domain_kind_name(kind)}};
    if (dim) j["dim"] = *dim;
    Json params = Json::object();
    if (!shift.empty()) params["shift"] = shift;
    if (cap) params["cap"] = *cap;
    if (!params.empty()) j["params"] = params;
    return j;
  }

  Domain make(std::size_t d) const {
    switch (kind) {
      case DomainKind::UnitBall: return Domain::unit_ball(d);
      case DomainKind::ShiftedBall: return Domain::shifted_ball(d, shift);
      case DomainKind::Cylinder: return Domain::cylinder(d);
      case DomainKind::CappedBall: return Domain::capped_ball(d, *cap);
      case DomainKind::Simplex: return Domain::simplex(d);
      case DomainKind::L1Ball: return Domain::l1_ball(d);
      case DomainKind::Hypercube: return Domain::hypercube(d);
    }
    throw std::invalid_argument("unknown domain kind");
  }
};

// ---------------------------------------------------------------------------
// Adversary spec
// ---------------------------------------------------------------------------

/// "auto" mu invokes select_mu with the construction's effective dimension.
/// For generic_gaussian, "auto" mean places coeff*sqrt(d/T) on coordinate 0
/// (the hard-instance scaling for the ball error-rate grid) and a "total"
/// variance spreads evenly over coordinates, keeping E||x||^2 d-independent.
struct AdversarySpec {
  std::string kind;

  // generic_gaussian
  bool mean_auto = false;
  double mean_coeff = 0.0;
  Vector mean_fixed;
  bool variance_total = false;
  double variance_value = 0.0;

  // constructions
  bool mu_auto = true;
  double mu_value = 0.0;
  std::optional<std::size_t> fixed_j;  // simplex_construction

  // binary_sequence
  std::string source;  // "uniform" when sequence is empty
  std::vector<std::vector<int>> sequence;

  // shrink_to_bounded
  std::shared_ptr<AdversarySpec> inner;
  double shrink_p = 8.0;
  std::uint64_t calibration_samples = 100000;

  static AdversarySpec from_json(const Json& j);
  Json to_json() const;

  bool is_construction() const {
    return kind == "shifted_ball_construction" || kind == "cylinder_construction" ||
           kind == "simplex_construction" || kind == "hypercube_construction";
  }

  ConstructionKind construction_kind() const {
    if (kind == "shifted_ball_construction") return ConstructionKind::ShiftedBall;
    if (kind == "cylinder_construction") return ConstructionKind::Cylinder;
    if (kind == "simplex_construction") return ConstructionKind::Simplex;
    if (kind == "hypercube_construction") return ConstructionKind::Hypercube;
    throw std::invalid_argument(kind + " is not a lower-bound construction");
  }

  /// Effective dimension feeding the mu rules: the three coordinate-0
  /// constructions use D-1, the simplex construction uses D.
  static std::size_t effective_d(ConstructionKind kind, std::size_t D) {
    return kind == ConstructionKind::Simplex ? D : D - 1;
  }

  double resolved_mu(std::size_t D, std::uint64_t T) const {
    const auto ck = construction_kind();
    return mu_auto ? select_mu(ck, effective_d(ck, D), T) : mu_value;
  }

  /// Instantiate for one repetition; sigma/J are drawn from `rng`.
  std::unique_ptr<LossModel> make(const Domain& domain, std::uint64_t T, Rng& rng) const {
    const std::size_t D = domain.dim();
    if (kind == "generic_gaussian") {
      Vector mean;
      if (mean_auto) {
        mean.assign(D, 0.0);
        mean[0] = mean_coeff * std::sqrt(static_cast<double>(D) / static_cast<double>(T));
      } else {
        if (mean_fixed.size() != D) {
          throw std::invalid_argument("generic_gaussian mean has dimension " +
                                      std::to_string(mean_fixed.size()) + ", grid wants " +
                                      std::to_string(D));
        }
        mean = mean_fixed;
      }
      const double var = variance_total ? variance_value / static_cast<double>(D) : variance_value;
      return std::make_unique<GenericGaussian>(std::move(mean), var);
    }
    if (kind == "shifted_ball_construction") {
      return std::make_unique<ShiftedBallConstruction>(D, resolved_mu(D, T),
                                                       rng.sign_vector(D - 1));
    }
    if (kind == "cylinder_construction") {
      return std::make_unique<CylinderConstruction>(D, resolved_mu(D, T), rng.sign_vector(D - 1));
    }
    if (kind == "hypercube_construction") {
      return std::make_unique<HypercubeConstruction>(D, resolved_mu(D, T), rng.sign_vector(D - 1));
    }
    if (kind == "simplex_construction") {
      const std::size_t j = fixed_j ? *fixed_j : 1 + static_cast<std::size_t>(rng.uniform_int(D));
      return std::make_unique<SimplexConstruction>(D, resolved_mu(D, T), j);
    }
    if (kind == "binary_sequence") {
      if (!sequence.empty()) return std::make_unique<BinarySequence>(D, sequence);
      return BinarySequence::uniform(D);
    }
    if (kind == "shrink_to_bounded") {
      auto wrapped = inner->make(domain, T, rng);
      return std::make_unique<ShrinkToBounded>(std::shared_ptr<LossModel>(std::move(wrapped)),
                                               domain, T, shrink_p, calibration_samples, rng);
    }
    throw std::invalid_argument("unknown adversary kind \"" + kind + "\"");
  }
};

inline AdversarySpec AdversarySpec::from_json(const Json& j) {
  require_key(j, "kind", "adversary");
  AdversarySpec spec;
  spec.kind = j.at("kind").get<std::string>();
  if (spec.kind == "generic_gaussian") {
    reject_unknown_keys(j, {"kind", "mean", "variance"}, "adversary");
    require_key(j, "mean", "adversary");
    require_key(j, "variance", "adversary");
    const Json& mean = j.at("mean");
    if (mean.is_array()) {
      spec.mean_fixed = mean.get<Vector>();
    } else {
      reject_unknown_keys(mean, {"direction", "coeff", "scaling"}, "adversary.mean");
      if (mean.value("direction", "e0") != std::string("e0") ||
          mean.value("scaling", "sqrt_d_over_T") != std::string("sqrt_d_over_T")) {
        throw std::invalid_argument("adversary.mean supports direction e0 / scaling sqrt_d_over_T");
      }
      spec.mean_auto = true;
      spec.mean_coeff = mean.at("coeff").get<double>();
    }
    const Json& var = j.at("variance");
    if (var.is_number()) {
      spec.variance_value = var.get<double>();
    } else {
      reject_unknown_keys(var, {"total"}, "adversary.variance");
      spec.variance_total = true;
      spec.variance_value = var.at("total").get<double>();
    }
    if (spec.variance_value < 0.0) throw std::invalid_argument("variance must be >= 0");
    return spec;
  }
  if (spec.is_construction()) {
    std::set<std::string> keys = {"kind", "mu"};
    if (spec.kind == "simplex_construction") keys.insert("j");
    reject_unknown_keys(j, keys, "adversary");
    require_key(j, "mu", "adversary");
    const Json& mu = j.at("mu");
    if (mu.is_string()) {
      if (mu.get<std::string>() != "auto") throw std::invalid_argument("mu must be a number or \"auto\"");
      spec.mu_auto = true;
    } else {
      spec.mu_auto = false;
      spec.mu_value = mu.get<double>();
    }
    if (j.contains("j")) spec.fixed_j = j.at("j").get<std::size_t>();
    return spec;
  }
  if (spec.kind == "binary_sequence") {
    reject_unknown_keys(j, {"kind", "source", "sequence"}, "adversary");
    if (j.contains("sequence")) {
      spec.sequence = j.at("sequence").get<std::vector<std::vector<int>>>();
      if (spec.sequence.empty()) throw std::invalid_argument("explicit sequence must be nonempty");
    } else {
      spec.source = j.value("source", "uniform");
      if (spec.source != "uniform") {
        throw std::invalid_argument("binary_sequence source must be \"uniform\"");
      }
    }
    return spec;
  }
  if (spec.kind == "shrink_to_bounded") {
    reject_unknown_keys(j, {"kind", "inner", "p", "calibration_samples"}, "adversary");
    require_key(j, "inner", "adversary");
    spec.inner = std::make_shared<AdversarySpec>(from_json(j.at("inner")));
    if (spec.inner->kind == "binary_sequence") {
      throw std::invalid_argument("shrink_to_bounded needs an inner model with an exact mean");
    }
    if (j.contains("p")) spec.shrink_p = j.at("p").get<double>();
    if (j.contains("calibration_samples")) {
      spec.calibration_samples = j.at("calibration_samples").get<std::uint64_t>();
    }
    return spec;
  }
  throw std::invalid_argument("unknown adversary kind \"" + spec.kind + "\"");
}

inline Json AdversarySpec::to_json() const {
  Json j{{"kind", kind}};
  if (kind == "generic_gaussian") {
    if (mean_auto) {
      j["mean"] = Json{{"direction", "e0"}, {"coeff", mean_coeff}, {"scaling", "sqrt_d_over_T"}};
    } else {
      j["mean"] = mean_fixed;
    }
    j["variance"] = variance_total ? Json{{"total", variance_value}} : Json(variance_value);
  } else if (is_construction()) {
    j["mu"] = mu_auto ? Json("auto") : Json(mu_value);
    if (fixed_j) j["j"] = *fixed_j;
  } else if (kind == "binary_sequence") {
    if (!sequence.empty()) j["sequence"] = sequence;
    else j["source"] = "uniform";
  } else if (kind == "shrink_to_bounded") {
    j["inner"] = inner->to_json();
    j["p"] = shrink_p;
    j["calibration_samples"] = calibration_samples;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Player spec
// ---------------------------------------------------------------------------

struct PlayerSpec {
  std::string kind;
  std::optional<double> mu;      // corner_estimator; absent = auto
  std::optional<unsigned> p;     // digit_decoder; absent = auto
  std::optional<double> eta;     // hedge/exp3; absent = auto
  std::optional<double> gamma;   // exp3; absent = auto
  bool w_is_e0 = false;          // fixed_point
  Vector w_fixed;

  static PlayerSpec from_json(const Json& j) {
    require_key(j, "kind", "player");
    PlayerSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    const auto opt_auto = [&](const char* key, auto& slot) {
      if (!j.contains(key)) return;
      const Json& v = j.at(key);
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") {
          throw std::invalid_argument(std::string(key) + " must be a number or \"auto\"");
        }
        return;
      }
      slot = v.get<typename std::decay_t<decltype(slot)>::value_type>();
    };
    if (spec.kind == "corner_estimator") {
      reject_unknown_keys(j, {"kind", "mu"}, "player");
      opt_auto("mu", spec.mu);
    } else if (spec.kind == "digit_decoder") {
      reject_unknown_keys(j, {"kind", "p"}, "player");
      opt_auto("p", spec.p);
    } else if (spec.kind == "hedge") {
      reject_unknown_keys(j, {"kind", "eta"}, "player");
      opt_auto("eta", spec.eta);
    } else if (spec.kind == "exp3") {
      reject_unknown_keys(j, {"kind", "eta", "gamma"}, "player");
      opt_auto("eta", spec.eta);
      opt_auto("gamma", spec.gamma);
    } else if (spec.kind == "fixed_point") {
      reject_unknown_keys(j, {"kind", "w"}, "player");
      require_key(j, "w", "player");
      const Json& w = j.at("w");
      if (w.is_string()) {
        if (w.get<std::string>() != "e0") throw std::invalid_argument("player.w must be an array or \"e0\"");
        spec.w_is_e0 = true;
      } else {
        spec.w_fixed = w.get<Vector>();
      }
    } else {
      throw std::invalid_argument("unknown player kind \"" + spec.kind + "\"");
    }
    return spec;
  }

  Json to_json() const {
    Json j{{"kind", kind}};
    if (kind == "corner_estimator") j["mu"] = mu ? Json(*mu) : Json("auto");
    if (kind == "digit_decoder") j["p"] = p ? Json(*p) : Json("auto");
    if (kind == "hedge") j["eta"] = eta ? Json(*eta) : Json("auto");
    if (kind == "exp3") {
      j["eta"] = eta ? Json(*eta) : Json("auto");
      j["gamma"] = gamma ? Json(*gamma) : Json("auto");
    }
    if (kind == "fixed_point") j["w"] = w_is_e0 ? Json("e0") : Json(w_fixed);
    return j;
  }

  Vector fixed_point_vector(std::size_t D) const {
    if (w_is_e0) {
      Vector w(D, 0.0);
      w[0] = 1.0;
      return w;
    }
    if (w_fixed.size() != D) {
      throw std::invalid_argument("fixed_point w has dimension " +
                                  std::to_string(w_fixed.size()) + ", grid wants " +
                                  std::to_string(D));
    }
    return w_fixed;
  }

  std::unique_ptr<Player> make(const Domain& domain, std::uint64_t T) const {
    const std::size_t D = domain.dim();
    if (kind == "corner_estimator") return CornerEstimator::for_domain(domain, mu);
    if (kind == "digit_decoder") {
      const unsigned pp = p ? *p : DigitDecoder::default_p(T);
      return std::make_unique<DigitDecoder>(D, pp, eta.value_or(Hedge::default_eta(D, T)));
    }
    if (kind == "hedge") return std::make_unique<Hedge>(D, eta.value_or(Hedge::default_eta(D, T)));
    if (kind == "exp3") {
      const double g = gamma.value_or(Exp3::default_gamma(D, T));
      const double e = eta.value_or(g / static_cast<double>(D));
      return std::make_unique<Exp3>(D, e, g);
    }
    if (kind == "fixed_point") return std::make_unique<FixedPoint>(fixed_point_vector(D));
    throw std::invalid_argument("unknown player kind \"" + kind + "\"");
  }
};

// ---------------------------------------------------------------------------
// Experiment config
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string experiment_id;
  std::string protocol;  // "regret" | "error"
  DomainSpec domain;
  AdversarySpec adversary;
  PlayerSpec player;
  std::vector<std::size_t> grid_d;
  std::vector<std::uint64_t> grid_T;
  std::size_t repetitions = 1;
  std::uint64_t master_seed = 0;
  std::string output_dir;  // optional; --out overrides

  static ExperimentConfig from_json(const Json& j) {
    reject_unknown_keys(j,
                        {"experiment_id", "protocol", "domain", "adversary", "player", "grid",
                         "repetitions", "master_seed", "output_dir"},
                        "config");
    for (const char* key :
         {"experiment_id", "protocol", "domain", "adversary", "player", "grid", "repetitions",
          "master_seed"}) {
      require_key(j, key, "config");
    }
    ExperimentConfig cfg;
    cfg.experiment_id = j.at("experiment_id").get<std::string>();
    if (cfg.experiment_id.find_first_of(",\n\"") != std::string::npos) {
      throw std::invalid_argument("experiment_id must not contain commas, quotes or newlines");
    }
    cfg.protocol = j.at("protocol").get<std::string>();
    if (cfg.protocol != "regret" && cfg.protocol != "error") {
      throw std::invalid_argument("protocol must be \"regret\" or \"error\"");
    }
    cfg.domain = DomainSpec::from_json(j.at("domain"));
    cfg.adversary = AdversarySpec::from_json(j.at("adversary"));
    cfg.player = PlayerSpec::from_json(j.at("player"));
    const Json& grid = j.at("grid");
    reject_unknown_keys(grid, {"d", "T"}, "grid");
    require_key(grid, "d", "grid");
    require_key(grid, "T", "grid");
    cfg.grid_d = grid.at("d").get<std::vector<std::size_t>>();
    cfg.grid_T = grid.at("T").get<std::vector<std::uint64_t>>();
    if (cfg.grid_d.empty() || cfg.grid_T.empty()) throw std::invalid_argument("grid must be nonempty");
    cfg.repetitions = j.at("repetitions").get<std::size_t>();
    if (cfg.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    return cfg;
  }

  Json to_json() const {
    Json j{{"experiment_id", experiment_id},
           {"protocol", protocol},
           {"domain", domain.to_json()},
           {"adversary", adversary.to_json()},
           {"player", player.to_json()},
           {"grid", Json{{"d", grid_d}, {"T", grid_T}}},
           {"repetitions", repetitions},
           {"master_seed", master_seed}};
    if (!output_dir.empty()) j["output_dir"] = output_dir;
    return j;
  }
};

/// Kind-level compatibility rules, checked for every grid cell before any
/// run starts.
inline void check_compatibility(const ExperimentConfig& cfg, const Domain& domain,
                                std::uint64_t T) {
  const std::string& player = cfg.player.kind;
  const std::string& adversary = cfg.adversary.kind;

  if (player == "digit_decoder") {
    if (adversary != "binary_sequence") {
      throw incompatible_error(
          "digit_decoder requires the exact-rational loss channel, which only binary_sequence "
          "models provide; got adversary \"" + adversary + "\"");
    }
    if (domain.kind() != DomainKind::Simplex) {
      throw incompatible_error("digit_decoder plays decimal-probed simplex points; domain must "
                               "be simplex");
    }
  }
  if (player == "hedge") {
    if (domain.kind() != DomainKind::Simplex) {
      throw incompatible_error("hedge plays simplex points; domain must be simplex");
    }
    if (adversary != "binary_sequence") {
      throw incompatible_error("hedge expects losses in [0,1]^d; use a binary_sequence model");
    }
  }
  if (player == "corner_estimator") {
    // Throws incompatible_error when the domain has no corner set.
    (void)CornerEstimator::for_domain(domain, cfg.player.mu);
  }
  if (player == "exp3") {
    for (std::size_t i = 0; i < domain.dim(); ++i) {
      Vector e(domain.dim(), 0.0);
      e[i] = 1.0;
      if (!domain.contains(e, 1e-9)) {
        throw incompatible_error("exp3 arms are the basis vectors; e_" + std::to_string(i + 1) +
                                 " lies outside the domain");
      }
    }
  }
  if (player == "fixed_point") {
    const Vector w = cfg.player.fixed_point_vector(domain.dim());
    if (!domain.contains(w, 1e-9)) {
      throw incompatible_error("fixed_point w lies outside the domain");
    }
  }
  if (cfg.adversary.is_construction()) {
    (void)cfg.adversary.resolved_mu(domain.dim(), T);  // horizon preconditions
  }
}

}  // namespace blo
