#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flexclf/error.hpp"
#include "flexclf/model.hpp"
#include "flexclf/sim.hpp"

namespace flexclf::cli {

/// Malformed config text: syntax errors (with line/column) and duplicate keys.
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Well-formed text that violates the schema; the message names the field.
class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct PlantConfig {
  std::string type = "integrator_chain";
  // integrator_chain
  int n = 2;
  double Ts = 1e-3;
  // integrator_chain, scalar
  double u_max = 1.0;
  // scalar: x+ = a x + b u
  double a = 1.0;
  double b = 1.0;
  BuckBoostParams buck_boost;
  ActuatorParams actuator;
};

struct ClfConfig {
  std::optional<Matrix> P;
  std::optional<Matrix> Q;
  std::optional<Matrix> R;
  std::optional<double> rho;
  std::optional<double> verify_radius;
  int verify_samples = 500;
};

struct ControllerConfig {
  ControllerKind kind = ControllerKind::Flexible;
  std::optional<Matrix> R_u;
  std::optional<double> alpha;
  std::optional<double> delta;
  double gamma = 0.9;
  std::optional<double> c;
};

struct GridConfig {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> counts;
  std::size_t max_cells = 1000000;
};

struct BenchConfig {
  int repetitions = 10000;
  std::optional<double> budget_us;
};

struct Config {
  PlantConfig plant;
  ClfConfig clf;
  ControllerConfig controller;
  std::optional<Vector> x0;
  int steps = 200;
  double convergence_tol = 1e-6;
  std::uint64_t seed = 0;
  std::optional<GridConfig> grid;
  BenchConfig bench;
};

/// Parses and schema-checks config text. Unknown keys, wrong types and
/// out-of-range values raise ValidationError; bad syntax and duplicate keys
/// raise ParseError.
Config parse_config_text(const std::string& text);

/// Reads `path` and parses it; I/O failures raise ConfigError with the path.
Config parse_config(const std::filesystem::path& path);

/// Config with every default made explicit, plus the objects built from it.
struct Resolved {
  Config config;
  Scenario scenario;
  /// Derived quantities worth reporting (e.g. equilibrium, LQR ratio).
  nlohmann::ordered_json details;
};

/// Builds the plant, synthesizes the CLF if P is not given, and fills every
/// default (rho by the LQR-ratio rule, c = V(x0), delta = V(x0),
/// alpha = 1e3 trace(R_u)/m).
Resolved resolve(const Config& config);

/// Inverse of parse_config_text for a resolved config.
nlohmann::ordered_json to_json(const Config& config);

PlantModel build_plant(const PlantConfig& plant);
double plant_sampling_period(const PlantConfig& plant);

}  // namespace flexclf::cli
