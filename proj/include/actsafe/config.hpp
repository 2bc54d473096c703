#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "actsafe/agent.hpp"
#include "actsafe/env.hpp"

namespace actsafe {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, int column, const std::string& message)
      : std::runtime_error("config:" + std::to_string(line) + ":" + std::to_string(column) +
                           ": " + message),
        line(line),
        column(column) {}
  int line;
  int column;
};

// Full run recipe as a flat key = value file. Every key has a documented
// default; NaN / -1 mean "use the environment default" and are resolved
// before anything runs.
struct ExperimentConfig {
  std::string env = "pendulum";
  std::string mode = "actsafe";
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  int episodes = 10;
  int expansion_episodes = -1;  // -1: all episodes
  int eval_episodes = 1;
  bool warmup = false;
  bool exploit_updates = false;
  int jobs = 0;  // 0: one worker per core, capped by the seed count
  std::string out_dir;  // empty: $ACTSAFE_OUT_ROOT or ./runs

  // environment overrides (NaN / -1: per-environment default)
  int env_horizon = -1;
  double env_noise_std = kUnset;
  double env_dt = kUnset;
  int env_substeps = -1;
  double env_cost_threshold = kUnset;
  double env_action_bound = kUnset;  // symmetric bound
  double env_gravity = kUnset;
  double env_mass = kUnset;
  double env_length = kUnset;
  double env_damping = kUnset;
  double env_cart_mass = kUnset;
  double env_pole_mass = kUnset;
  double env_pole_length = kUnset;

  // planner
  int planner_horizon = 40;
  int planner_particles = 10;
  int planner_population = 256;
  int planner_elites = 32;
  int planner_iterations = 5;
  double planner_noise_exponent = 2.0;
  double planner_init_std_scale = 0.5;
  double planner_momentum = 0.1;
  double planner_penalty = 1000.0;
  std::string planner_optimism = "max";  // max | mean
  int planner_replan_every = 1;

  // model
  std::string model_kernel = "se";  // se | matern52
  std::vector<double> model_lengthscales = {1.0};  // one value broadcasts
  double model_signal_std = 1.0;
  double model_noise_var = kUnset;  // default: max(noise_std^2, 1e-6)

  // calibration
  std::string beta_schedule = "constant";  // constant | theory
  double beta_value = 2.0;
  double beta_rkhs_bound = 1.0;
  double delta = 0.1;

  static constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
};

// Parses a key = value file ('#' comments, blank lines allowed). Throws
// ConfigError with line/column diagnostics for syntax errors, unknown or
// duplicate keys, and bad values.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);  // adds file I/O errors

// Canonical echo: every key in fixed order with its resolved raw value.
// parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const ExperimentConfig& config);

struct ResolvedExperiment {
  EnvSpec spec;
  AgentConfig agent;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  std::string out_dir;
  std::string mode_name;
  std::string env_name;
  ExperimentConfig echo;  // config with environment defaults substituted in
};

// Applies environment defaults, validates everything, and builds the spec
// and agent configuration. Throws std::invalid_argument on bad settings.
ResolvedExperiment resolve_experiment(const ExperimentConfig& config);

}  // namespace actsafe
