#include "actsafe/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

namespace actsafe {

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "default";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

bool parse_double(const std::string& s, double& out) {
  if (s == "default") {
    out = ExperimentConfig::kUnset;
    return true;
  }
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_int(const std::string& s, int& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1") { out = true; return true; }
  if (s == "false" || s == "0") { out = false; return true; }
  return false;
}

template <typename T, typename Parse>
bool parse_list(const std::string& s, std::vector<T>& out, Parse parse) {
  out.clear();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    T value;
    if (item.empty() || !parse(item, value)) return false;
    out.push_back(value);
  }
  return true;
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

struct KeyEntry {
  std::string name;
  std::function<bool(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::vector<KeyEntry> key_registry() {
  std::vector<KeyEntry> keys;
  auto str = [&](const char* name, std::string ExperimentConfig::*field) {
    keys.push_back({name,
                    [field](ExperimentConfig& c, const std::string& v) { c.*field = v; return true; },
                    [field](const ExperimentConfig& c) { return c.*field; }});
  };
  auto integer = [&](const char* name, int ExperimentConfig::*field) {
    keys.push_back({name,
                    [field](ExperimentConfig& c, const std::string& v) { return parse_int(v, c.*field); },
                    [field](const ExperimentConfig& c) { return std::to_string(c.*field); }});
  };
  auto real = [&](const char* name, double ExperimentConfig::*field) {
    keys.push_back({name,
                    [field](ExperimentConfig& c, const std::string& v) { return parse_double(v, c.*field); },
                    [field](const ExperimentConfig& c) { return format_double(c.*field); }});
  };
  auto boolean = [&](const char* name, bool ExperimentConfig::*field) {
    keys.push_back({name,
                    [field](ExperimentConfig& c, const std::string& v) { return parse_bool(v, c.*field); },
                    [field](const ExperimentConfig& c) { return c.*field ? "true" : "false"; }});
  };

  str("env", &ExperimentConfig::env);
  str("mode", &ExperimentConfig::mode);
  keys.push_back({"seeds",
                  [](ExperimentConfig& c, const std::string& v) {
                    return parse_list<std::uint64_t>(v, c.seeds, parse_u64);
                  },
                  [](const ExperimentConfig& c) {
                    std::string out;
                    for (std::size_t i = 0; i < c.seeds.size(); ++i)
                      out += (i ? "," : "") + std::to_string(c.seeds[i]);
                    return out;
                  }});
  integer("episodes", &ExperimentConfig::episodes);
  integer("expansion_episodes", &ExperimentConfig::expansion_episodes);
  integer("eval_episodes", &ExperimentConfig::eval_episodes);
  boolean("warmup", &ExperimentConfig::warmup);
  boolean("exploit_updates", &ExperimentConfig::exploit_updates);
  integer("jobs", &ExperimentConfig::jobs);
  str("out_dir", &ExperimentConfig::out_dir);

  integer("env.horizon", &ExperimentConfig::env_horizon);
  real("env.noise_std", &ExperimentConfig::env_noise_std);
  real("env.dt", &ExperimentConfig::env_dt);
  integer("env.substeps", &ExperimentConfig::env_substeps);
  real("env.cost_threshold", &ExperimentConfig::env_cost_threshold);
  real("env.action_bound", &ExperimentConfig::env_action_bound);
  real("env.gravity", &ExperimentConfig::env_gravity);
  real("env.mass", &ExperimentConfig::env_mass);
  real("env.length", &ExperimentConfig::env_length);
  real("env.damping", &ExperimentConfig::env_damping);
  real("env.cart_mass", &ExperimentConfig::env_cart_mass);
  real("env.pole_mass", &ExperimentConfig::env_pole_mass);
  real("env.pole_length", &ExperimentConfig::env_pole_length);

  integer("planner.horizon", &ExperimentConfig::planner_horizon);
  integer("planner.particles", &ExperimentConfig::planner_particles);
  integer("planner.population", &ExperimentConfig::planner_population);
  integer("planner.elites", &ExperimentConfig::planner_elites);
  integer("planner.iterations", &ExperimentConfig::planner_iterations);
  real("planner.noise_exponent", &ExperimentConfig::planner_noise_exponent);
  real("planner.init_std_scale", &ExperimentConfig::planner_init_std_scale);
  real("planner.momentum", &ExperimentConfig::planner_momentum);
  real("planner.penalty", &ExperimentConfig::planner_penalty);
  str("planner.optimism", &ExperimentConfig::planner_optimism);
  integer("planner.replan_every", &ExperimentConfig::planner_replan_every);

  str("model.kernel", &ExperimentConfig::model_kernel);
  keys.push_back({"model.lengthscales",
                  [](ExperimentConfig& c, const std::string& v) {
                    return parse_list<double>(v, c.model_lengthscales, parse_double) &&
                           !c.model_lengthscales.empty();
                  },
                  [](const ExperimentConfig& c) {
                    std::string out;
                    for (std::size_t i = 0; i < c.model_lengthscales.size(); ++i)
                      out += (i ? "," : "") + format_double(c.model_lengthscales[i]);
                    return out;
                  }});
  real("model.signal_std", &ExperimentConfig::model_signal_std);
  real("model.noise_var", &ExperimentConfig::model_noise_var);

  str("beta.schedule", &ExperimentConfig::beta_schedule);
  real("beta.value", &ExperimentConfig::beta_value);
  real("beta.rkhs_bound", &ExperimentConfig::beta_rkhs_bound);
  real("delta", &ExperimentConfig::delta);
  return keys;
}

const std::vector<KeyEntry>& registry() {
  static const std::vector<KeyEntry> keys = key_registry();
  return keys;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::istringstream stream(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_no, static_cast<int>(first) + 1, "expected key = value");

    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string value = line.substr(eq + 1);
    const auto value_off = value.find_first_not_of(" \t");
    value.erase(0, value_off == std::string::npos ? value.size() : value_off);
    value.erase(value.find_last_not_of(" \t\r") + 1);
    const int key_col = static_cast<int>(first) + 1;
    const int value_col = static_cast<int>(eq) + 2 +
                          static_cast<int>(value_off == std::string::npos ? 0 : value_off);

    if (key.empty()) throw ConfigError(line_no, key_col, "missing key");
    const auto& keys = registry();
    const auto it = std::find_if(keys.begin(), keys.end(),
                                 [&](const KeyEntry& k) { return k.name == key; });
    if (it == keys.end()) throw ConfigError(line_no, key_col, "unknown key '" + key + "'");
    if (!seen.insert(key).second)
      throw ConfigError(line_no, key_col, "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(line_no, value_col, "missing value for '" + key + "'");
    if (!it->set(config, value))
      throw ConfigError(line_no, value_col, "bad value '" + value + "' for '" + key + "'");
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, 0, "cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& key : registry()) out += key.name + " = " + key.get(config) + "\n";
  return out;
}

ResolvedExperiment resolve_experiment(const ExperimentConfig& config) {
  ResolvedExperiment r;
  if (config.env == "pendulum")
    r.spec = EnvSpec::pendulum();
  else if (config.env == "cartpole")
    r.spec = EnvSpec::cartpole();
  else
    throw std::invalid_argument("unknown env '" + config.env + "'");
  r.env_name = config.env;

  const auto set_if = [](double value, double& target) {
    if (!std::isnan(value)) target = value;
  };
  if (config.env_horizon > 0) r.spec.horizon = config.env_horizon;
  set_if(config.env_noise_std, r.spec.noise_std);
  set_if(config.env_dt, r.spec.dt);
  if (config.env_substeps > 0) r.spec.substeps = config.env_substeps;
  set_if(config.env_cost_threshold, r.spec.cost_threshold);
  if (!std::isnan(config.env_action_bound)) {
    r.spec.action_low = -config.env_action_bound;
    r.spec.action_high = config.env_action_bound;
  }
  set_if(config.env_gravity, r.spec.gravity);
  set_if(config.env_mass, r.spec.mass);
  set_if(config.env_length, r.spec.length);
  set_if(config.env_damping, r.spec.damping);
  set_if(config.env_cart_mass, r.spec.cart_mass);
  set_if(config.env_pole_mass, r.spec.pole_mass);
  set_if(config.env_pole_length, r.spec.pole_length);
  r.spec.validate();

  const auto mode = agent_mode_from_string(config.mode);
  if (!mode) throw std::invalid_argument("unknown mode '" + config.mode + "'");
  r.mode_name = config.mode;

  if (config.seeds.empty()) throw std::invalid_argument("no seeds");
  r.seeds = config.seeds;

  AgentConfig& agent = r.agent;
  agent.mode = *mode;
  agent.total_episodes = config.episodes;
  agent.expansion_episodes =
      config.expansion_episodes < 0 ? config.episodes : config.expansion_episodes;
  agent.eval_episodes = config.eval_episodes;
  agent.warmup = config.warmup;
  agent.exploit_updates = config.exploit_updates;
  agent.delta = config.delta;

  PlannerConfig& planner = agent.planner;
  planner.horizon = config.planner_horizon;
  planner.particles = config.planner_particles;
  planner.population = config.planner_population;
  planner.elites = config.planner_elites;
  planner.iterations = config.planner_iterations;
  planner.noise_exponent = config.planner_noise_exponent;
  planner.init_std_scale = config.planner_init_std_scale;
  planner.momentum = config.planner_momentum;
  planner.penalty = config.planner_penalty;
  planner.replan_every = config.planner_replan_every;
  if (config.planner_optimism == "max")
    planner.optimism = OptimismMode::particle_max;
  else if (config.planner_optimism == "mean")
    planner.optimism = OptimismMode::particle_mean;
  else
    throw std::invalid_argument("planner.optimism must be 'max' or 'mean'");

  const int input_dim = r.spec.state_dim() + r.spec.action_dim();
  KernelParams& kernel = agent.kernel;
  if (config.model_kernel == "se")
    kernel.kind = KernelKind::squared_exponential;
  else if (config.model_kernel == "matern52")
    kernel.kind = KernelKind::matern52;
  else
    throw std::invalid_argument("model.kernel must be 'se' or 'matern52'");
  if (config.model_lengthscales.size() == 1)
    kernel.lengthscales = Eigen::VectorXd::Constant(input_dim, config.model_lengthscales[0]);
  else if (static_cast<int>(config.model_lengthscales.size()) == input_dim)
    kernel.lengthscales = Eigen::Map<const Eigen::VectorXd>(config.model_lengthscales.data(),
                                                            input_dim);
  else
    throw std::invalid_argument("model.lengthscales needs 1 or " + std::to_string(input_dim) +
                                " values for env '" + config.env + "'");
  kernel.signal_std = config.model_signal_std;

  agent.model_noise_var = std::isnan(config.model_noise_var)
                              ? std::max(r.spec.noise_std * r.spec.noise_std, 1e-6)
                              : config.model_noise_var;

  if (config.beta_schedule == "constant")
    agent.beta_schedule.kind = BetaSchedule::Kind::constant;
  else if (config.beta_schedule == "theory")
    agent.beta_schedule.kind = BetaSchedule::Kind::theory;
  else
    throw std::invalid_argument("beta.schedule must be 'constant' or 'theory'");
  agent.beta_schedule.value = config.beta_value;
  agent.beta_schedule.rkhs_bound = config.beta_rkhs_bound;

  agent.validate();
  planner.validate(r.spec.horizon);

  if (config.jobs < 0) throw std::invalid_argument("jobs must be >= 0");
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  r.jobs = config.jobs == 0 ? std::min<int>(hw, static_cast<int>(r.seeds.size()))
                            : config.jobs;

  if (!config.out_dir.empty()) {
    r.out_dir = config.out_dir;
  } else {
    const char* root = std::getenv("ACTSAFE_OUT_ROOT");
    r.out_dir = root != nullptr ? std::string(root) : std::string("runs");
  }

  // Echo with all environment-dependent defaults made concrete.
  ExperimentConfig echo = config;
  echo.expansion_episodes = agent.expansion_episodes;
  echo.jobs = r.jobs;
  echo.out_dir = r.out_dir;
  echo.env_horizon = r.spec.horizon;
  echo.env_noise_std = r.spec.noise_std;
  echo.env_dt = r.spec.dt;
  echo.env_substeps = r.spec.substeps;
  echo.env_cost_threshold = r.spec.cost_threshold;
  echo.env_action_bound = r.spec.action_high;
  echo.env_gravity = r.spec.gravity;
  echo.env_mass = r.spec.mass;
  echo.env_length = r.spec.length;
  echo.env_damping = r.spec.damping;
  echo.env_cart_mass = r.spec.cart_mass;
  echo.env_pole_mass = r.spec.pole_mass;
  echo.env_pole_length = r.spec.pole_length;
  echo.model_noise_var = agent.model_noise_var;
  r.echo = echo;
  return r;
}

}  // namespace actsafe
