#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "actsafe/experiment.hpp"
#include "actsafe/gp.hpp"

namespace {

int nstar_command(double eps, double expansions, double horizon, double cost_max,
                  double reward_max, double sigma0, double sigma, int state_dim,
                  const std::string& convention, std::optional<double> constant_override,
                  double beta_const, const std::string& gamma_kind, double gamma_scale) {
  actsafe::NStarParams params;
  params.epsilon = eps;
  params.expansions = expansions;
  params.horizon = horizon;
  params.sigma0 = sigma0;
  params.sigma = sigma;
  params.state_dim = state_dim;
  if (constant_override) {
    params.constant = *constant_override;
  } else if (convention == "theorem") {
    params.constant = actsafe::theorem_constant(cost_max, reward_max, sigma0, state_dim);
  } else if (convention == "appendix") {
    params.constant = actsafe::appendix_constant(cost_max, reward_max, sigma0, sigma, state_dim);
  } else {
    std::cerr << "--convention must be 'theorem' or 'appendix'\n";
    return actsafe::kExitUsage;
  }

  std::function<double(long long)> gamma;
  if (gamma_kind == "log")
    gamma = [gamma_scale](long long n) { return gamma_scale * std::log1p(static_cast<double>(n)); };
  else if (gamma_kind == "sqrt")
    gamma = [gamma_scale](long long n) { return gamma_scale * std::sqrt(static_cast<double>(n)); };
  else if (gamma_kind == "const")
    gamma = [gamma_scale](long long) { return gamma_scale; };
  else {
    std::cerr << "--gamma must be 'log', 'sqrt' or 'const'\n";
    return actsafe::kExitUsage;
  }
  const auto beta = [beta_const](long long) { return beta_const; };

  const auto result = actsafe::sample_complexity_n_star(params, beta, gamma);
  std::cout << "C = " << params.constant << " ("
            << (constant_override ? "explicit" : convention) << " convention)\n";
  if (result)
    std::cout << "n_star = " << *result << "\n";
  else
    std::cout << "n_star = unbounded (no n <= 1e9 satisfies the inequality)\n";
  return actsafe::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GP-based safe active exploration experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, report_dir;
  int jobs = 0;
  auto* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--jobs", jobs, "parallel seed workers (overrides the config)");

  auto* report = app.add_subcommand("report", "summarize runs in a directory");
  report->add_option("--dir", report_dir, "directory containing run artifacts")->required();

  std::string suite = "all";
  std::uint64_t check_seed = 0;
  auto* check = app.add_subcommand("check", "run a verification suite");
  check->add_option("--suite", suite, "gp-oracle | calibration | lemmas | planner-props | all");
  check->add_option("--seed", check_seed, "suite seed");

  double eps = 0.1, expansions = 1.0, horizon = 10.0, cost_max = 1.0, reward_max = 1.0;
  double sigma0 = 1.0, sigma = 0.1, beta_const = 1.0, gamma_scale = 1.0;
  int state_dim = 1;
  std::string convention = "theorem", gamma_kind = "log";
  std::optional<double> constant_override;
  double constant_value = 0.0;
  auto* nstar = app.add_subcommand("nstar", "episode-count calculator for the expansion bound");
  nstar->add_option("--eps", eps, "target optimality gap")->required();
  nstar->add_option("--H", expansions, "expansion steps");
  nstar->add_option("--T", horizon, "episode horizon")->required();
  nstar->add_option("--C-max", cost_max, "cost bound");
  nstar->add_option("--R-max", reward_max, "reward bound");
  nstar->add_option("--sigma0", sigma0, "kernel signal std");
  nstar->add_option("--sigma", sigma, "process noise std");
  nstar->add_option("--ds", state_dim, "state dimension");
  nstar->add_option("--convention", convention,
                    "'theorem' or 'appendix' normalization of the constant C");
  auto* c_opt = nstar->add_option("--C", constant_value, "explicit constant C (overrides --convention)");
  nstar->add_option("--beta-value", beta_const, "constant beta schedule value");
  nstar->add_option("--gamma", gamma_kind, "gamma schedule: log | sqrt | const");
  nstar->add_option("--gamma-scale", gamma_scale, "gamma schedule scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return actsafe::kExitUsage;
  }

  try {
    if (run->parsed()) return actsafe::run_command(config_path, out_dir, jobs, std::cout, std::cerr);
    if (report->parsed()) return actsafe::report_command(report_dir, std::cout, std::cerr);
    if (check->parsed()) return actsafe::check_command(suite, check_seed, std::cout, std::cerr);
    if (nstar->parsed()) {
      if (c_opt->count() > 0) constant_override = constant_value;
      return nstar_command(eps, expansions, horizon, cost_max, reward_max, sigma0, sigma,
                           state_dim, convention, constant_override, beta_const, gamma_kind,
                           gamma_scale);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return actsafe::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return actsafe::kExitRuntime;
  }
  return actsafe::kExitUsage;
}
