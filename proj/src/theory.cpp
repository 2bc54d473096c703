#include "actsafe/theory.hpp"

#include <cmath>

namespace actsafe {

double ToyLinearSystem::cost(double s, double u) const {
  return std::min(0.5 * std::abs(s) + 0.1 * std::abs(u), cost_max);
}

double ToyLinearSystem::reward(double s, double u) const {
  const double ds = s - 1.0;
  return reward_max * (0.7 / (1.0 + ds * ds) + 0.3 * (0.5 + 0.5 * std::tanh(u)));
}

namespace {

McEstimate mean_and_se(const std::vector<double>& samples) {
  McEstimate e;
  const double n = static_cast<double>(samples.size());
  for (double x : samples) e.value += x;
  e.value /= n;
  if (samples.size() > 1) {
    double var = 0.0;
    for (double x : samples) var += (x - e.value) * (x - e.value);
    e.std_error = std::sqrt(var / (n - 1.0) / n);
  }
  return e;
}

}  // namespace

McEstimate policy_distance(const PolicyPair& pair, const ToyLinearSystem& system,
                           const LipschitzConstants& constants, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> totals(pair.samples);
  for (int m = 0; m < pair.samples; ++m) {
    RngStream traj_rng = rng.child(m);
    double s = system.s0;
    double total = 0.0;
    for (int t = 0; t < constants.horizon; ++t) {
      const double du = std::abs(pair.pi_prime(s) - pair.pi(s));
      total += std::min(constants.cost * du, 2.0 * constants.cost_max) +
               constants.horizon * constants.cost_max *
                   std::min(constants.dynamics * du / constants.sigma, 1.0);
      s = system.step(s, pair.pi_prime(s), system.sigma * traj_rng.normal());
    }
    totals[m] = total;
  }
  return mean_and_se(totals);
}

McEstimate toy_cost_value(const ToyPolicy& policy, const ToyLinearSystem& system, int samples,
                          std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> totals(samples);
  for (int m = 0; m < samples; ++m) {
    RngStream traj_rng = rng.child(m);
    double s = system.s0;
    double total = 0.0;
    for (int t = 0; t < system.horizon; ++t) {
      const double u = policy(s);
      total += system.cost(s, u);
      s = system.step(s, u, system.sigma * traj_rng.normal());
    }
    totals[m] = total;
  }
  return mean_and_se(totals);
}

McEstimate toy_reward_value(const ToyPolicy& policy, const ToyLinearSystem& system, int samples,
                            std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> totals(samples);
  for (int m = 0; m < samples; ++m) {
    RngStream traj_rng = rng.child(m);
    double s = system.s0;
    double total = 0.0;
    for (int t = 0; t < system.horizon; ++t) {
      const double u = policy(s);
      total += system.reward(s, u);
      s = system.step(s, u, system.sigma * traj_rng.normal());
    }
    totals[m] = total;
  }
  return mean_and_se(totals);
}

CheckReport check_cost_comparison(const PolicyPair& pair, const ToyLinearSystem& system,
                                  const LipschitzConstants& constants, std::uint64_t seed) {
  RngStream rng(seed);
  McEstimate cost_pi = toy_cost_value(pair.pi, system, pair.samples, rng.child(1).seed());
  McEstimate cost_pi_prime =
      toy_cost_value(pair.pi_prime, system, pair.samples, rng.child(2).seed());
  McEstimate distance = policy_distance(pair, system, constants, rng.child(3).seed());

  CheckReport report;
  report.name = "cost-comparison";
  report.lhs = cost_pi.value - cost_pi_prime.value;
  report.rhs = distance.value;
  report.lhs_se = std::sqrt(cost_pi.std_error * cost_pi.std_error +
                            cost_pi_prime.std_error * cost_pi_prime.std_error);
  report.rhs_se = distance.std_error;
  report.tolerance = 3.0 * std::sqrt(report.lhs_se * report.lhs_se +
                                     report.rhs_se * report.rhs_se);
  report.pass = report.lhs <= report.rhs + report.tolerance;
  return report;
}

namespace {

// Deterministic value-to-go of pi from state s at step k (sigma = 0).
double exact_value(const ToyPolicy& pi, const ToyLinearSystem& system, int k, double s) {
  double total = 0.0;
  for (int t = k; t < system.horizon; ++t) {
    const double u = pi(s);
    total += system.reward(s, u);
    s = system.step(s, u, 0.0);
  }
  return total;
}

// Monte-Carlo value-to-go of pi from state s at step k.
double mc_value(const ToyPolicy& pi, const ToyLinearSystem& system, int k, double s, int samples,
                RngStream& rng) {
  double total = 0.0;
  for (int m = 0; m < samples; ++m) {
    RngStream traj_rng = rng.child(m);
    double x = s;
    for (int t = k; t < system.horizon; ++t) {
      const double u = pi(x);
      total += system.reward(x, u);
      x = system.step(x, u, system.sigma * traj_rng.normal());
    }
  }
  return total / samples;
}

}  // namespace

CheckReport check_performance_difference(const PolicyPair& pair, const ToyLinearSystem& system,
                                         std::uint64_t seed, int outer_samples,
                                         int inner_samples) {
  CheckReport report;
  report.name = "performance-difference";

  if (system.sigma == 0.0) {
    const double lhs =
        exact_value(pair.pi_prime, system, 0, system.s0) - exact_value(pair.pi, system, 0, system.s0);
    double rhs = 0.0;
    double s = system.s0;
    for (int t = 0; t < system.horizon; ++t) {
      const double a = pair.pi_prime(s);
      const double next = system.step(s, a, 0.0);
      rhs += system.reward(s, a) + exact_value(pair.pi, system, t + 1, next) -
             exact_value(pair.pi, system, t, s);
      s = next;
    }
    report.lhs = lhs;
    report.rhs = rhs;
    report.tolerance = 1e-12;
    report.pass = std::abs(lhs - rhs) <= report.tolerance;
    return report;
  }

  RngStream rng(seed);
  McEstimate reward_pi_prime =
      toy_reward_value(pair.pi_prime, system, outer_samples, rng.child(1).seed());
  McEstimate reward_pi = toy_reward_value(pair.pi, system, outer_samples, rng.child(2).seed());
  report.lhs = reward_pi_prime.value - reward_pi.value;
  report.lhs_se = std::sqrt(reward_pi_prime.std_error * reward_pi_prime.std_error +
                            reward_pi.std_error * reward_pi.std_error);

  // E over tau^{pi'} of the summed advantages of pi, each advantage
  // estimated with inner value rollouts.
  RngStream outer_rng = rng.child(3);
  std::vector<double> advantage_sums(outer_samples);
  for (int m = 0; m < outer_samples; ++m) {
    RngStream traj_rng = outer_rng.child(m);
    RngStream path_rng = traj_rng.child(0);
    double s = system.s0;
    double total = 0.0;
    for (int t = 0; t < system.horizon; ++t) {
      const double a = pair.pi_prime(s);
      RngStream inner = traj_rng.child(1 + t);
      RngStream next_rng = inner.child(0);
      RngStream value_next_rng = inner.child(1);
      RngStream value_here_rng = inner.child(2);
      // E_w[J_{t+1}(pi, f(s,a) + w)], one fresh noise draw per inner sample
      double mean_next_value = 0.0;
      for (int i = 0; i < inner_samples; ++i) {
        const double next = system.step(s, a, system.sigma * next_rng.normal());
        RngStream one = value_next_rng.child(i);
        double x = next;
        for (int u_t = t + 1; u_t < system.horizon; ++u_t) {
          const double u = pair.pi(x);
          mean_next_value += system.reward(x, u);
          x = system.step(x, u, system.sigma * one.normal());
        }
      }
      mean_next_value /= inner_samples;
      total += system.reward(s, a) + mean_next_value -
               mc_value(pair.pi, system, t, s, inner_samples, value_here_rng);
      s = system.step(s, a, system.sigma * path_rng.normal());
    }
    advantage_sums[m] = total;
  }
  McEstimate rhs = mean_and_se(advantage_sums);
  report.rhs = rhs.value;
  report.rhs_se = rhs.std_error;
  report.tolerance =
      3.0 * std::sqrt(report.lhs_se * report.lhs_se + report.rhs_se * report.rhs_se);
  report.pass = std::abs(report.lhs - report.rhs) <= report.tolerance;
  return report;
}

void calibration_grid(const EnvSpec& spec, int grid_size, Eigen::MatrixXd& queries,
                      Eigen::MatrixXd& true_next) {
  const int dims = spec.internal_dim() + 1;
  const int per_dim = std::max(2, static_cast<int>(std::round(std::pow(
                                      static_cast<double>(grid_size), 1.0 / dims))));
  Eigen::MatrixXd ranges(dims, 2);  // internal state dims then action
  if (spec.kind == EnvKind::pendulum) {
    ranges << -M_PI, M_PI, -8.0, 8.0, spec.action_low, spec.action_high;
  } else {
    ranges << -1.0, 1.0, -3.0, 3.0, -M_PI, M_PI, -8.0, 8.0, spec.action_low, spec.action_high;
  }

  int total = 1;
  for (int d = 0; d < dims; ++d) total *= per_dim;
  queries.resize(spec.state_dim() + spec.action_dim(), total);
  true_next.resize(spec.state_dim(), total);

  Eigen::VectorXd internal(spec.internal_dim());
  std::vector<int> idx(dims, 0);
  for (int i = 0; i < total; ++i) {
    for (int d = 0; d < dims; ++d) {
      const double frac = per_dim == 1 ? 0.5 : static_cast<double>(idx[d]) / (per_dim - 1);
      const double value = ranges(d, 0) + frac * (ranges(d, 1) - ranges(d, 0));
      if (d < spec.internal_dim())
        internal[d] = value;
      else {
        const Eigen::VectorXd s = encode_state(spec, internal);
        queries.col(i) << s, value;
        true_next.col(i) = encode_state(spec, step_physics(spec, internal, value));
      }
    }
    for (int d = dims - 1; d >= 0; --d) {
      if (++idx[d] < per_dim) break;
      idx[d] = 0;
    }
  }
}

double check_calibration(const DynamicsModel& model, const EnvSpec& spec, int grid_size,
                         double beta) {
  Eigen::MatrixXd queries, truth;
  calibration_grid(spec, grid_size, queries, truth);
  Eigen::MatrixXd mean;
  Eigen::VectorXd std_dev;
  model.predict_batch(queries, mean, std_dev);

  long long covered = 0;
  const Eigen::Index n = queries.cols();
  for (Eigen::Index i = 0; i < n; ++i)
    covered += ((mean.col(i) - truth.col(i)).cwiseAbs().array() <= beta * std_dev[i]).count();
  return static_cast<double>(covered) / (static_cast<double>(n) * spec.state_dim());
}

}  // namespace actsafe
