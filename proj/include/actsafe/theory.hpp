#pragma once

#include <string>
#include <vector>

#include "actsafe/env.hpp"
#include "actsafe/gp.hpp"
#include "actsafe/rng.hpp"

namespace actsafe {

// 1D linear-Gaussian system s' = a s + b u + w used for the lemma checks;
// its Lipschitz constants are certifiable in closed form.
struct ToyLinearSystem {
  double a = 0.8;
  double b = 0.5;
  double sigma = 0.1;   // process noise std
  int horizon = 5;      // T
  double s0 = 0.5;
  double action_bound = 1.0;
  double cost_max = 1.0;    // C_max
  double reward_max = 1.0;  // R_max

  // c(s,u) = min(0.5 |s| + 0.1 |u|, C_max), in [0, C_max],
  // Lipschitz in the action with constant 0.1.
  double cost(double s, double u) const;
  // r(s,u) in (0, R_max), smooth in both arguments.
  double reward(double s, double u) const;
  double step(double s, double u, double noise) const { return a * s + b * u + noise; }

  // Valid Lipschitz bounds: L_f = |b| (dynamics in the action),
  // L_c = 0.1 (cost in the action).
  double lipschitz_dynamics() const { return std::abs(b); }
  double lipschitz_cost() const { return 0.1; }
};

struct ToyPolicy {
  double gain = 0.0;
  double offset = 0.0;
  double bound = 1.0;
  double operator()(double s) const {
    return std::min(std::max(gain * s + offset, -bound), bound);
  }
};

struct PolicyPair {
  ToyPolicy pi;        // candidate
  ToyPolicy pi_prime;  // reference, within the safe set
  int samples = 10000; // M, Monte-Carlo trajectories
};

struct LipschitzConstants {
  double dynamics = 0.5;  // L_f
  double cost = 0.1;      // L_c
  double cost_max = 1.0;  // C_max
  double sigma = 0.1;
  int horizon = 5;        // T
};

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct CheckReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double tolerance = 0.0;  // allowed lhs - rhs excess
  bool pass = false;
};

// Monte-Carlo estimate over trajectories of pi_prime of
//   sum_t min{L_c ||pi'(s_t) - pi(s_t)||, 2 C_max}
//       + T C_max min{L_f ||pi'(s_t) - pi(s_t)|| / sigma, 1}.
// Exactly zero (with zero error) for identical policies.
McEstimate policy_distance(const PolicyPair& pair, const ToyLinearSystem& system,
                           const LipschitzConstants& constants, std::uint64_t seed);

// Expected episode cost of a policy on the toy system.
McEstimate toy_cost_value(const ToyPolicy& policy, const ToyLinearSystem& system, int samples,
                          std::uint64_t seed);
McEstimate toy_reward_value(const ToyPolicy& policy, const ToyLinearSystem& system, int samples,
                            std::uint64_t seed);

// Checks J_c(pi) - J_c(pi') <= D(pi, pi') within 3 combined standard
// errors.
CheckReport check_cost_comparison(const PolicyPair& pair, const ToyLinearSystem& system,
                                  const LipschitzConstants& constants, std::uint64_t seed);

// Checks the performance-difference identity
//   J_r(pi') - J_r(pi) = E_{tau^{pi'}}[ sum_t A_{r,t}(pi, s_t, pi'(s_t)) ]
// by nested Monte Carlo, or by exact recursion when sigma = 0 (tolerance
// 1e-12).
CheckReport check_performance_difference(const PolicyPair& pair, const ToyLinearSystem& system,
                                         std::uint64_t seed, int outer_samples = 2000,
                                         int inner_samples = 300);

// Fraction of (grid point, output dimension) pairs with
// |mean_j(z) - f*_j(z)| <= beta sigma_j(z) over a grid of (s, a) covering
// the environment's operating range. grid_size is the approximate total
// number of grid points.
double check_calibration(const DynamicsModel& model, const EnvSpec& spec, int grid_size,
                         double beta);

// The grid used by check_calibration: queries z = (s, a) as columns,
// plus the matching noise-free true next states.
void calibration_grid(const EnvSpec& spec, int grid_size, Eigen::MatrixXd& queries,
                      Eigen::MatrixXd& true_next);

}  // namespace actsafe
