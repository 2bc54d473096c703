#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "actsafe/env.hpp"
#include "actsafe/gp.hpp"
#include "actsafe/rng.hpp"

namespace actsafe {

enum class ObjectiveMode { intrinsic, extrinsic };
enum class ConstraintMode { pessimistic, mean_only, off };
enum class OptimismMode { particle_max, particle_mean };

struct PlannerConfig {
  int horizon = 40;        // H, planning steps
  int particles = 10;      // P, TS1 particles per candidate
  int population = 256;
  int elites = 32;
  int iterations = 5;
  double noise_exponent = 2.0;   // colored-noise spectrum f^-exponent
  double init_std_scale = 0.5;   // initial std = scale * (high - low)
  double momentum = 0.1;         // blend of previous mean/std into the elite refit
  double penalty = 1000.0;       // lambda
  ObjectiveMode objective = ObjectiveMode::intrinsic;
  ConstraintMode constraint = ConstraintMode::pessimistic;
  OptimismMode optimism = OptimismMode::particle_max;
  int replan_every = 1;    // actions executed per plan before replanning

  void validate(int episode_horizon) const;  // throws std::invalid_argument
};

struct CandidatePlan {
  Eigen::MatrixXd actions;  // action_dim x horizon, within bounds
  double objective_value = 0.0;
  double constraint_value = 0.0;
  bool feasible = true;  // false only for the zero-action fallback
};

struct PlanDiagnostics {
  std::vector<double> best_score_per_iteration;  // running best, nondecreasing
  int evaluated_candidates = 0;
  int rejected_candidates = 0;
};

// Exploration reward: Euclidean norm of the posterior std vector at z.
double intrinsic_reward(const DynamicsModel& model, const Eigen::VectorXd& z);

// objective - lambda * max(constraint - d, 0)
double penalized_score(double objective_value, double constraint_value, double threshold,
                       double lambda);

// P TS1 particle rollouts of the action sequence plus one mean-propagated
// rollout. The objective aggregates the per-step rewards (intrinsic:
// ||sigma||, extrinsic: environment reward) over paths; the constraint is
// the max of summed costs over all paths (pessimistic), the
// mean-propagated path alone (mean_only), or -inf (off). Including the
// mean path in the pessimistic max makes it dominate mean_only for every
// candidate. Returns {objective_value, constraint_value}.
std::pair<double, double> evaluate_candidate(const DynamicsModel& model, const EnvSpec& spec,
                                             const Eigen::VectorXd& s0,
                                             const Eigen::MatrixXd& actions, int particles,
                                             const RngStream& rng, ObjectiveMode objective_mode,
                                             ConstraintMode constraint_mode,
                                             OptimismMode optimism = OptimismMode::particle_max);

// Receding-horizon iCEM: colored-noise candidate sampling around a running
// mean, elite refit with momentum, best-so-far retention, warm start from
// the shifted previous mean. Deterministic given rng.
CandidatePlan plan(const DynamicsModel& model, const EnvSpec& spec, const Eigen::VectorXd& s0,
                   const PlannerConfig& config, const Eigen::MatrixXd* warm_start,
                   const RngStream& rng, PlanDiagnostics* diagnostics = nullptr);

// Drop the first `steps` actions and pad with zeros; the next call's warm
// start.
Eigen::MatrixXd shift_warm_start(const Eigen::MatrixXd& actions, int steps);

// Zero-mean colored noise with power spectrum ~ f^-exponent and unit
// marginal variance, one independent sequence per row.
Eigen::MatrixXd colored_noise(double exponent, int rows, int cols, RngStream& rng);

// Generic iCEM core over action matrices; plan() wires TS1 evaluation into
// it and tests drive it with synthetic objectives.
struct IcemProblem {
  int rows = 1;
  int horizon = 1;
  Eigen::VectorXd lower;  // per row
  Eigen::VectorXd upper;
  Eigen::MatrixXd init_mean;  // rows x horizon
  Eigen::MatrixXd init_std;
  // Scores for a population of candidates at a given iteration; -inf marks
  // a rejected candidate.
  std::function<Eigen::VectorXd(const std::vector<Eigen::MatrixXd>&, int iteration)> score;
};

struct IcemResult {
  Eigen::MatrixXd best;
  double best_score = 0.0;
  bool any_finite = false;
  std::vector<double> best_score_per_iteration;
  int evaluated = 0;
  int best_index_last_population = -1;
};

IcemResult icem_optimize(const IcemProblem& problem, int population, int elites, int iterations,
                         double noise_exponent, double momentum, const RngStream& rng);

}  // namespace actsafe
