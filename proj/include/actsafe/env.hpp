#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "actsafe/rng.hpp"

namespace actsafe {

enum class EnvKind { pendulum, cartpole };

// Ground-truth dynamical system: physics parameters, episode horizon,
// process noise level and the safety constraint threshold.
//
// States are exposed in the model (GP) space:
//   pendulum: (cos th, sin th, omega),           internal (th, omega)
//   cartpole: (p, v, cos th, sin th, omega),     internal (p, v, th, omega)
// The angle is measured from the hanging-down position; the swing-up
// target is th = pi (upright).
struct EnvSpec {
  EnvKind kind = EnvKind::pendulum;

  int horizon = 100;          // T, control steps per episode
  double noise_std = 0.01;    // sigma, i.i.d. Gaussian process noise (internal coords)
  double cost_threshold = 0.0;  // d, episode cost budget
  double cost_max = 6.0;      // declared bound on the per-step cost

  double dt = 0.05;           // control interval [s]
  int substeps = 16;          // fine integration steps per control interval
  double gravity = 9.81;

  // pendulum
  double mass = 1.0;
  double length = 1.0;
  double damping = 0.0;

  // cartpole
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_length = 0.5;   // pivot to pole centre of mass

  double action_low = -2.0;
  double action_high = 2.0;

  static EnvSpec pendulum();
  static EnvSpec cartpole();

  int state_dim() const { return kind == EnvKind::pendulum ? 3 : 5; }
  int internal_dim() const { return kind == EnvKind::pendulum ? 2 : 4; }
  int action_dim() const { return 1; }
  std::string name() const { return kind == EnvKind::pendulum ? "pendulum" : "cartpole"; }

  void validate() const;  // throws std::invalid_argument
};

struct Trajectory {
  Eigen::MatrixXd states;   // state_dim x (T+1)
  Eigen::MatrixXd actions;  // action_dim x T
  Eigen::VectorXd rewards;  // T
  Eigen::VectorXd costs;    // T
  int clipped_actions = 0;  // out-of-bounds policy outputs that were clipped

  int length() const { return static_cast<int>(actions.cols()); }
  double total_reward() const { return rewards.sum(); }
  double total_cost() const { return costs.sum(); }
};

// Rollout aborted on a non-finite state; carries what was collected so far.
class RolloutError : public std::runtime_error {
 public:
  RolloutError(std::string msg, Trajectory partial)
      : std::runtime_error(std::move(msg)), partial_trajectory(std::move(partial)) {}
  Trajectory partial_trajectory;
};

Eigen::VectorXd encode_state(const EnvSpec& spec, const Eigen::VectorXd& internal);
Eigen::VectorXd decode_state(const EnvSpec& spec, const Eigen::VectorXd& encoded);
Eigen::VectorXd initial_state(const EnvSpec& spec);  // encoded; at-rest hanging down

// Deterministic substepped semi-implicit Euler integration of one control
// interval in internal coordinates.
Eigen::VectorXd step_physics(const EnvSpec& spec, const Eigen::VectorXd& internal,
                             double action);

// s' = f*(s, a) + w with w given in internal coordinates.
Eigen::VectorXd true_step(const EnvSpec& spec, const Eigen::VectorXd& state,
                          const Eigen::VectorXd& action, const Eigen::VectorXd& noise);

double reward(const EnvSpec& spec, const Eigen::VectorXd& state, const Eigen::VectorXd& action);
double cost(const EnvSpec& spec, const Eigen::VectorXd& state, const Eigen::VectorXd& action);

// Column-wise evaluation used by the planner on batches of model states.
Eigen::VectorXd reward_batch(const EnvSpec& spec, const Eigen::MatrixXd& states,
                             const Eigen::MatrixXd& actions);
Eigen::VectorXd cost_batch(const EnvSpec& spec, const Eigen::MatrixXd& states,
                           const Eigen::MatrixXd& actions);

// Total mechanical energy of the pendulum, zero at the hanging rest state.
double pendulum_energy(const EnvSpec& spec, const Eigen::VectorXd& internal);

double clamp_action(const EnvSpec& spec, double u);
double wrap_angle(double a);  // to (-pi, pi]

using Policy = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// T-step episode on the true system with i.i.d. N(0, sigma^2 I) process
// noise. Out-of-bounds policy actions are clipped and counted. Throws
// RolloutError (with the partial trajectory) on a non-finite state.
Trajectory rollout_true(const EnvSpec& spec, const Policy& policy,
                        const Eigen::VectorXd& s0, RngStream& rng);

}  // namespace actsafe
