#include "actsafe/env.hpp"

#include <cmath>

namespace actsafe {

EnvSpec EnvSpec::pendulum() {
  EnvSpec s;
  s.kind = EnvKind::pendulum;
  s.horizon = 100;
  s.noise_std = 0.01;
  s.cost_threshold = 0.0;
  s.cost_max = 6.0;
  s.dt = 0.05;
  s.substeps = 16;
  s.action_low = -2.0;
  s.action_high = 2.0;
  return s;
}

EnvSpec EnvSpec::cartpole() {
  EnvSpec s;
  s.kind = EnvKind::cartpole;
  s.horizon = 100;
  s.noise_std = 0.01;
  s.cost_threshold = 0.75;
  s.cost_max = 2.0;
  s.dt = 0.02;
  s.substeps = 8;
  s.action_low = -10.0;
  s.action_high = 10.0;
  return s;
}

void EnvSpec::validate() const {
  if (horizon < 1) throw std::invalid_argument("EnvSpec: horizon must be >= 1");
  if (noise_std < 0.0) throw std::invalid_argument("EnvSpec: noise_std must be >= 0");
  if (cost_threshold < 0.0) throw std::invalid_argument("EnvSpec: cost_threshold must be >= 0");
  if (!(action_low < action_high)) throw std::invalid_argument("EnvSpec: action_low < action_high required");
  if (dt <= 0.0 || substeps < 1) throw std::invalid_argument("EnvSpec: dt > 0 and substeps >= 1 required");
  if (mass <= 0.0 || length <= 0.0 || cart_mass <= 0.0 || pole_mass <= 0.0 || pole_length <= 0.0)
    throw std::invalid_argument("EnvSpec: masses and lengths must be positive");
}

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

double clamp_action(const EnvSpec& spec, double u) {
  return std::min(std::max(u, spec.action_low), spec.action_high);
}

Eigen::VectorXd encode_state(const EnvSpec& spec, const Eigen::VectorXd& x) {
  Eigen::VectorXd s(spec.state_dim());
  if (spec.kind == EnvKind::pendulum) {
    s << std::cos(x[0]), std::sin(x[0]), x[1];
  } else {
    s << x[0], x[1], std::cos(x[2]), std::sin(x[2]), x[3];
  }
  return s;
}

Eigen::VectorXd decode_state(const EnvSpec& spec, const Eigen::VectorXd& s) {
  Eigen::VectorXd x(spec.internal_dim());
  if (spec.kind == EnvKind::pendulum) {
    x << std::atan2(s[1], s[0]), s[2];
  } else {
    x << s[0], s[1], std::atan2(s[3], s[2]), s[4];
  }
  return x;
}

Eigen::VectorXd initial_state(const EnvSpec& spec) {
  return encode_state(spec, Eigen::VectorXd::Zero(spec.internal_dim()));
}

namespace {

// Pendulum: th measured from hanging down, th'' = -(g/l) sin th - b th' + u/(m l^2).
void pendulum_accel(const EnvSpec& spec, double th, double om, double u, double& om_dot) {
  om_dot = -(spec.gravity / spec.length) * std::sin(th) - spec.damping * om +
           u / (spec.mass * spec.length * spec.length);
}

// Cartpole with a uniform pole, th measured from hanging down.
void cartpole_accel(const EnvSpec& spec, double th, double om, double force,
                    double& om_dot, double& v_dot) {
  const double mt = spec.cart_mass + spec.pole_mass;
  const double ml = spec.pole_mass * spec.pole_length;
  const double st = std::sin(th);
  const double ct = std::cos(th);
  const double tmp = (force + ml * om * om * st) / mt;
  om_dot = (-spec.gravity * st - ct * tmp) /
           (spec.pole_length * (4.0 / 3.0 - spec.pole_mass * ct * ct / mt));
  v_dot = tmp - ml * om_dot * ct / mt;
}

}  // namespace

Eigen::VectorXd step_physics(const EnvSpec& spec, const Eigen::VectorXd& x, double u) {
  const double h = spec.dt / spec.substeps;
  Eigen::VectorXd y = x;
  if (spec.kind == EnvKind::pendulum) {
    for (int i = 0; i < spec.substeps; ++i) {
      double om_dot;
      pendulum_accel(spec, y[0], y[1], u, om_dot);
      y[1] += h * om_dot;
      y[0] += h * y[1];
    }
  } else {
    for (int i = 0; i < spec.substeps; ++i) {
      double om_dot, v_dot;
      cartpole_accel(spec, y[2], y[3], u, om_dot, v_dot);
      y[1] += h * v_dot;
      y[3] += h * om_dot;
      y[0] += h * y[1];
      y[2] += h * y[3];
    }
  }
  return y;
}

Eigen::VectorXd true_step(const EnvSpec& spec, const Eigen::VectorXd& state,
                          const Eigen::VectorXd& action, const Eigen::VectorXd& noise) {
  if (!state.allFinite()) throw std::domain_error("true_step: non-finite state");
  if (noise.size() != spec.internal_dim())
    throw std::invalid_argument("true_step: noise must have the internal dimension");
  Eigen::VectorXd x = decode_state(spec, state);
  x = step_physics(spec, x, action[0]);
  x += noise;
  return encode_state(spec, x);
}

namespace {

double pendulum_reward(double cth, double sth, double om, double u) {
  const double dth = wrap_angle(std::atan2(sth, cth) - M_PI);
  return -(dth * dth + 0.1 * om * om + 0.02 * u * u);
}

double cartpole_reward(double p, double v, double cth, double sth, double om, double u) {
  const double dth = wrap_angle(std::atan2(sth, cth) - M_PI);
  return -(dth * dth + p * p + 0.1 * (v * v + om * om)) - 0.01 * u * u;
}

}  // namespace

double reward(const EnvSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  if (spec.kind == EnvKind::pendulum) return pendulum_reward(s[0], s[1], s[2], a[0]);
  return cartpole_reward(s[0], s[1], s[2], s[3], s[4], a[0]);
}

double cost(const EnvSpec& spec, const Eigen::VectorXd& s, const Eigen::VectorXd&) {
  if (spec.kind == EnvKind::pendulum) return std::max(std::abs(s[2]) - 6.0, 0.0);
  return std::max(std::abs(s[0]) - 0.5, 0.0);
}

Eigen::VectorXd reward_batch(const EnvSpec& spec, const Eigen::MatrixXd& s,
                             const Eigen::MatrixXd& a) {
  const Eigen::Index q = s.cols();
  Eigen::VectorXd out(q);
  if (spec.kind == EnvKind::pendulum) {
    for (Eigen::Index i = 0; i < q; ++i)
      out[i] = pendulum_reward(s(0, i), s(1, i), s(2, i), a(0, i));
  } else {
    for (Eigen::Index i = 0; i < q; ++i)
      out[i] = cartpole_reward(s(0, i), s(1, i), s(2, i), s(3, i), s(4, i), a(0, i));
  }
  return out;
}

Eigen::VectorXd cost_batch(const EnvSpec& spec, const Eigen::MatrixXd& s,
                           const Eigen::MatrixXd&) {
  if (spec.kind == EnvKind::pendulum)
    return (s.row(2).cwiseAbs().array() - 6.0).max(0.0).transpose();
  return (s.row(0).cwiseAbs().array() - 0.5).max(0.0).transpose();
}

double pendulum_energy(const EnvSpec& spec, const Eigen::VectorXd& x) {
  const double kinetic = 0.5 * spec.mass * spec.length * spec.length * x[1] * x[1];
  const double potential = spec.mass * spec.gravity * spec.length * (1.0 - std::cos(x[0]));
  return kinetic + potential;
}

Trajectory rollout_true(const EnvSpec& spec, const Policy& policy,
                        const Eigen::VectorXd& s0, RngStream& rng) {
  const int T = spec.horizon;
  Trajectory traj;
  traj.states.resize(spec.state_dim(), T + 1);
  traj.actions.resize(spec.action_dim(), T);
  traj.rewards.resize(T);
  traj.costs.resize(T);

  Eigen::VectorXd s = s0;
  traj.states.col(0) = s;
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd a = policy(s);
    const double clipped = clamp_action(spec, a[0]);
    if (clipped != a[0]) ++traj.clipped_actions;
    a[0] = clipped;

    traj.actions.col(t) = a;
    traj.rewards[t] = reward(spec, s, a);
    traj.costs[t] = cost(spec, s, a);

    const Eigen::VectorXd noise = spec.noise_std * rng.normal_vector(spec.internal_dim());
    s = true_step(spec, s, a, noise);
    if (!s.allFinite()) {
      Trajectory partial = traj;
      partial.states.conservativeResize(Eigen::NoChange, t + 1);
      partial.actions.conservativeResize(Eigen::NoChange, t + 1);
      partial.rewards.conservativeResize(t + 1);
      partial.costs.conservativeResize(t + 1);
      throw RolloutError("rollout_true: non-finite state at step " + std::to_string(t),
                         std::move(partial));
    }
    traj.states.col(t + 1) = s;
  }
  return traj;
}

}  // namespace actsafe
