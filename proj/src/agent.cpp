#include "actsafe/agent.hpp"

#include <chrono>
#include <cmath>

namespace actsafe {

std::string to_string(AgentMode mode) {
  switch (mode) {
    case AgentMode::actsafe: return "actsafe";
    case AgentMode::no_pessimism: return "no-pessimism";
    case AgentMode::opax: return "opax";
    case AgentMode::greedy: return "greedy";
    default: return "uniform";
  }
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::warmup: return "warmup";
    case Phase::expansion: return "expansion";
    default: return "exploitation";
  }
}

std::optional<AgentMode> agent_mode_from_string(const std::string& name) {
  if (name == "actsafe") return AgentMode::actsafe;
  if (name == "no-pessimism") return AgentMode::no_pessimism;
  if (name == "opax") return AgentMode::opax;
  if (name == "greedy") return AgentMode::greedy;
  if (name == "uniform") return AgentMode::uniform;
  return std::nullopt;
}

void AgentConfig::validate() const {
  if (total_episodes < 1) throw std::invalid_argument("AgentConfig: total_episodes must be >= 1");
  if (expansion_episodes < 0 || expansion_episodes > total_episodes)
    throw std::invalid_argument("AgentConfig: need 0 <= expansion_episodes <= total_episodes");
  if (eval_episodes < 0) throw std::invalid_argument("AgentConfig: eval_episodes must be >= 0");
  if (!(model_noise_var > 0.0)) throw std::invalid_argument("AgentConfig: model_noise_var must be > 0");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("AgentConfig: delta in (0,1]");
  if (warmup_action_scale <= 0.0 || warmup_action_scale > 1.0)
    throw std::invalid_argument("AgentConfig: warmup_action_scale in (0,1]");
  kernel.validate();
}

namespace {

// Planner settings for one episode of the given mode and phase.
PlannerConfig planner_for(const AgentConfig& config, Phase phase) {
  PlannerConfig p = config.planner;
  const bool exploit = phase == Phase::exploitation || config.mode == AgentMode::greedy;
  p.objective = exploit ? ObjectiveMode::extrinsic : ObjectiveMode::intrinsic;
  switch (config.mode) {
    case AgentMode::no_pessimism: p.constraint = ConstraintMode::mean_only; break;
    case AgentMode::opax: p.constraint = ConstraintMode::off; break;
    default: p.constraint = ConstraintMode::pessimistic; break;
  }
  return p;
}

// Receding-horizon controller state shared across the steps of one episode.
struct MpcPolicy {
  const DynamicsModel* model;
  const EnvSpec* spec;
  PlannerConfig config;
  RngStream plan_rng;
  Eigen::MatrixXd warm_start;
  Eigen::MatrixXd pending;  // actions still to execute from the last plan
  int pending_used = 0;
  int step = 0;
  double objective_sum = 0.0;
  int plan_calls = 0;
  int infeasible = 0;

  explicit MpcPolicy(const DynamicsModel& m, const EnvSpec& s, PlannerConfig c, RngStream rng)
      : model(&m), spec(&s), config(std::move(c)), plan_rng(std::move(rng)) {
    warm_start = Eigen::MatrixXd::Zero(s.action_dim(), config.horizon);
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& state) {
    if (pending_used == 0 || pending_used >= config.replan_every) {
      CandidatePlan best =
          plan(*model, *spec, state, config, &warm_start, plan_rng.child(step), nullptr);
      objective_sum += best.objective_value;
      ++plan_calls;
      if (!best.feasible) ++infeasible;
      pending = best.actions;
      pending_used = 0;
      warm_start = shift_warm_start(best.actions, config.replan_every);
    }
    Eigen::VectorXd a = pending.col(pending_used);
    ++pending_used;
    ++step;
    return a;
  }
};

}  // namespace

EpisodeRecord run_episode(const DynamicsModel& model, const EnvSpec& spec,
                          const AgentConfig& config, Phase phase, int episode,
                          const RngStream& episode_rng) {
  const auto start = std::chrono::steady_clock::now();
  EpisodeRecord record;
  record.episode = episode;
  record.phase = phase;

  RngStream noise_rng = episode_rng.child(1);
  RngStream action_rng = episode_rng.child(2);

  if (phase == Phase::warmup || config.mode == AgentMode::uniform) {
    const double scale = phase == Phase::warmup ? config.warmup_action_scale : 1.0;
    Policy policy = [&](const Eigen::VectorXd&) {
      Eigen::VectorXd a(spec.action_dim());
      a[0] = action_rng.uniform(scale * spec.action_low, scale * spec.action_high);
      return a;
    };
    record.trajectory = rollout_true(spec, policy, initial_state(spec), noise_rng);
  } else {
    MpcPolicy mpc(model, spec, planner_for(config, phase), action_rng);
    Policy policy = [&mpc](const Eigen::VectorXd& s) { return mpc(s); };
    record.trajectory = rollout_true(spec, policy, initial_state(spec), noise_rng);
    record.mean_plan_objective = mpc.plan_calls > 0 ? mpc.objective_sum / mpc.plan_calls : 0.0;
    record.infeasible_plans = mpc.infeasible;
  }

  record.episode_reward = record.trajectory.total_reward();
  record.episode_cost = record.trajectory.total_cost();
  record.clipped_actions = record.trajectory.clipped_actions;
  record.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return record;
}

DynamicsModel fit_model(const EnvSpec& spec, const AgentConfig& config, const Dataset& data) {
  DynamicsModel model = DynamicsModel::fit(config.kernel, data, spec.state_dim(),
                                           config.model_noise_var, 0.0, config.delta);
  model.gp().set_beta(
      beta_value(config.beta_schedule, config.delta, model.gp().information_gain()));
  return model;
}

RunResult run_agent(const EnvSpec& spec, const AgentConfig& config, std::uint64_t seed,
                    const EpisodeCallback& on_episode) {
  spec.validate();
  config.validate();
  config.planner.validate(spec.horizon);

  RngStream root(seed);
  RunResult result;
  DynamicsModel model = fit_model(spec, config, result.data);
  double cumulative_cost = 0.0;

  try {
    if (config.warmup) {
      EpisodeRecord rec = run_episode(model, spec, config, Phase::warmup, 0, root.child(0));
      rec.cumulative_cost = cumulative_cost;  // warmup cost is not counted
      result.data.append(rec.trajectory);
      model = fit_model(spec, config, result.data);
      result.records.push_back(std::move(rec));
      if (on_episode) on_episode(0, model, result.data);
    }

    for (int n = 1; n <= config.total_episodes; ++n) {
      const Phase phase = n <= config.expansion_episodes ? Phase::expansion : Phase::exploitation;
      EpisodeRecord rec = run_episode(model, spec, config, phase, n, root.child(n));
      cumulative_cost += rec.episode_cost;
      rec.cumulative_cost = cumulative_cost;

      const bool update = phase == Phase::expansion || config.exploit_updates;
      if (update) {
        result.data.append(rec.trajectory);
        model = fit_model(spec, config, result.data);
      }
      result.records.push_back(std::move(rec));
      if (on_episode) on_episode(n, model, result.data);
    }

    result.zero_shot =
        zero_shot_eval(model, spec, config.planner, config.eval_episodes, root.child(1u << 20));
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  return result;
}

ZeroShotSummary zero_shot_eval(const DynamicsModel& model, const EnvSpec& spec,
                               PlannerConfig planner_config, int episodes,
                               const RngStream& rng) {
  ZeroShotSummary summary;
  if (episodes <= 0) return summary;
  planner_config.objective = ObjectiveMode::extrinsic;
  planner_config.constraint = ConstraintMode::pessimistic;

  for (int e = 0; e < episodes; ++e) {
    const RngStream episode_rng = rng.child(e);
    MpcPolicy mpc(model, spec, planner_config, episode_rng.child(2));
    Policy policy = [&mpc](const Eigen::VectorXd& s) { return mpc(s); };
    RngStream noise_rng = episode_rng.child(1);
    Trajectory traj = rollout_true(spec, policy, initial_state(spec), noise_rng);
    summary.rewards.push_back(traj.total_reward());
    summary.costs.push_back(traj.total_cost());
  }

  summary.episodes = episodes;
  const auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(var / (v.size() - 1.0) / v.size()) : 0.0;
  };
  mean_se(summary.rewards, summary.mean_reward, summary.se_reward);
  mean_se(summary.costs, summary.mean_cost, summary.se_cost);
  return summary;
}

}  // namespace actsafe
