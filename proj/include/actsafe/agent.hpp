#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "actsafe/env.hpp"
#include "actsafe/gp.hpp"
#include "actsafe/planner.hpp"
#include "actsafe/rng.hpp"

namespace actsafe {

// actsafe      intrinsic objective, pessimistic constraint
// no_pessimism intrinsic objective, mean-model constraint
// opax         intrinsic objective, no constraint
// greedy       extrinsic objective from episode 1, pessimistic constraint
// uniform      uniform random actions, no planner
enum class AgentMode { actsafe, no_pessimism, opax, greedy, uniform };

enum class Phase { warmup, expansion, exploitation };

std::string to_string(AgentMode mode);
std::string to_string(Phase phase);
std::optional<AgentMode> agent_mode_from_string(const std::string& name);

struct AgentConfig {
  AgentMode mode = AgentMode::actsafe;
  int expansion_episodes = 10;  // n*, intrinsic phase length
  int total_episodes = 10;      // N
  int eval_episodes = 1;        // zero-shot evaluation episodes after learning
  bool exploit_updates = false; // feed exploitation-phase data back into the model
  bool warmup = false;          // small-amplitude warm-start episode before episode 1
  double warmup_action_scale = 0.1;

  PlannerConfig planner;
  KernelParams kernel;           // over (s, a); sized per environment
  double model_noise_var = 1e-4;
  BetaSchedule beta_schedule;
  double delta = 0.1;

  void validate() const;
};

struct EpisodeRecord {
  int episode = 0;  // 1-based; 0 for the warmup episode
  Phase phase = Phase::expansion;
  Trajectory trajectory;
  double episode_reward = 0.0;      // J_r
  double episode_cost = 0.0;        // J_c
  double cumulative_cost = 0.0;     // sum of J_c over counted episodes so far
  double mean_plan_objective = 0.0;
  int infeasible_plans = 0;
  int clipped_actions = 0;
  double wall_ms = 0.0;
};

struct ZeroShotSummary {
  int episodes = 0;
  double mean_reward = 0.0;
  double mean_cost = 0.0;
  double se_reward = 0.0;
  double se_cost = 0.0;
  std::vector<double> rewards;
  std::vector<double> costs;
};

struct RunResult {
  std::vector<EpisodeRecord> records;
  ZeroShotSummary zero_shot;
  Dataset data;
  std::optional<std::string> error;  // set when the run aborted with partial records
};

// Invoked after the model has been refit on the data through `episode`.
using EpisodeCallback = std::function<void(int episode, const DynamicsModel&, const Dataset&)>;

// One T-step episode on the true system, acting through the planner (or
// uniformly at random for the uniform mode). The model is the one fitted
// on data through episode-1.
EpisodeRecord run_episode(const DynamicsModel& model, const EnvSpec& spec,
                          const AgentConfig& config, Phase phase, int episode,
                          const RngStream& episode_rng);

// The full loop: expansion episodes 1..n*, exploitation n*+1..N, model
// refit after every episode, then a zero-shot evaluation of the final
// model. Bit-reproducible for a fixed seed.
RunResult run_agent(const EnvSpec& spec, const AgentConfig& config, std::uint64_t seed,
                    const EpisodeCallback& on_episode = nullptr);

// Evaluation rollouts with the extrinsic objective and pessimistic
// constraint; no model updates.
ZeroShotSummary zero_shot_eval(const DynamicsModel& model, const EnvSpec& spec,
                               PlannerConfig planner_config, int episodes,
                               const RngStream& rng);

// Fit the dynamics model on the dataset with the configured kernel and
// confidence schedule.
DynamicsModel fit_model(const EnvSpec& spec, const AgentConfig& config, const Dataset& data);

}  // namespace actsafe
