#include "actsafe/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace actsafe {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void PlannerConfig::validate(int episode_horizon) const {
  if (horizon < 1) throw std::invalid_argument("PlannerConfig: horizon must be >= 1");
  if (horizon > episode_horizon)
    throw std::invalid_argument("PlannerConfig: planning horizon exceeds the episode horizon");
  if (particles < 1) throw std::invalid_argument("PlannerConfig: particles must be >= 1");
  if (population < 1) throw std::invalid_argument("PlannerConfig: population must be >= 1");
  if (elites < 1 || elites > population)
    throw std::invalid_argument("PlannerConfig: need 1 <= elites <= population");
  if (iterations < 1) throw std::invalid_argument("PlannerConfig: iterations must be >= 1");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("PlannerConfig: momentum must be in [0,1)");
  if (penalty < 0.0) throw std::invalid_argument("PlannerConfig: penalty must be >= 0");
  if (noise_exponent < 0.0) throw std::invalid_argument("PlannerConfig: noise_exponent must be >= 0");
  if (!(init_std_scale > 0.0)) throw std::invalid_argument("PlannerConfig: init_std_scale must be > 0");
  if (replan_every < 1 || replan_every > horizon)
    throw std::invalid_argument("PlannerConfig: replan_every must be in [1, horizon]");
}

double intrinsic_reward(const DynamicsModel& model, const Eigen::VectorXd& z) {
  return model.predict(z).std.norm();
}

double penalized_score(double objective_value, double constraint_value, double threshold,
                       double lambda) {
  return objective_value - lambda * std::max(constraint_value - threshold, 0.0);
}

Eigen::MatrixXd colored_noise(double exponent, int rows, int cols, RngStream& rng) {
  Eigen::MatrixXd out(rows, cols);
  if (cols == 1) {
    for (int r = 0; r < rows; ++r) out(r, 0) = rng.normal();
    return out;
  }
  const int nfreq = cols / 2;
  Eigen::VectorXd amplitude(nfreq);
  for (int k = 1; k <= nfreq; ++k) amplitude[k - 1] = std::pow(k, -0.5 * exponent);
  const double norm = amplitude.norm();
  for (int r = 0; r < rows; ++r) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
    for (int k = 1; k <= nfreq; ++k) {
      const double a = rng.normal();
      const double b = rng.normal();
      const double w = 2.0 * M_PI * k / cols;
      for (int t = 0; t < cols; ++t)
        x[t] += amplitude[k - 1] * (a * std::cos(w * t) + b * std::sin(w * t));
    }
    out.row(r) = x.transpose() / norm;
  }
  return out;
}

namespace {

struct PopulationEval {
  Eigen::VectorXd objective;
  Eigen::VectorXd constraint;
};

// Rolls every candidate's action sequence through the model with P TS1
// particles plus one mean-propagated path, all batched per timestep.
// Particle p of candidate c draws from parent.child(c * P + p).
PopulationEval evaluate_population(const DynamicsModel& model, const EnvSpec& spec,
                                   const Eigen::VectorXd& s0,
                                   const std::vector<Eigen::MatrixXd>& candidates, int particles,
                                   const RngStream& parent, ObjectiveMode objective_mode,
                                   ConstraintMode constraint_mode, OptimismMode optimism) {
  const int n_cand = static_cast<int>(candidates.size());
  const int paths = particles + 1;  // last path per candidate is the mean rollout
  const int ds = spec.state_dim();
  const int da = spec.action_dim();
  const int q = n_cand * paths;
  const int horizon = static_cast<int>(candidates.front().cols());
  const double sqrt_ds = std::sqrt(static_cast<double>(ds));

  std::vector<RngStream> streams;
  streams.reserve(static_cast<std::size_t>(n_cand) * particles);
  for (int c = 0; c < n_cand; ++c)
    for (int p = 0; p < particles; ++p)
      streams.push_back(parent.child(static_cast<std::uint64_t>(c) * particles + p));

  Eigen::MatrixXd states = s0.replicate(1, q);
  Eigen::MatrixXd actions(da, q);
  Eigen::MatrixXd queries(ds + da, q);
  Eigen::MatrixXd mean;
  Eigen::VectorXd std_dev;
  Eigen::VectorXd path_objective = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd path_cost = Eigen::VectorXd::Zero(q);

  for (int t = 0; t < horizon; ++t) {
    for (int c = 0; c < n_cand; ++c)
      actions.middleCols(c * paths, paths) = candidates[c].col(t).replicate(1, paths);
    queries.topRows(ds) = states;
    queries.bottomRows(da) = actions;
    model.predict_batch(queries, mean, std_dev);

    if (objective_mode == ObjectiveMode::intrinsic)
      path_objective += sqrt_ds * std_dev;
    else
      path_objective += reward_batch(spec, states, actions);
    path_cost += cost_batch(spec, states, actions);

    states = mean;
    for (int c = 0; c < n_cand; ++c) {
      for (int p = 0; p < particles; ++p) {
        const int col = c * paths + p;
        states.col(col) += std_dev[col] * streams[c * particles + p].normal_vector(ds);
      }
    }
  }

  PopulationEval eval;
  eval.objective.resize(n_cand);
  eval.constraint.resize(n_cand);
  for (int c = 0; c < n_cand; ++c) {
    const auto obj = path_objective.segment(c * paths, paths);
    const auto cst = path_cost.segment(c * paths, paths);
    double objective = optimism == OptimismMode::particle_max
                           ? obj.maxCoeff()
                           : obj.head(particles).mean();
    double constraint;
    switch (constraint_mode) {
      case ConstraintMode::pessimistic: constraint = cst.maxCoeff(); break;
      case ConstraintMode::mean_only: constraint = cst[particles]; break;
      default: constraint = kNegInf; break;
    }
    const bool bad = !std::isfinite(objective) ||
                     (constraint_mode != ConstraintMode::off && !std::isfinite(constraint));
    eval.objective[c] = bad ? kNegInf : objective;
    eval.constraint[c] = constraint;
  }
  return eval;
}

}  // namespace

std::pair<double, double> evaluate_candidate(const DynamicsModel& model, const EnvSpec& spec,
                                             const Eigen::VectorXd& s0,
                                             const Eigen::MatrixXd& actions, int particles,
                                             const RngStream& rng, ObjectiveMode objective_mode,
                                             ConstraintMode constraint_mode,
                                             OptimismMode optimism) {
  if (particles < 1) throw std::invalid_argument("evaluate_candidate: particles must be >= 1");
  PopulationEval eval = evaluate_population(model, spec, s0, {actions}, particles, rng,
                                            objective_mode, constraint_mode, optimism);
  return {eval.objective[0], eval.constraint[0]};
}

IcemResult icem_optimize(const IcemProblem& problem, int population, int elites, int iterations,
                         double noise_exponent, double momentum, const RngStream& rng) {
  const int rows = problem.rows;
  const int horizon = problem.horizon;
  const auto clip = [&](Eigen::MatrixXd m) {
    for (int r = 0; r < rows; ++r)
      m.row(r) = m.row(r).cwiseMax(problem.lower[r]).cwiseMin(problem.upper[r]);
    return m;
  };

  Eigen::MatrixXd mean = clip(problem.init_mean);
  Eigen::MatrixXd std_dev = problem.init_std.cwiseMax(1e-8);

  IcemResult result;
  result.best = Eigen::MatrixXd::Zero(rows, horizon);
  result.best_score = kNegInf;

  const RngStream sampler = rng.child(0xC01);
  for (int iter = 0; iter < iterations; ++iter) {
    const RngStream iter_stream = sampler.child(iter);
    std::vector<Eigen::MatrixXd> candidates;
    candidates.reserve(population);
    candidates.push_back(mean);
    if (iter > 0 && result.any_finite && population > 1) candidates.push_back(result.best);
    int c = static_cast<int>(candidates.size());
    for (; c < population; ++c) {
      RngStream noise_stream = iter_stream.child(c);
      Eigen::MatrixXd noise = colored_noise(noise_exponent, rows, horizon, noise_stream);
      candidates.push_back(clip(mean + std_dev.cwiseProduct(noise)));
    }

    Eigen::VectorXd scores = problem.score(candidates, iter);
    result.evaluated += static_cast<int>(candidates.size());

    for (int i = 0; i < scores.size(); ++i) {
      if (std::isfinite(scores[i]) && scores[i] > result.best_score) {
        result.best_score = scores[i];
        result.best = candidates[i];
        result.any_finite = true;
        if (iter + 1 == iterations) result.best_index_last_population = i;
      }
    }
    result.best_score_per_iteration.push_back(result.best_score);

    std::vector<int> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    int usable = 0;
    while (usable < static_cast<int>(order.size()) && usable < elites &&
           std::isfinite(scores[order[usable]]))
      ++usable;
    if (usable == 0) continue;

    Eigen::MatrixXd elite_mean = Eigen::MatrixXd::Zero(rows, horizon);
    for (int e = 0; e < usable; ++e) elite_mean += candidates[order[e]];
    elite_mean /= usable;
    Eigen::MatrixXd elite_var = Eigen::MatrixXd::Zero(rows, horizon);
    for (int e = 0; e < usable; ++e) {
      Eigen::MatrixXd d = candidates[order[e]] - elite_mean;
      elite_var += d.cwiseProduct(d);
    }
    elite_var /= usable;

    mean = clip((1.0 - momentum) * elite_mean + momentum * mean);
    std_dev = ((1.0 - momentum) * elite_var.cwiseSqrt() + momentum * std_dev).cwiseMax(1e-8);
  }
  return result;
}

CandidatePlan plan(const DynamicsModel& model, const EnvSpec& spec, const Eigen::VectorXd& s0,
                   const PlannerConfig& config, const Eigen::MatrixXd* warm_start,
                   const RngStream& rng, PlanDiagnostics* diagnostics) {
  config.validate(spec.horizon);
  if (!s0.allFinite()) throw std::invalid_argument("plan: non-finite initial state");

  const int da = spec.action_dim();
  const int horizon = config.horizon;

  IcemProblem problem;
  problem.rows = da;
  problem.horizon = horizon;
  problem.lower = Eigen::VectorXd::Constant(da, spec.action_low);
  problem.upper = Eigen::VectorXd::Constant(da, spec.action_high);
  problem.init_mean = (warm_start != nullptr && warm_start->cols() == horizon)
                          ? *warm_start
                          : Eigen::MatrixXd::Zero(da, horizon);
  problem.init_std = (config.init_std_scale * (spec.action_high - spec.action_low)) *
                     Eigen::MatrixXd::Ones(da, horizon);

  // Captures the objective/constraint pair behind the best penalized score.
  struct Best {
    double score = kNegInf;
    double objective = 0.0;
    double constraint = 0.0;
  } best;
  int rejected = 0;

  const RngStream eval_parent = rng.child(0xE7A1);
  problem.score = [&](const std::vector<Eigen::MatrixXd>& candidates,
                      int iteration) -> Eigen::VectorXd {
    PopulationEval eval =
        evaluate_population(model, spec, s0, candidates, config.particles,
                            eval_parent.child(iteration), config.objective, config.constraint,
                            config.optimism);
    Eigen::VectorXd scores(eval.objective.size());
    for (int i = 0; i < scores.size(); ++i) {
      if (!std::isfinite(eval.objective[i])) {
        scores[i] = kNegInf;
        ++rejected;
        continue;
      }
      scores[i] = penalized_score(eval.objective[i], eval.constraint[i], spec.cost_threshold,
                                  config.penalty);
      if (scores[i] > best.score) {
        best.score = scores[i];
        best.objective = eval.objective[i];
        best.constraint = eval.constraint[i];
      }
    }
    return scores;
  };

  IcemResult result = icem_optimize(problem, config.population, config.elites, config.iterations,
                                    config.noise_exponent, config.momentum, rng);

  if (diagnostics != nullptr) {
    diagnostics->best_score_per_iteration = result.best_score_per_iteration;
    diagnostics->evaluated_candidates = result.evaluated;
    diagnostics->rejected_candidates = rejected;
  }

  CandidatePlan out;
  if (!result.any_finite) {
    out.actions = Eigen::MatrixXd::Zero(da, horizon);
    out.objective_value = 0.0;
    out.constraint_value = 0.0;
    out.feasible = false;
    return out;
  }
  out.actions = result.best;
  out.objective_value = best.objective;
  out.constraint_value =
      config.constraint == ConstraintMode::off ? 0.0 : best.constraint;
  out.feasible = true;
  return out;
}

Eigen::MatrixXd shift_warm_start(const Eigen::MatrixXd& actions, int steps) {
  Eigen::MatrixXd shifted = Eigen::MatrixXd::Zero(actions.rows(), actions.cols());
  if (steps < actions.cols())
    shifted.leftCols(actions.cols() - steps) = actions.rightCols(actions.cols() - steps);
  return shifted;
}

}  // namespace actsafe
