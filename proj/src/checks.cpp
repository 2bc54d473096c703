#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "actsafe/agent.hpp"
#include "actsafe/experiment.hpp"
#include "actsafe/theory.hpp"

namespace actsafe {

namespace {

// ---- dense-solve oracle for the GP posteriors ----
// Deliberately shares nothing with GpModel: scalar kernel evaluation in a
// plain loop and a full-pivot LU solve of the regularized Gram matrix.

double oracle_kernel(const KernelParams& params, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b) {
  double r2 = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double d = (a[i] - b[i]) / params.lengthscales[i];
    r2 += d * d;
  }
  const double s2 = params.signal_std * params.signal_std;
  if (params.kind == KernelKind::squared_exponential) return s2 * std::exp(-0.5 * r2);
  const double r = std::sqrt(r2);
  const double sr5 = std::sqrt(5.0) * r;
  return s2 * (1.0 + sr5 + 5.0 * r2 / 3.0) * std::exp(-sr5);
}

struct OracleResult {
  Eigen::VectorXd mean;
  double variance = 0.0;
};

OracleResult oracle_posterior(const KernelParams& params, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& Y, double noise_var,
                              const Eigen::VectorXd& z) {
  const int n = static_cast<int>(X.cols());
  OracleResult result;
  if (n == 0) {
    result.mean = Eigen::VectorXd::Zero(Y.rows());
    result.variance = oracle_kernel(params, z, z);
    return result;
  }
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gram(i, j) = oracle_kernel(params, X.col(i), X.col(j));
  gram.diagonal().array() += noise_var;
  Eigen::VectorXd kvec(n);
  for (int i = 0; i < n; ++i) kvec[i] = oracle_kernel(params, X.col(i), z);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  result.mean = Y * lu.solve(kvec);
  result.variance = oracle_kernel(params, z, z) - kvec.dot(lu.solve(kvec));
  return result;
}

double relative_error(double got, double want) {
  return std::abs(got - want) / (1.0 + std::abs(want));
}

std::string indexed(const std::string& prefix, int i) {
  std::ostringstream out;
  out << prefix << "/" << i;
  return out.str();
}

}  // namespace

std::vector<CheckLine> gp_oracle_suite(int datasets, std::uint64_t seed) {
  std::vector<CheckLine> lines;
  RngStream root(seed);
  double overall = 0.0;
  for (int d = 0; d < datasets; ++d) {
    RngStream rng = root.child(d);
    const int input_dim = 2 + static_cast<int>(rng.integer() % 4);   // <= 5
    const int output_dim = 1 + static_cast<int>(rng.integer() % 3);
    const int n = static_cast<int>(rng.integer() % 51);              // <= 50
    KernelParams params;
    params.kind = rng.integer() % 2 == 0 ? KernelKind::squared_exponential
                                         : KernelKind::matern52;
    params.lengthscales.resize(input_dim);
    for (int i = 0; i < input_dim; ++i) params.lengthscales[i] = rng.uniform(0.3, 2.0);
    params.signal_std = rng.uniform(0.5, 2.0);
    const double noise_var = rng.uniform(1e-6, 1e-2);

    Eigen::MatrixXd X(input_dim, n), Y(output_dim, n);
    for (int i = 0; i < n; ++i) {
      X.col(i) = 2.0 * rng.normal_vector(input_dim);
      Y.col(i) = rng.normal_vector(output_dim);
    }
    const GpModel model = GpModel::fit(params, X, Y, noise_var, 2.0, 0.1);

    double worst = 0.0;
    for (int q = 0; q < 10; ++q) {
      const Eigen::VectorXd z = 2.5 * rng.normal_vector(input_dim);
      const PosteriorEval got = model.posterior(z);
      const OracleResult want = oracle_posterior(params, X, Y, noise_var, z);
      for (int j = 0; j < output_dim; ++j)
        worst = std::max(worst, relative_error(got.mean[j], want.mean[j]));
      const double got_var = got.std[0] * got.std[0];
      worst = std::max(worst, relative_error(got_var, std::max(want.variance, 0.0)));
    }
    overall = std::max(overall, worst);
    lines.push_back({indexed("gp-oracle", d), worst, 1e-8, worst <= 1e-8, true});
  }
  lines.push_back({"gp-oracle/max", overall, 1e-8, overall <= 1e-8, true});
  return lines;
}

namespace {

// Reduced-budget ActSafe pendulum run used by the standalone calibration
// suite; the acceptance tests measure coverage on the full-scale runs.
AgentConfig quick_pendulum_agent() {
  AgentConfig agent;
  agent.mode = AgentMode::actsafe;
  agent.total_episodes = 10;
  agent.expansion_episodes = 10;
  agent.eval_episodes = 0;
  agent.kernel = KernelParams::se(4, 1.0, 1.0);
  agent.model_noise_var = 1e-4;
  agent.planner.horizon = 20;
  agent.planner.particles = 3;
  agent.planner.population = 24;
  agent.planner.elites = 5;
  agent.planner.iterations = 3;
  agent.planner.replan_every = 2;
  agent.planner.init_std_scale = 0.25;
  return agent;
}

}  // namespace

std::vector<CheckLine> calibration_suite(std::uint64_t seed) {
  EnvSpec spec = EnvSpec::pendulum();
  spec.horizon = 60;
  AgentConfig agent = quick_pendulum_agent();

  std::vector<CheckLine> lines;
  const EpisodeCallback on_episode = [&](int episode, const DynamicsModel& model,
                                         const Dataset&) {
    const double coverage = check_calibration(model, spec, 1000, model.beta());
    lines.push_back({indexed("calibration/after-episode", episode), coverage, 0.9,
                     coverage >= 0.9, true});
  };
  RunResult result = run_agent(spec, agent, seed, on_episode);
  if (result.error)
    lines.push_back({"calibration/run-completed", 0.0, 1.0, false, true});
  return lines;
}

std::vector<CheckLine> lemmas_suite(std::uint64_t seed, int pairs) {
  std::vector<CheckLine> lines;
  RngStream rng(seed);
  ToyLinearSystem system;
  LipschitzConstants certified;
  certified.dynamics = system.lipschitz_dynamics();
  certified.cost = system.lipschitz_cost();
  certified.cost_max = system.cost_max;
  certified.sigma = system.sigma;
  certified.horizon = system.horizon;

  const auto random_policy = [&](RngStream& r) {
    ToyPolicy p;
    p.gain = r.uniform(-1.0, 1.0);
    p.offset = r.uniform(-0.5, 0.5);
    p.bound = system.action_bound;
    return p;
  };

  {
    RngStream r = rng.child(1);
    ToyPolicy p = random_policy(r);
    const McEstimate d = policy_distance({p, p, 2000}, system, certified, r.seed());
    lines.push_back({"lemmas/distance-identical", d.value, 0.0, d.value == 0.0, true});
  }
  {
    // both min terms saturate: expected T (2 C_max + T C_max)
    ToyPolicy left{0.0, -1.0, 1.0};
    ToyPolicy right{0.0, 1.0, 1.0};
    LipschitzConstants sat = certified;
    sat.cost = 2.0;      // L_c du = 4 > 2 C_max
    sat.dynamics = 1.0;  // L_f du / sigma = 20 > 1
    const double expected =
        sat.horizon * (2.0 * sat.cost_max + sat.horizon * sat.cost_max);
    const McEstimate d = policy_distance({right, left, 500}, system, sat, rng.child(2).seed());
    const double err = std::abs(d.value - expected);
    lines.push_back({"lemmas/distance-saturated", err, 1e-12, err <= 1e-12, true});
  }
  {
    // independently coded estimator of the same expectation
    RngStream r = rng.child(3);
    PolicyPair pair{random_policy(r), random_policy(r), 10000};
    const McEstimate a = policy_distance(pair, system, certified, 777);
    double total = 0.0, total_sq = 0.0;
    RngStream oracle_rng(424242);
    for (int m = 0; m < pair.samples; ++m) {
      RngStream traj = oracle_rng.child(m);
      double s = system.s0;
      double acc = 0.0;
      for (int t = 0; t < certified.horizon; ++t) {
        const double gap = std::abs(pair.pi_prime(s) - pair.pi(s));
        const double cost_term = std::min(certified.cost * gap, 2.0 * certified.cost_max);
        const double dyn_term = certified.dynamics * gap / certified.sigma;
        acc += cost_term + certified.horizon * certified.cost_max * std::min(dyn_term, 1.0);
        s = system.a * s + system.b * pair.pi_prime(s) + system.sigma * traj.normal();
      }
      total += acc;
      total_sq += acc * acc;
    }
    const double b_mean = total / pair.samples;
    const double b_var = (total_sq - total * total / pair.samples) / (pair.samples - 1);
    const double b_se = std::sqrt(std::max(b_var, 0.0) / pair.samples);
    const double gap = std::abs(a.value - b_mean);
    const double tol = 3.0 * std::sqrt(a.std_error * a.std_error + b_se * b_se);
    lines.push_back({"lemmas/distance-oracle-agreement", gap, tol, gap <= tol, true});
  }

  for (int i = 0; i < pairs; ++i) {
    RngStream r = rng.child(100 + i);
    PolicyPair pair{random_policy(r), random_policy(r), 10000};
    const CheckReport report = check_cost_comparison(pair, system, certified, r.seed());
    lines.push_back({indexed("lemmas/cost-comparison", i), report.lhs - report.rhs,
                     report.tolerance, report.pass, true});
  }

  {
    ToyLinearSystem exact = system;
    exact.sigma = 0.0;
    exact.horizon = 2;
    RngStream r = rng.child(200);
    PolicyPair pair{random_policy(r), random_policy(r), 1};
    const CheckReport report = check_performance_difference(pair, exact, r.seed());
    lines.push_back({"lemmas/performance-difference-exact", std::abs(report.lhs - report.rhs),
                     report.tolerance, report.pass, true});
  }
  {
    ToyLinearSystem mc = system;
    mc.horizon = 3;
    RngStream r = rng.child(201);
    PolicyPair pair{random_policy(r), random_policy(r), 0};
    const CheckReport report = check_performance_difference(pair, mc, r.seed(), 3000, 300);
    lines.push_back({"lemmas/performance-difference-mc", std::abs(report.lhs - report.rhs),
                     report.tolerance, report.pass, true});
  }
  {
    // invalid preconditions: constants below the certified bounds
    LipschitzConstants halved = certified;
    halved.dynamics *= 0.5;
    halved.cost *= 0.5;
    RngStream r = rng.child(202);
    PolicyPair pair{{2.0, 0.9, 1.0}, {-2.0, -0.9, 1.0}, 10000};
    const CheckReport report = check_cost_comparison(pair, system, halved, r.seed());
    lines.push_back({"lemmas/negative-control-halved-constants", report.lhs - report.rhs,
                     report.tolerance, report.pass, false});
  }
  return lines;
}

std::vector<CheckLine> planner_props_suite(std::uint64_t seed, int instances) {
  RngStream root(seed);
  const EnvSpec spec = EnvSpec::pendulum();
  int monotonicity_violations = 0;
  int dominance_violations = 0;
  int bound_violations = 0;

  for (int i = 0; i < instances; ++i) {
    RngStream rng = root.child(i);
    const int n = 5 + static_cast<int>(rng.integer() % 26);
    Dataset data;
    data.inputs.resize(4, n);
    data.next_states.resize(3, n);
    for (int k = 0; k < n; ++k) {
      const double theta = rng.uniform(-M_PI, M_PI);
      Eigen::VectorXd internal(2);
      internal << theta, rng.uniform(-6.0, 6.0);
      const Eigen::VectorXd s = encode_state(spec, internal);
      data.inputs.col(k) << s, rng.uniform(spec.action_low, spec.action_high);
      data.next_states.col(k) = s + 0.1 * rng.normal_vector(3);
    }
    const DynamicsModel model =
        DynamicsModel::fit(KernelParams::se(4), data, 3, 1e-4, 2.0, 0.1);

    Eigen::VectorXd internal(2);
    internal << rng.uniform(-M_PI, M_PI), rng.uniform(-5.0, 5.0);
    const Eigen::VectorXd s0 = encode_state(spec, internal);

    PlannerConfig config;
    config.horizon = 8 + static_cast<int>(rng.integer() % 8);
    config.particles = 2 + static_cast<int>(rng.integer() % 4);
    config.population = 12 + static_cast<int>(rng.integer() % 12);
    config.elites = 3 + static_cast<int>(rng.integer() % 4);
    config.iterations = 3 + static_cast<int>(rng.integer() % 3);
    config.objective = rng.integer() % 2 == 0 ? ObjectiveMode::intrinsic
                                              : ObjectiveMode::extrinsic;
    config.constraint = ConstraintMode::pessimistic;

    PlanDiagnostics diag;
    const CandidatePlan best = plan(model, spec, s0, config, nullptr, rng.child(1), &diag);
    for (std::size_t k = 1; k < diag.best_score_per_iteration.size(); ++k)
      if (diag.best_score_per_iteration[k] < diag.best_score_per_iteration[k - 1])
        ++monotonicity_violations;
    if ((best.actions.array() < spec.action_low).any() ||
        (best.actions.array() > spec.action_high).any())
      ++bound_violations;

    Eigen::MatrixXd actions(1, config.horizon);
    for (int t = 0; t < config.horizon; ++t)
      actions(0, t) = rng.uniform(spec.action_low, spec.action_high);
    const RngStream shared = rng.child(2);
    const auto pess = evaluate_candidate(model, spec, s0, actions, config.particles, shared,
                                         config.objective, ConstraintMode::pessimistic);
    const auto mean_only = evaluate_candidate(model, spec, s0, actions, config.particles, shared,
                                              config.objective, ConstraintMode::mean_only);
    if (pess.second < mean_only.second) ++dominance_violations;
  }

  std::vector<CheckLine> lines;
  lines.push_back({"planner-props/elite-monotonicity",
                   static_cast<double>(monotonicity_violations), 0.0,
                   monotonicity_violations == 0, true});
  lines.push_back({"planner-props/pessimism-dominance",
                   static_cast<double>(dominance_violations), 0.0, dominance_violations == 0,
                   true});
  lines.push_back({"planner-props/bound-respect", static_cast<double>(bound_violations), 0.0,
                   bound_violations == 0, true});
  return lines;
}

std::vector<CheckLine> run_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "gp-oracle") return gp_oracle_suite(20, seed);
  if (suite == "calibration") return calibration_suite(seed);
  if (suite == "lemmas") return lemmas_suite(seed);
  if (suite == "planner-props") return planner_props_suite(seed);
  if (suite == "all") {
    std::vector<CheckLine> lines = gp_oracle_suite(20, seed);
    for (auto&& l : lemmas_suite(seed)) lines.push_back(std::move(l));
    for (auto&& l : planner_props_suite(seed)) lines.push_back(std::move(l));
    for (auto&& l : calibration_suite(seed)) lines.push_back(std::move(l));
    return lines;
  }
  throw std::invalid_argument("unknown suite '" + suite +
                              "' (expected gp-oracle, calibration, lemmas, planner-props, all)");
}

}  // namespace actsafe
