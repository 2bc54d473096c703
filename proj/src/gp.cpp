#include "actsafe/gp.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace actsafe {

KernelParams KernelParams::se(int input_dim, double lengthscale, double signal_std) {
  KernelParams k;
  k.kind = KernelKind::squared_exponential;
  k.lengthscales = Eigen::VectorXd::Constant(input_dim, lengthscale);
  k.signal_std = signal_std;
  return k;
}

void KernelParams::validate() const {
  if (lengthscales.size() == 0 || (lengthscales.array() <= 0.0).any())
    throw std::invalid_argument("KernelParams: lengthscales must be positive");
  if (!(signal_std > 0.0)) throw std::invalid_argument("KernelParams: signal_std must be positive");
}

namespace {

constexpr double kSqrt5 = 2.2360679774997896;

// Squared scaled distances between column sets, via the Gram expansion.
Eigen::MatrixXd scaled_sqdist(const Eigen::MatrixXd& A, const Eigen::VectorXd& a_sqnorm,
                              const Eigen::MatrixXd& B) {
  Eigen::VectorXd b_sqnorm = B.colwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * A.transpose() * B).eval();
  d2.colwise() += a_sqnorm;
  d2.rowwise() += b_sqnorm.transpose();
  return d2.cwiseMax(0.0);
}

Eigen::MatrixXd kernel_from_sqdist(const KernelParams& kernel, Eigen::MatrixXd d2) {
  const double s2 = kernel.signal_std * kernel.signal_std;
  if (kernel.kind == KernelKind::squared_exponential)
    return (s2 * (-0.5 * d2.array()).exp()).matrix();
  Eigen::ArrayXXd r = d2.array().sqrt();
  return (s2 * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r.square()) * (-kSqrt5 * r).exp()).matrix();
}

Eigen::MatrixXd scale_columns(const Eigen::MatrixXd& X, const Eigen::VectorXd& lengthscales) {
  return lengthscales.cwiseInverse().asDiagonal() * X;
}

}  // namespace

Eigen::MatrixXd GpModel::kernel_matrix(const Eigen::MatrixXd& Z1, const Eigen::MatrixXd& Z2) const {
  Eigen::MatrixXd A = scale_columns(Z1, kernel_.lengthscales);
  Eigen::MatrixXd B = scale_columns(Z2, kernel_.lengthscales);
  Eigen::VectorXd a_sqnorm = A.colwise().squaredNorm();
  return kernel_from_sqdist(kernel_, scaled_sqdist(A, a_sqnorm, B));
}

GpModel GpModel::prior(const KernelParams& kernel, int input_dim, int output_dim,
                       double noise_var, double beta, double delta) {
  return fit(kernel, Eigen::MatrixXd(input_dim, 0), Eigen::MatrixXd(output_dim, 0), noise_var,
             beta, delta);
}

GpModel GpModel::fit(const KernelParams& kernel, const Eigen::MatrixXd& X,
                     const Eigen::MatrixXd& Y, double noise_var, double beta, double delta) {
  kernel.validate();
  if (kernel.lengthscales.size() != X.rows())
    throw std::invalid_argument("GpModel::fit: lengthscale/input dimension mismatch");
  if (X.cols() != Y.cols()) throw std::invalid_argument("GpModel::fit: input/target count mismatch");
  if (!(noise_var > 0.0)) throw std::invalid_argument("GpModel::fit: noise_var must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("GpModel::fit: delta in (0,1]");
  if (beta < 0.0) throw std::invalid_argument("GpModel::fit: beta must be nonnegative");
  if (!X.allFinite() || !Y.allFinite())
    throw std::invalid_argument("GpModel::fit: non-finite training data");
  if (X.cols() > 4000) throw FitError("GpModel::fit: dataset exceeds the 4000-point cap");

  GpModel m;
  m.kernel_ = kernel;
  m.input_dim_ = static_cast<int>(X.rows());
  m.output_dim_ = static_cast<int>(Y.rows());
  m.inputs_ = X;
  m.targets_ = Y;
  m.scaled_inputs_ = scale_columns(X, kernel.lengthscales);
  m.scaled_sqnorm_ = m.scaled_inputs_.colwise().squaredNorm();
  m.noise_var_ = noise_var;
  m.beta_ = beta;
  m.delta_ = delta;

  const int n = m.size();
  if (n == 0) return m;

  Eigen::MatrixXd gram = kernel_from_sqdist(kernel, scaled_sqdist(m.scaled_inputs_,
                                                                  m.scaled_sqnorm_,
                                                                  m.scaled_inputs_));
  for (double jitter : {0.0, 1e-8, 1e-6, 1e-4}) {
    Eigen::MatrixXd reg = gram;
    reg.diagonal().array() += noise_var + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() == Eigen::Success) {
      m.jitter_ = jitter;
      m.chol_lower_ = llt.matrixL();
      m.weights_ = llt.solve(Y.transpose());
      m.inv_gram_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
      return m;
    }
  }
  throw FitError("GpModel::fit: Gram factorization failed beyond the jitter cap");
}

PosteriorEval GpModel::posterior(const Eigen::VectorXd& z) const {
  if (z.size() != input_dim_) throw std::invalid_argument("GpModel::posterior: bad input dimension");
  if (!z.allFinite()) throw std::invalid_argument("GpModel::posterior: non-finite input");

  const double prior_var = kernel_.signal_std * kernel_.signal_std;
  PosteriorEval out;
  if (size() == 0) {
    out.mean = Eigen::VectorXd::Zero(output_dim_);
    out.std = Eigen::VectorXd::Constant(output_dim_, kernel_.signal_std);
    return out;
  }

  Eigen::VectorXd zs = z.cwiseQuotient(kernel_.lengthscales);
  Eigen::MatrixXd d2 = scaled_sqdist(scaled_inputs_, scaled_sqnorm_, zs);
  Eigen::VectorXd kvec = kernel_from_sqdist(kernel_, std::move(d2)).col(0);

  out.mean = weights_.transpose() * kvec;
  Eigen::VectorXd v = chol_lower_.triangularView<Eigen::Lower>().solve(kvec);
  double var = prior_var - v.squaredNorm();
  var = std::min(std::max(var, 0.0), prior_var);
  out.std = Eigen::VectorXd::Constant(output_dim_, std::max(std::sqrt(var), kStdFloor));
  return out;
}

void GpModel::posterior_batch(const Eigen::MatrixXd& Z, Eigen::MatrixXd& mean,
                              Eigen::VectorXd& std) const {
  const Eigen::Index q = Z.cols();
  const double prior_var = kernel_.signal_std * kernel_.signal_std;
  if (size() == 0) {
    mean = Eigen::MatrixXd::Zero(output_dim_, q);
    std = Eigen::VectorXd::Constant(q, kernel_.signal_std);
    return;
  }
  Eigen::MatrixXd zs = scale_columns(Z, kernel_.lengthscales);
  Eigen::MatrixXd kstar = kernel_from_sqdist(kernel_, scaled_sqdist(scaled_inputs_,
                                                                    scaled_sqnorm_, zs));
  mean.noalias() = weights_.transpose() * kstar;
  Eigen::MatrixXd w;
  w.noalias() = inv_gram_.selfadjointView<Eigen::Lower>() * kstar;
  std = (prior_var - kstar.cwiseProduct(w).colwise().sum().array())
            .max(0.0)
            .min(prior_var)
            .sqrt()
            .max(kStdFloor)
            .transpose();
}

Eigen::VectorXd GpModel::ts1_sample(const Eigen::VectorXd& z, RngStream& rng) const {
  PosteriorEval post = posterior(z);
  return post.mean + post.std.cwiseProduct(rng.normal_vector(output_dim_));
}

double GpModel::information_gain() const {
  if (size() == 0) return 0.0;
  const double log_det_half = chol_lower_.diagonal().array().log().sum();
  return log_det_half - 0.5 * size() * std::log(noise_var_);
}

double beta_value(const BetaSchedule& schedule, double delta, double gamma_n) {
  if (schedule.kind == BetaSchedule::Kind::constant) return schedule.value;
  return schedule.rkhs_bound + std::sqrt(2.0 * (gamma_n + std::log(1.0 / delta)));
}

double theorem_constant(double cost_max, double reward_max, double sigma0, int state_dim) {
  return (1.0 + std::sqrt(static_cast<double>(state_dim))) *
         std::max({cost_max, reward_max, sigma0});
}

double appendix_constant(double cost_max, double reward_max, double sigma0, double sigma,
                         int state_dim) {
  return theorem_constant(cost_max, reward_max, sigma0, state_dim) / sigma;
}

std::optional<long long> sample_complexity_n_star(
    const NStarParams& p, const std::function<double(long long)>& beta_schedule,
    const std::function<double(long long)>& gamma_schedule, long long cap) {
  if (!(p.epsilon > 0.0)) throw std::invalid_argument("n_star: epsilon must be positive");
  if (!(p.sigma > 0.0) || !(p.sigma0 > 0.0))
    throw std::invalid_argument("n_star: sigma and sigma0 must be positive");

  const double t6 = std::pow(p.horizon, 6.0);
  const double c4 = std::pow(p.constant, 4.0);
  const double ratio = p.sigma0 * p.sigma0 / (p.sigma * p.sigma);
  const double rhs = (p.expansions + 1.0) * t6 * c4 * p.state_dim * p.sigma0 * p.sigma0 /
                     std::log1p(ratio) / (p.epsilon * p.epsilon);

  for (long long n = 1; n <= cap; ++n) {
    const double beta = beta_schedule(n);
    const double gamma = gamma_schedule(n);
    const double denom = gamma * std::pow(beta, 4.0);
    if (denom <= 0.0 || static_cast<double>(n) / denom >= rhs) return n;
  }
  return std::nullopt;
}

void Dataset::append(const Trajectory& trajectory) {
  const int ds = static_cast<int>(trajectory.states.rows());
  const int da = static_cast<int>(trajectory.actions.rows());
  const int steps = trajectory.length();
  const int old = size();
  if (old == 0) {
    inputs.resize(ds + da, 0);
    next_states.resize(ds, 0);
  }
  inputs.conservativeResize(Eigen::NoChange, old + steps);
  next_states.conservativeResize(Eigen::NoChange, old + steps);
  for (int t = 0; t < steps; ++t) {
    inputs.col(old + t) << trajectory.states.col(t), trajectory.actions.col(t);
    next_states.col(old + t) = trajectory.states.col(t + 1);
  }
}

DynamicsModel DynamicsModel::fit(const KernelParams& kernel, const Dataset& data, int state_dim,
                                 double noise_var, double beta, double delta) {
  if (data.size() == 0) {
    const int action_dim = static_cast<int>(kernel.lengthscales.size()) - state_dim;
    return prior(kernel, state_dim, action_dim, noise_var, beta, delta);
  }
  Eigen::MatrixXd deltas = data.next_states - data.inputs.topRows(state_dim);
  return DynamicsModel(GpModel::fit(kernel, data.inputs, deltas, noise_var, beta, delta),
                       state_dim);
}

DynamicsModel DynamicsModel::prior(const KernelParams& kernel, int state_dim, int action_dim,
                                   double noise_var, double beta, double delta) {
  return DynamicsModel(
      GpModel::prior(kernel, state_dim + action_dim, state_dim, noise_var, beta, delta),
      state_dim);
}

PosteriorEval DynamicsModel::predict(const Eigen::VectorXd& z) const {
  PosteriorEval post = gp_.posterior(z);
  post.mean += z.head(state_dim_);
  return post;
}

void DynamicsModel::predict_batch(const Eigen::MatrixXd& Z, Eigen::MatrixXd& mean,
                                  Eigen::VectorXd& std) const {
  gp_.posterior_batch(Z, mean, std);
  mean += Z.topRows(state_dim_);
}

Eigen::VectorXd DynamicsModel::ts1_step(const Eigen::VectorXd& z, RngStream& rng) const {
  PosteriorEval post = predict(z);
  return post.mean + post.std.cwiseProduct(rng.normal_vector(state_dim_));
}

}  // namespace actsafe
