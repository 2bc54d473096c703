#pragma once

#include <functional>
#include <optional>
#include <stdexcept>

#include <Eigen/Core>

#include "actsafe/env.hpp"
#include "actsafe/rng.hpp"

namespace actsafe {

enum class KernelKind { squared_exponential, matern52 };

struct KernelParams {
  KernelKind kind = KernelKind::squared_exponential;
  Eigen::VectorXd lengthscales;  // one per input dimension, > 0
  double signal_std = 1.0;       // sigma_0 > 0

  static KernelParams se(int input_dim, double lengthscale = 1.0, double signal_std = 1.0);
  void validate() const;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PosteriorEval {
  Eigen::VectorXd mean;  // per output dimension
  Eigen::VectorXd std;   // per output dimension, >= kStdFloor
};

inline constexpr double kStdFloor = 1e-9;

// Exact multi-output GP regression with a shared stationary kernel and
// zero prior mean:
//   mean_j(z) = k_n(z)^T (K_n + noise_var I)^{-1} y_j
//   var(z)    = k(z,z) - k_n(z)^T (K_n + noise_var I)^{-1} k_n(z)
// The posterior variance is identical across output dimensions. Fitted
// models are immutable; all queries are const and thread-safe.
class GpModel {
 public:
  // Inputs are columns of X (input_dim x n); targets columns of Y
  // (output_dim x n). Factorization retries with diagonal jitter
  // 1e-8, 1e-6, 1e-4 before failing. n is capped at 4000.
  static GpModel fit(const KernelParams& kernel, const Eigen::MatrixXd& X,
                     const Eigen::MatrixXd& Y, double noise_var, double beta, double delta);

  // Data-free prior model.
  static GpModel prior(const KernelParams& kernel, int input_dim, int output_dim,
                       double noise_var, double beta, double delta);

  PosteriorEval posterior(const Eigen::VectorXd& z) const;

  // Column-wise posterior for a batch of queries Z (input_dim x Q).
  // mean is output_dim x Q; std has one entry per query (shared across
  // output dimensions).
  void posterior_batch(const Eigen::MatrixXd& Z, Eigen::MatrixXd& mean,
                       Eigen::VectorXd& std) const;

  // One draw from N(mean(z), diag(std(z)^2)).
  Eigen::VectorXd ts1_sample(const Eigen::VectorXd& z, RngStream& rng) const;

  // Realized information gain of the training inputs,
  // 1/2 log det(I + noise_var^{-1} K_n); zero for the prior.
  double information_gain() const;

  int size() const { return static_cast<int>(inputs_.cols()); }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  double beta() const { return beta_; }
  // Calibration scaling is the one post-fit knob; set it before sharing
  // the model across threads.
  void set_beta(double beta) { beta_ = beta; }
  double delta() const { return delta_; }
  double noise_var() const { return noise_var_; }
  double jitter() const { return jitter_; }
  const KernelParams& kernel() const { return kernel_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::MatrixXd& targets() const { return targets_; }
  const Eigen::MatrixXd& gram_factor() const { return chol_lower_; }

  // k(Z1_i, Z2_j) for column inputs; exposed for tests and oracles.
  Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& Z1, const Eigen::MatrixXd& Z2) const;

 private:
  GpModel() = default;

  KernelParams kernel_;
  int input_dim_ = 0;
  int output_dim_ = 0;
  Eigen::MatrixXd inputs_;        // input_dim x n
  Eigen::MatrixXd targets_;       // output_dim x n
  Eigen::MatrixXd scaled_inputs_; // inputs with lengthscale division applied
  Eigen::VectorXd scaled_sqnorm_; // column squared norms of scaled_inputs_
  double noise_var_ = 1e-4;
  double beta_ = 2.0;
  double delta_ = 0.1;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_lower_;    // L with L L^T = K + (noise_var + jitter) I
  Eigen::MatrixXd weights_;       // (K + noise_var I)^{-1} Y^T   (n x output_dim)
  Eigen::MatrixXd inv_gram_;      // (K + noise_var I)^{-1}, for batched variance
};

// Confidence scaling for the calibrated model bands.
struct BetaSchedule {
  enum class Kind { constant, theory };
  Kind kind = Kind::constant;
  double value = 2.0;       // constant schedule
  double rkhs_bound = 1.0;  // B for the theory schedule
};

// constant: value.  theory: B + sqrt(2 (gamma_n + log(1/delta))), with
// gamma_n the information gain after episode n. Nondecreasing in n as
// long as gamma_n is.
double beta_value(const BetaSchedule& schedule, double delta, double gamma_n);

struct NStarParams {
  double expansions = 1.0;  // H
  double horizon = 10.0;    // T
  double constant = 1.0;    // C; see theorem_constant / appendix_constant
  double sigma0 = 1.0;
  double sigma = 0.1;
  int state_dim = 1;
  double epsilon = 0.1;
};

// The two published normalizations of the constant C; the calculator does
// not choose between them, callers do.
double theorem_constant(double cost_max, double reward_max, double sigma0, int state_dim);
double appendix_constant(double cost_max, double reward_max, double sigma0, double sigma,
                         int state_dim);

// Smallest n with n / (gamma(n) beta(n)^4) >=
// (H+1) T^6 C^4 d_s sigma0^2 / log(1 + sigma0^2/sigma^2) / eps^2,
// or nullopt if no n <= cap satisfies it.
std::optional<long long> sample_complexity_n_star(
    const NStarParams& params, const std::function<double(long long)>& beta_schedule,
    const std::function<double(long long)>& gamma_schedule, long long cap = 1000000000LL);

// (state, action) -> next state observations; the GP training data.
struct Dataset {
  Eigen::MatrixXd inputs;       // (ds + da) x n
  Eigen::MatrixXd next_states;  // ds x n

  int size() const { return static_cast<int>(inputs.cols()); }
  void append(const Trajectory& trajectory);
};

// GP dynamics model over z = (s, a). The GP is trained on state
// differences s' - s, so the data-free prediction is "stay where you
// are" with sigma_0 uncertainty.
class DynamicsModel {
 public:
  static DynamicsModel fit(const KernelParams& kernel, const Dataset& data, int state_dim,
                           double noise_var, double beta, double delta);
  static DynamicsModel prior(const KernelParams& kernel, int state_dim, int action_dim,
                             double noise_var, double beta, double delta);

  PosteriorEval predict(const Eigen::VectorXd& z) const;
  void predict_batch(const Eigen::MatrixXd& Z, Eigen::MatrixXd& mean,
                     Eigen::VectorXd& std) const;
  Eigen::VectorXd ts1_step(const Eigen::VectorXd& z, RngStream& rng) const;

  const GpModel& gp() const { return gp_; }
  GpModel& gp() { return gp_; }
  int data_size() const { return gp_.size(); }
  int state_dim() const { return state_dim_; }
  double beta() const { return gp_.beta(); }

 private:
  DynamicsModel(GpModel gp, int state_dim) : gp_(std::move(gp)), state_dim_(state_dim) {}
  GpModel gp_;
  int state_dim_ = 0;
};

}  // namespace actsafe
