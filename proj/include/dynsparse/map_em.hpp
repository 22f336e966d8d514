#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dynsparse/dynamic_prior.hpp"
#include "dynsparse/regression_data.hpp"

namespace dynsparse {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Per-time point estimates from either approximate-MAP procedure.
struct MapFit {
  Eigen::MatrixXd beta_hat;  // p x T
  BoolMatrix support;        // |beta_hat| > sparsity_threshold
  double sparsity_threshold = 0.0;
  std::vector<int> em_iters;  // EM iterations, or coordinate-descent sweeps for group lasso
  std::vector<std::vector<double>> objective_trace;
  // Sliding-window group lasso diagnostics; empty for EM.
  std::vector<Eigen::MatrixXd> window_solutions;
  std::vector<double> kkt_residual;
};

struct EmOptions {
  double tol = 1e-8;  // relative objective change
  int max_iter = 100;
  /// Support threshold; defaults to 1e-3 * max |beta_hat|.
  std::optional<double> eps_sparse;
};

struct EmStepResult {
  Eigen::VectorXd beta;
  std::vector<double> trace;  // objective after the initial M-step and each iteration
  int iterations = 0;
  bool converged = false;
};

/// Floor on the E-step delta parameter. A coefficient sitting exactly on
/// its prior mean with delta = 0 would otherwise have E[1/tau] = inf.
inline constexpr double kEmDeltaFloor = 1e-12;

/// log p(beta_t | window) + log p(y_t | beta_t). `window` is p x k with the
/// most recent estimate in the last column; k = 0 gives the stationary prior.
double map_step_objective(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& window, const ModelConfig& config,
                          const Eigen::VectorXd& beta);

/// Analytic gradient of map_step_objective in beta.
Eigen::VectorXd map_step_gradient(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& window, const ModelConfig& config,
                                  const Eigen::VectorXd& beta);

/// EM on the scale-mixture representation of the conditional prior.
///
/// E-step: tau_j | beta_j ~ GIG(nu_j - 1/2, sqrt(delta_j^2 + r_j^2 / (1 - alpha^2)), gamma)
/// with r_j = beta_j - alpha * beta_hat_{j,t-1}; weight w_j = E[1/tau_j].
/// M-step: (X'X / sigma^2 + D_w / (1 - alpha^2)) beta = X'y / sigma^2 + D_w m / (1 - alpha^2).
/// The iteration starts from the M-step with w_j = 1 / E[tau_j] under the prior.
EmStepResult em_map_step(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                         const Eigen::MatrixXd& window, const ModelConfig& config,
                         double tol = 1e-8, int max_iter = 100);

/// em_map_step for t = 1..T, feeding each estimate back into the window.
/// Requires fixed-order mode; errors carry the failing step.
MapFit run_online_map(const RegressionData& data, const ModelConfig& config,
                      const EmOptions& options = {});

/// Thresholds beta_hat into a support matrix; eps defaults to 1e-3 max |beta_hat|.
void apply_sparsity_threshold(MapFit& fit, std::optional<double> eps);

}  // namespace dynsparse
