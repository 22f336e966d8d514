#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "dynsparse/dynamic_prior.hpp"
#include "dynsparse/map_em.hpp"
#include "dynsparse/parallel.hpp"
#include "dynsparse/regression_data.hpp"

namespace dynsparse {

/// min over beta (p x w, w = corr.dim()):
///   (1 / 2 sigma2) sum_s ||y_s - X_s beta_{:,s}||^2 + gamma sum_j ||beta_{j,:}||_Sigma
/// with ||x||_Sigma = sqrt(x' Sigma^{-1} x). Columns are oldest first.
struct WindowProblem {
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::MatrixXd> X;
  double gamma;
  double sigma2;
  WindowCorrelation corr;
};

/// Window of length d + 1 ending at step `last` (0-based). Throws
/// DomainError if the window does not fit or gamma, sigma2 <= 0.
WindowProblem make_window_problem(const RegressionData& data, int last, int d, double alpha,
                                  double gamma, double sigma2);

struct WindowSolution {
  Eigen::MatrixXd beta;  // p x (d + 1)
  int sweeps = 0;
  double kkt_residual = 0.0;
  std::vector<double> objective_trace;  // initial point then one value per sweep
};

double window_objective(const WindowProblem& problem, const Eigen::MatrixXd& beta);

/// gamma * sum_j ||beta_j||_Sigma via the tridiagonal inverse.
double window_penalty(const WindowProblem& problem, const Eigen::MatrixXd& beta);

/// Largest group-gradient norm at beta = 0 in whitened coordinates. Every
/// gamma at or above it has the all-zero solution.
double null_threshold(const WindowProblem& problem);

/// Max over groups of the subgradient-condition violation, whitened:
/// zero group: max(0, ||g_j|| - gamma); nonzero: ||g_j + gamma theta_j / ||theta_j|| ||.
double kkt_residual(const WindowProblem& problem, const Eigen::MatrixXd& beta);

/// Block coordinate descent on whitened groups theta_j = L^{-1} beta_j with
/// Sigma = L L'. Each block update is the exact group minimizer: zero when
/// the group gradient is inside the gamma-ball, else theta = (H + gamma/s I)^{-1} g
/// with s = ||theta|| found by bisection. Stops once kkt_residual < tol.
/// `order` permutes the sweep (default 0..p-1). Throws NumericalError with
/// the residual if max_iter sweeps do not suffice.
WindowSolution solve_window(const WindowProblem& problem, double tol = 1e-8, int max_iter = 10000,
                            std::span<const int> order = {});

struct GlassoOptions {
  double tol = 1e-8;
  int max_iter = 10000;
  /// Support threshold; exact zeros define the support by default.
  double eps_sparse = 0.0;
  Execution exec = Execution::parallel;
};

/// Solves the window ending at each t >= d and reports its last column.
/// Steps t < d take their column from the first full window. Windows are
/// independent and run concurrently. Requires fixed-order mode and T > d.
MapFit run_sliding_window(const RegressionData& data, const ModelConfig& config,
                          const GlassoOptions& options = {});

}  // namespace dynsparse
