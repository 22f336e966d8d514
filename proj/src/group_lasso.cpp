#include "dynsparse/group_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "dynsparse/errors.hpp"

namespace dynsparse {

namespace {

int window_width(const WindowProblem& problem) {
  const int w = problem.corr.dim();
  if (static_cast<int>(problem.y.size()) != w || static_cast<int>(problem.X.size()) != w) {
    throw DomainError("WindowProblem: window length does not match the correlation dimension");
  }
  return w;
}

Eigen::Index predictor_count(const WindowProblem& problem) { return problem.X.front().cols(); }

std::vector<Eigen::VectorXd> residuals(const WindowProblem& problem, const Eigen::MatrixXd& beta) {
  std::vector<Eigen::VectorXd> r(problem.y.size());
  for (std::size_t s = 0; s < r.size(); ++s) {
    r[s] = problem.y[s] - problem.X[s] * beta.col(static_cast<Eigen::Index>(s));
  }
  return r;
}

// Whitened gradient of the smooth part for group j: -L' c / sigma2 with
// c_s = x_{s,j}' r_s.
Eigen::VectorXd group_gradient(const WindowProblem& problem, const Eigen::MatrixXd& lower,
                               const std::vector<Eigen::VectorXd>& r, Eigen::Index j) {
  const Eigen::Index w = lower.rows();
  Eigen::VectorXd c(w);
  for (Eigen::Index s = 0; s < w; ++s) {
    c[s] = problem.X[static_cast<std::size_t>(s)].col(j).dot(r[static_cast<std::size_t>(s)]);
  }
  return -(lower.transpose() * c) / problem.sigma2;
}

struct GroupSystem {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

// Solves sum_i c_i^2 / (lambda_i s + gamma)^2 = 1 for s > 0; the left side
// is decreasing in s and exceeds 1 at s = 0 when ||c|| > gamma.
double group_magnitude(const Eigen::VectorXd& lambda, const Eigen::VectorXd& c, double gamma) {
  auto excess = [&](double s) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double denom = lambda[i] * s + gamma;
      sum += c[i] * c[i] / (denom * denom);
    }
    return sum - 1.0;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (excess(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("solve_window: group magnitude is unbounded (singular block)");
  }
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

WindowProblem make_window_problem(const RegressionData& data, int last, int d, double alpha, double gamma,
                                  double sigma2) {
  if (d < 0 || last < d || last >= data.T()) {
    throw DomainError("make_window_problem: window of length " + std::to_string(d + 1) + " ending at step " +
                      std::to_string(last) + " does not fit in T=" + std::to_string(data.T()));
  }
  if (!(gamma > 0.0) || !(sigma2 > 0.0)) throw DomainError("make_window_problem: gamma and sigma2 must be positive");
  WindowProblem problem{{}, {}, gamma, sigma2, build_sigma(d + 1, alpha)};
  for (int s = last - d; s <= last; ++s) {
    problem.y.push_back(data.y(s));
    problem.X.push_back(data.X(s));
  }
  return problem;
}

double window_penalty(const WindowProblem& problem, const Eigen::MatrixXd& beta) {
  double total = 0.0;
  std::vector<double> row(static_cast<std::size_t>(beta.cols()));
  for (Eigen::Index j = 0; j < beta.rows(); ++j) {
    for (Eigen::Index s = 0; s < beta.cols(); ++s) row[static_cast<std::size_t>(s)] = beta(j, s);
    total += mahalanobis_norm(row, problem.corr);
  }
  return problem.gamma * total;
}

double window_objective(const WindowProblem& problem, const Eigen::MatrixXd& beta) {
  const int w = window_width(problem);
  if (beta.cols() != w || beta.rows() != predictor_count(problem)) {
    throw DomainError("window_objective: beta has the wrong shape");
  }
  double rss = 0.0;
  for (const auto& r : residuals(problem, beta)) rss += r.squaredNorm();
  return 0.5 * rss / problem.sigma2 + window_penalty(problem, beta);
}

double null_threshold(const WindowProblem& problem) {
  const int w = window_width(problem);
  const Eigen::MatrixXd lower = problem.corr.cholesky_factor();
  const Eigen::Index p = predictor_count(problem);
  const auto r = residuals(problem, Eigen::MatrixXd::Zero(p, w));
  double worst = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) worst = std::max(worst, group_gradient(problem, lower, r, j).norm());
  return worst;
}

double kkt_residual(const WindowProblem& problem, const Eigen::MatrixXd& beta) {
  window_width(problem);
  const Eigen::MatrixXd lower = problem.corr.cholesky_factor();
  const auto r = residuals(problem, beta);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.rows(); ++j) {
    const Eigen::VectorXd g = group_gradient(problem, lower, r, j);
    const Eigen::VectorXd theta =
        lower.triangularView<Eigen::Lower>().solve(beta.row(j).transpose().eval());
    const double norm = theta.norm();
    const double violation =
        norm == 0.0 ? std::max(0.0, g.norm() - problem.gamma) : (g + problem.gamma * theta / norm).norm();
    worst = std::max(worst, violation);
  }
  return worst;
}

WindowSolution solve_window(const WindowProblem& problem, double tol, int max_iter, std::span<const int> order) {
  const int w = window_width(problem);
  const Eigen::Index p = predictor_count(problem);
  for (const auto& x : problem.X) {
    if (x.cols() != p) throw DomainError("solve_window: inconsistent predictor count across the window");
  }
  if (!(tol > 0.0) || max_iter < 1) throw DomainError("solve_window: need tol > 0 and max_iter >= 1");
  std::vector<int> sweep(order.begin(), order.end());
  if (sweep.empty()) {
    sweep.resize(static_cast<std::size_t>(p));
    std::iota(sweep.begin(), sweep.end(), 0);
  } else {
    std::vector<int> sorted = sweep;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (sorted.size() != static_cast<std::size_t>(p) || sorted[i] != static_cast<int>(i)) {
        throw DomainError("solve_window: order must be a permutation of 0..p-1");
      }
    }
  }

  const Eigen::MatrixXd lower = problem.corr.cholesky_factor();
  const double sigma2 = problem.sigma2;
  const double gamma = problem.gamma;

  // Per-group curvature H_j = L' diag(||x_{s,j}||^2) L / sigma2, fixed across sweeps.
  std::vector<GroupSystem> systems(static_cast<std::size_t>(p));
  Eigen::MatrixXd col_norm2(p, w);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (int s = 0; s < w; ++s) col_norm2(j, s) = problem.X[static_cast<std::size_t>(s)].col(j).squaredNorm();
    const Eigen::MatrixXd h = lower.transpose() * col_norm2.row(j).transpose().asDiagonal() * lower / sigma2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    systems[static_cast<std::size_t>(j)] = {eig.eigenvalues().cwiseMax(0.0), eig.eigenvectors()};
  }

  WindowSolution out;
  out.beta = Eigen::MatrixXd::Zero(p, w);
  auto r = residuals(problem, out.beta);
  out.objective_trace.push_back(window_objective(problem, out.beta));

  Eigen::VectorXd c(w);
  for (int sweep_count = 1; sweep_count <= max_iter; ++sweep_count) {
    for (int j : sweep) {
      // c_s = x_{s,j}' (partial residual without group j)
      for (int s = 0; s < w; ++s) {
        const auto ss = static_cast<std::size_t>(s);
        c[s] = problem.X[ss].col(j).dot(r[ss]) + col_norm2(j, s) * out.beta(j, s);
      }
      const Eigen::VectorXd g = lower.transpose() * c / sigma2;
      Eigen::VectorXd updated = Eigen::VectorXd::Zero(w);
      if (g.norm() > gamma) {
        const auto& sys = systems[static_cast<std::size_t>(j)];
        const Eigen::VectorXd ct = sys.eigenvectors.transpose() * g;
        const double s = group_magnitude(sys.eigenvalues, ct, gamma);
        const Eigen::VectorXd scaled =
            (ct.array() * s / (sys.eigenvalues.array() * s + gamma)).matrix();
        updated = lower * (sys.eigenvectors * scaled);
      }
      for (int s = 0; s < w; ++s) {
        const double change = updated[s] - out.beta(j, s);
        if (change != 0.0) r[static_cast<std::size_t>(s)] -= change * problem.X[static_cast<std::size_t>(s)].col(j);
      }
      out.beta.row(j) = updated.transpose();
    }
    out.sweeps = sweep_count;
    out.objective_trace.push_back(window_objective(problem, out.beta));
    out.kkt_residual = kkt_residual(problem, out.beta);
    if (out.kkt_residual < tol) return out;
  }
  throw NumericalError("solve_window: no convergence after " + std::to_string(max_iter) +
                       " sweeps, KKT residual " + std::to_string(out.kkt_residual));
}

MapFit run_sliding_window(const RegressionData& data, const ModelConfig& config, const GlassoOptions& options) {
  if (data.p() != config.p()) throw DomainError("run_sliding_window: data and config disagree on p");
  const int d = config.order();
  const int T = data.T();
  if (T <= d) {
    throw DomainError("run_sliding_window: need T > d (T=" + std::to_string(T) + ", d=" + std::to_string(d) + ")");
  }
  const double sigma2 = config.sigma() * config.sigma();
  const int windows = T - d;
  std::vector<WindowSolution> solutions(static_cast<std::size_t>(windows));
  for_each_index(options.exec, solutions.size(), [&](std::size_t i) {
    const int last = d + static_cast<int>(i);
    try {
      const WindowProblem problem = make_window_problem(data, last, d, config.alpha(), config.gamma(), sigma2);
      solutions[i] = solve_window(problem, options.tol, options.max_iter);
    } catch (const NumericalError& e) {
      throw NumericalError("run_sliding_window at t=" + std::to_string(data.label(last)) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("run_sliding_window at t=" + std::to_string(data.label(last)) + ": " + e.what());
    }
  });

  MapFit fit;
  fit.beta_hat.resize(data.p(), T);
  fit.em_iters.resize(static_cast<std::size_t>(T));
  fit.objective_trace.resize(static_cast<std::size_t>(T));
  fit.kkt_residual.resize(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const auto& sol = solutions[static_cast<std::size_t>(std::max(0, t - d))];
    fit.beta_hat.col(t) = t < d ? sol.beta.col(t) : sol.beta.col(d);
    fit.em_iters[static_cast<std::size_t>(t)] = sol.sweeps;
    fit.objective_trace[static_cast<std::size_t>(t)] = sol.objective_trace;
    fit.kkt_residual[static_cast<std::size_t>(t)] = sol.kkt_residual;
  }
  fit.window_solutions.reserve(solutions.size());
  for (auto& sol : solutions) fit.window_solutions.push_back(std::move(sol.beta));
  fit.sparsity_threshold = options.eps_sparse;
  fit.support = fit.beta_hat.array().abs() > options.eps_sparse;
  return fit;
}

}  // namespace dynsparse
